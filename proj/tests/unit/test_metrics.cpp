#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rhoest/families.hpp"
#include "rhoest/metrics.hpp"
#include "rhoest/rng.hpp"

using namespace rhoest;

namespace {

DensityCandidate categorical(const std::shared_ptr<const SampleSpace>& space,
                             std::vector<double> p, const std::string& id) {
  return categorical_candidate(space, std::move(p), id);
}

std::vector<double> random_simplex(Rng& rng, std::size_t k) {
  std::vector<double> p(k);
  double sum = 0.0;
  for (auto& v : p) {
    v = -std::log(rng.uniform01());
    sum += v;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    p[i] /= sum;
    acc += p[i];
  }
  p[k - 1] = 1.0 - acc;
  return p;
}

}  // namespace

TEST_CASE("hellinger2 on discrete spaces") {
  auto space = SampleSpace::discrete({0.0, 1.0});
  auto p = categorical(space, {0.5, 0.5}, "p");
  auto q = categorical(space, {0.9, 0.1}, "q");
  CHECK(hellinger2(p, p) == doctest::Approx(0.0).epsilon(1e-15));
  const double expected = oracles::discrete_h2({0.5, 0.5}, {0.9, 0.1});
  CHECK(expected == doctest::Approx(0.105573).epsilon(1e-5));
  CHECK(hellinger2(p, q) == doctest::Approx(expected).epsilon(1e-14));

  auto a = categorical(space, {1.0, 0.0}, "a");
  auto b = categorical(space, {0.0, 1.0}, "b");
  CHECK(hellinger2(a, b) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("hellinger2 gaussian quadrature matches the closed form") {
  auto net = gaussian_scale_location_net(-3.0, 3.0, 3, 0.5, 2.0, 3);
  auto space = space_for_emissions(net);
  auto c0 = make_emission_candidate(net[0], space, "g0");
  const double z1 = net[0].params[0], s1 = net[0].params[1];

  // Unit-variance pair one location apart: h² = 1 − e^{−1/8}.
  EmissionSpec e1{"gaussian", {0.0, 1.0}, {}};
  EmissionSpec e2{"gaussian", {1.0, 1.0}, {}};
  auto sp = space_for_emissions({e1, e2});
  auto g1 = make_emission_candidate(e1, sp, "g1");
  auto g2 = make_emission_candidate(e2, sp, "g2");
  CHECK(oracles::gaussian_h2(0, 1, 1, 1) ==
        doctest::Approx(1.0 - std::exp(-0.125)).epsilon(1e-12));
  CHECK(hellinger2(g1, g2) ==
        doctest::Approx(oracles::gaussian_h2(0, 1, 1, 1)).epsilon(1e-9));

  // 50 seeded random pairs against the closed form.
  Rng rng(20240811, 7);
  for (int i = 0; i < 50; ++i) {
    const double za = rng.uniform(-3.0, 3.0), zb = rng.uniform(-3.0, 3.0);
    const double sa = rng.uniform(0.5, 2.0), sb = rng.uniform(0.5, 2.0);
    EmissionSpec ea{"gaussian", {za, sa}, {}};
    EmissionSpec eb{"gaussian", {zb, sb}, {}};
    auto pair_space = space_for_emissions({ea, eb});
    auto pa = make_emission_candidate(ea, pair_space, "pa");
    auto pb = make_emission_candidate(eb, pair_space, "pb");
    const double got = hellinger2(pa, pb);
    const double want = oracles::gaussian_h2(za, sa, zb, sb);
    CHECK(std::fabs(got - want) <= 1e-6);
  }
  (void)c0;
  (void)z1;
  (void)s1;
}

TEST_CASE("total variation and KL examples") {
  auto space = SampleSpace::discrete({0.0, 1.0});
  auto p = categorical(space, {0.5, 0.5}, "p");
  auto q = categorical(space, {0.9, 0.1}, "q");
  auto r = categorical(space, {0.25, 0.75}, "r");
  auto a = categorical(space, {1.0, 0.0}, "a");
  auto b = categorical(space, {0.0, 1.0}, "b");

  CHECK(total_variation(p, p) == doctest::Approx(0.0));
  CHECK(total_variation(a, b) == doctest::Approx(1.0));
  CHECK(total_variation(p, q) == doctest::Approx(0.4).epsilon(1e-14));

  CHECK(kl_divergence(p, p) == doctest::Approx(0.0));
  const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  CHECK(expected == doctest::Approx(0.143841).epsilon(1e-5));
  CHECK(kl_divergence(p, r) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(std::isinf(kl_divergence(a, b)));
}

TEST_CASE("finite model dimension and VC index") {
  CHECK(finite_model_dimension(1) == doctest::Approx(9.0 * std::log(2.0)));
  CHECK(finite_model_dimension(1) == doctest::Approx(6.23832).epsilon(1e-5));
  CHECK(finite_model_dimension(20) == doctest::Approx(9.0 * std::log(40.0)));
  CHECK(finite_model_dimension(20) == doctest::Approx(33.20).epsilon(1e-3));
  CHECK(finite_model_dimension(1) < finite_model_dimension(20));

  CHECK(vc_index_finite(1) == doctest::Approx(1.0));
  CHECK(vc_index_finite(8) == doctest::Approx(4.0));
  CHECK(vc_index_finite(20) == doctest::Approx(5.3219).epsilon(1e-4));
  CHECK_THROWS_AS(vc_index_finite(0), std::invalid_argument);
}

TEST_CASE("metric axioms and standard sandwiches on random triples") {
  auto space = SampleSpace::discrete({0.0, 1.0, 2.0, 3.0, 4.0});
  Rng rng(99, 1);
  for (int rep = 0; rep < 200; ++rep) {
    auto p = categorical(space, random_simplex(rng, 5), "p");
    auto q = categorical(space, random_simplex(rng, 5), "q");
    auto r = categorical(space, random_simplex(rng, 5), "r");
    const double hpq = std::sqrt(hellinger2(p, q));
    const double hqp = std::sqrt(hellinger2(q, p));
    CHECK(hpq == hqp);  // symmetry exact: the affinity sum is symmetric
    const double hpr = std::sqrt(hellinger2(p, r));
    const double hrq = std::sqrt(hellinger2(r, q));
    CHECK(hpq <= hpr + hrq + 1e-12);

    const double tv = total_variation(p, q);
    CHECK(hellinger2(p, q) <= tv + 1e-12);
    CHECK(tv <= std::sqrt(2.0) * hpq + 1e-12);

    const double kl = kl_divergence(p, q);
    CHECK(kl >= 2.0 * hellinger2(p, q) - 1e-12);
  }
}

TEST_CASE("space mismatch is rejected") {
  auto s1 = SampleSpace::discrete({0.0, 1.0});
  auto s2 = SampleSpace::discrete({0.0, 2.0});
  auto p = categorical(s1, {0.5, 0.5}, "p");
  auto q = categorical(s2, {0.5, 0.5}, "q");
  CHECK_THROWS_WITH_AS(hellinger2(p, q), "space mismatch",
                       std::invalid_argument);
}

TEST_CASE("quadrature rejects non-integrable singular weights") {
  const std::vector<double> edges{0.0, 1.0};
  const std::vector<Singularity> sing{{0.0, 1.2}};
  CHECK_THROWS_AS(integrate_panels([](double, double) { return 1.0; }, edges,
                                   sing, 16),
                  QuadratureError);
}

TEST_CASE("hellinger2 convergence check catches an unresolvable spike") {
  QuadratureSpec quad;
  quad.lo = 0.0;
  quad.hi = 1.0;
  quad.nodes_per_panel = 64;
  auto space = SampleSpace::continuous1d(0.0, 1.0, quad);
  DensityCandidate uniform;
  uniform.id = "uniform";
  uniform.space = space;
  uniform.log_density = [](std::span<const double>) { return 0.0; };
  DensityCandidate spike;
  spike.id = "spike";
  spike.space = space;
  const double sigma = 2e-3;
  const double lognorm = -std::log(sigma * std::sqrt(2.0 * M_PI));
  spike.log_density = [sigma, lognorm](std::span<const double> x) {
    const double u = (x[0] - 0.37) / sigma;
    return lognorm - 0.5 * u * u;
  };
  CHECK_THROWS_AS(hellinger2(uniform, spike), QuadratureError);
  try {
    hellinger2(uniform, spike);
  } catch (const QuadratureError& e) {
    CHECK(e.residual > 1e-6);
  }
}
