#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rhoest/experiment.hpp"
#include "rhoest/hmm.hpp"
#include "rhoest/metrics.hpp"
#include "rhoest/rng.hpp"

using namespace rhoest;

namespace {

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

HmmParams random_hmm(Rng& rng, int K, std::size_t atoms) {
  SimplexWeights w(random_simplex(rng, K));
  std::vector<std::vector<double>> rows(K);
  for (auto& r : rows) r = random_simplex(rng, K);
  std::vector<double> atom_list(atoms);
  for (std::size_t i = 0; i < atoms; ++i) atom_list[i] = static_cast<double>(i);
  std::vector<EmissionSpec> em;
  for (int k = 0; k < K; ++k)
    em.push_back({"categorical", random_simplex(rng, atoms), atom_list});
  return HmmParams(std::move(w), TransitionMatrix(rows), std::move(em));
}

}  // namespace

TEST_CASE("window") {
  auto base = SampleSpace::discrete({0.0, 1.0, 2.0, 3.0});
  const std::vector<double> series{0.0, 1.0, 2.0, 3.0};
  const WindowedSample ws = window(series, 2, base);
  CHECK(ws.sample.n == 3);
  CHECK(ws.sample.point(0)[0] == 0.0);
  CHECK(ws.sample.point(0)[1] == 1.0);
  CHECK(ws.sample.point(2)[0] == 2.0);
  CHECK(ws.sample.point(2)[1] == 3.0);

  std::vector<double> ten(10, 0.0);
  CHECK(window(ten, 3, base).sample.n == 8);
  CHECK_NOTHROW(window(ten, 5, base));
  CHECK_THROWS_AS(window(ten, 6, base), std::invalid_argument);
  CHECK_THROWS_AS(window(ten, 1, base), std::invalid_argument);
}

TEST_CASE("product_chain_density degenerate cases") {
  auto base = SampleSpace::discrete({0.0, 1.0});
  std::vector<EmissionSpec> em{{"categorical", {0.7, 0.3}, {0.0, 1.0}},
                               {"categorical", {0.1, 0.9}, {0.0, 1.0}}};
  // w = (1,0), Q = identity: the tuple law is f1 x f1.
  HmmParams degenerate(SimplexWeights({1.0, 0.0}),
                       TransitionMatrix({{1.0, 0.0}, {0.0, 1.0}}), em);
  auto cand = product_chain_density(degenerate, 2, base, "d");
  const double xs[] = {0.0, 1.0};
  CHECK(cand.log_density(xs) ==
        doctest::Approx(std::log(0.7) + std::log(0.3)).epsilon(1e-12));

  // Identical emissions: any (w, Q) gives the product law.
  std::vector<EmissionSpec> same{{"categorical", {0.6, 0.4}, {0.0, 1.0}},
                                 {"categorical", {0.6, 0.4}, {0.0, 1.0}}};
  HmmParams mixed(SimplexWeights({0.3, 0.7}),
                  TransitionMatrix({{0.5, 0.5}, {0.2, 0.8}}), same);
  auto cand2 = product_chain_density(mixed, 2, base, "m");
  CHECK(cand2.log_density(xs) ==
        doctest::Approx(std::log(0.6) + std::log(0.4)).epsilon(1e-12));
}

TEST_CASE("forward recursion equals the brute-force mixture sum") {
  Rng rng(31, 0);
  // K=2, L=2 with tight tolerance per the contract.
  for (int rep = 0; rep < 30; ++rep) {
    const HmmParams params = random_hmm(rng, 2, 2);
    auto base = SampleSpace::discrete({0.0, 1.0});
    auto cand = product_chain_density(params, 2, base, "c");
    for (double a : {0.0, 1.0})
      for (double b : {0.0, 1.0}) {
        const double x[] = {a, b};
        const double fast = cand.log_density(x);
        const double brute = product_chain_log_density_bruteforce(params, 2, x);
        CHECK(fast == doctest::Approx(brute).epsilon(1e-14));
      }
  }
  // K <= 3, L <= 4 relative error 1e-12.
  for (int K = 2; K <= 3; ++K)
    for (int L = 2; L <= 4; ++L)
      for (int rep = 0; rep < 10; ++rep) {
        const HmmParams params = random_hmm(rng, K, 3);
        auto base = SampleSpace::discrete({0.0, 1.0, 2.0});
        auto cand = product_chain_density(params, L, base, "c");
        std::vector<double> x(L);
        for (auto& v : x) v = static_cast<double>(rng.discrete(
            std::vector<double>{1.0, 1.0, 1.0}));
        const double fast = cand.log_density(x);
        const double brute = product_chain_log_density_bruteforce(params, L, x);
        CHECK(fast == doctest::Approx(brute).epsilon(1e-12));
      }
}

TEST_CASE("stationary distribution") {
  const TransitionMatrix q({{0.9, 0.1}, {0.2, 0.8}});
  const SimplexWeights pi = stationary_distribution(q);
  CHECK(pi.w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(pi.w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // pi Q = pi holds to the advertised residual.
  const double r0 = pi.w[0] * 0.9 + pi.w[1] * 0.2;
  CHECK(std::fabs(r0 - pi.w[0]) <= 1e-12);

  const TransitionMatrix uniform({{0.5, 0.5}, {0.5, 0.5}});
  const SimplexWeights pu = stationary_distribution(uniform);
  CHECK(pu.w[0] == doctest::Approx(0.5));

  CHECK_THROWS_AS(stationary_distribution(
                      TransitionMatrix({{1.0, 0.0}, {0.0, 1.0}})),
                  std::invalid_argument);
}

TEST_CASE("simplex and transition grids") {
  const auto grid = simplex_grid(2, 0.1, 0.1);
  CHECK(grid.size() == 9);
  CHECK(grid.front().w[0] == doctest::Approx(0.1));
  CHECK(grid.back().w[0] == doctest::Approx(0.9));
  for (const auto& w : grid) {
    double sum = 0.0;
    for (double v : w.w) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  }

  const auto forced = simplex_grid(2, 0.5, 0.25);
  REQUIRE(forced.size() == 1);
  CHECK(forced[0].w[0] == doctest::Approx(0.5));

  CHECK(transition_grid(2, 0.1, 0.1).size() == 81);
  CHECK_THROWS_AS(simplex_grid(2, 0.07, 0.1), std::invalid_argument);
}

TEST_CASE("delta_for and vbar") {
  CHECK(delta_for(784.0, 10000, 2) == doctest::Approx(0.0784));
  CHECK(delta_for(1e9, 100, 2) == doctest::Approx(0.5));
  CHECK(delta_for(10000.0, 10000, 2) == doctest::Approx(0.5));

  CHECK(vbar_for_nets({1}, 1, 2) == doctest::Approx(1.0));
  CHECK(vbar_for_nets({8, 8}, 2, 2) == doctest::Approx(28.0));
  CHECK(vbar_exponential_family(2, 2, {1, 1}) ==
        doctest::Approx(3.0 * 4.0 + 2.0 * 2.0 * 2.0));
}

TEST_CASE("build_hmm_model counts and indexing") {
  std::vector<double> atoms{0.0, 1.0};
  std::vector<EmissionSpec> net1{{"categorical", {0.8, 0.2}, atoms},
                                 {"categorical", {0.5, 0.5}, atoms},
                                 {"categorical", {0.2, 0.8}, atoms}};
  const HmmModel hm = build_hmm_model({net1, net1}, 2, 2, 0.1, 0.1);
  CHECK(hm.w_grid.size() == 9);
  CHECK(hm.q_grid.size() == 81);
  CHECK(hm.model->size() == 9 * 81 * 9);
  CHECK(hm.params_by_index.size() == hm.model->size());
  CHECK(hm.model->at(0).id == "0");
  CHECK(hm.model->index_of("6560") == 6560);

  // Every candidate is a probability vector over the four tuples.
  const EvalGrid grid = make_eval_grid(*hm.model->space(), {});
  for (std::size_t c : {std::size_t{0}, hm.model->size() / 3,
                        hm.model->size() - 1}) {
    const auto dens = density_on_grid(hm.model->at(c), grid);
    double mass = 0.0;
    for (double v : dens) mass += v;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Budget guard names the count.
  CHECK_THROWS_WITH_AS(build_hmm_model({net1, net1}, 2, 2, 0.1, 0.1, nullptr, 100),
                       "build_hmm_model: model budget exceeded (6561 candidates)",
                       std::invalid_argument);

  // Singleton grids collapse to one candidate.
  std::vector<EmissionSpec> single{{"categorical", {0.8, 0.2}, atoms}};
  const HmmModel tiny = build_hmm_model({single, single}, 2, 2, 0.5, 0.5);
  CHECK(tiny.model->size() == 1);
}

TEST_CASE("param_error") {
  std::vector<double> atoms{0.0, 1.0};
  HmmParams truth(SimplexWeights({0.5, 0.5}),
                  TransitionMatrix({{0.5, 0.5}, {0.5, 0.5}}),
                  {{"categorical", {0.8, 0.2}, atoms},
                   {"categorical", {0.8, 0.2}, atoms}});
  CHECK(param_error(truth, truth) == doctest::Approx(0.0));

  // Swapped hidden states are a relabeling, not an error.
  HmmParams asym(SimplexWeights({0.3, 0.7}),
                 TransitionMatrix({{0.9, 0.1}, {0.4, 0.6}}),
                 {{"categorical", {0.8, 0.2}, atoms},
                  {"categorical", {0.1, 0.9}, atoms}});
  HmmParams swapped(SimplexWeights({0.7, 0.3}),
                    TransitionMatrix({{0.6, 0.4}, {0.1, 0.9}}),
                    {{"categorical", {0.1, 0.9}, atoms},
                     {"categorical", {0.8, 0.2}, atoms}});
  CHECK(param_error(swapped, asym) == doctest::Approx(0.0).epsilon(1e-15));

  // Mismatched weights only, everything else symmetric: 2 * 0.1^2.
  HmmParams est(SimplexWeights({0.6, 0.4}),
                TransitionMatrix({{0.5, 0.5}, {0.5, 0.5}}),
                {{"categorical", {0.8, 0.2}, atoms},
                 {"categorical", {0.8, 0.2}, atoms}});
  CHECK(param_error(est, truth) == doctest::Approx(0.02).epsilon(1e-12));

  // param_error is invariant when both arguments share a permutation.
  Rng rng(77, 0);
  for (int rep = 0; rep < 20; ++rep) {
    HmmParams a = [&] {
      SimplexWeights w(random_simplex(rng, 2));
      std::vector<std::vector<double>> rows{random_simplex(rng, 2),
                                            random_simplex(rng, 2)};
      return HmmParams(w, TransitionMatrix(rows),
                       {{"categorical", random_simplex(rng, 2), atoms},
                        {"categorical", random_simplex(rng, 2), atoms}});
    }();
    HmmParams b = [&] {
      SimplexWeights w(random_simplex(rng, 2));
      std::vector<std::vector<double>> rows{random_simplex(rng, 2),
                                            random_simplex(rng, 2)};
      return HmmParams(w, TransitionMatrix(rows),
                       {{"categorical", random_simplex(rng, 2), atoms},
                        {"categorical", random_simplex(rng, 2), atoms}});
    }();
    auto permute = [&atoms](const HmmParams& p) {
      return HmmParams(
          SimplexWeights({p.w.w[1], p.w.w[0]}),
          TransitionMatrix({{p.Q.rows[1][1], p.Q.rows[1][0]},
                            {p.Q.rows[0][1], p.Q.rows[0][0]}}),
          {p.emissions[1], p.emissions[0]});
    };
    CHECK(param_error(a, b) ==
          doctest::Approx(param_error(permute(a), permute(b))).epsilon(1e-12));
  }
}

TEST_CASE("tuple-law perturbation bound over random parameter pairs") {
  // h²(P_{w,Q,F}, P_{v,R,G}) <= h²(w,v) + (L-1)·max_k h²(Q_k·,R_k·)
  //                             + L·max_k h²(F_k,G_k), all sides exact.
  Rng rng(2025, 1);
  for (int rep = 0; rep < 200; ++rep) {
    const int K = 2 + static_cast<int>(rng.discrete(std::vector<double>{1, 1}));
    const int L = 2 + static_cast<int>(rng.discrete(std::vector<double>{1, 1}));
    const std::size_t atoms = 2;
    const HmmParams a = random_hmm(rng, K, atoms);
    const HmmParams b = random_hmm(rng, K, atoms);
    auto base = SampleSpace::discrete({0.0, 1.0});
    auto pa = product_chain_density(a, L, base, "a");
    auto pb = product_chain_density(b, L, base, "b");
    const double lhs = hellinger2(pa, pb);

    double rhs = oracles::discrete_h2(a.w.w, b.w.w);
    double max_q = 0.0;
    for (int k = 0; k < K; ++k)
      max_q = std::max(max_q, oracles::discrete_h2(a.Q.rows[k], b.Q.rows[k]));
    rhs += (L - 1) * max_q;
    double max_f = 0.0;
    for (int k = 0; k < K; ++k)
      max_f = std::max(max_f, oracles::discrete_h2(a.emissions[k].params,
                                                   b.emissions[k].params));
    rhs += L * max_f;
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("hmm model json round trip") {
  std::vector<double> atoms{0.0, 1.0};
  std::vector<EmissionSpec> net{{"categorical", {0.8, 0.2}, atoms},
                                {"categorical", {0.2, 0.8}, atoms}};
  const HmmModel hm = build_hmm_model({net, net}, 2, 2, 0.25, 0.25);
  const nlohmann::json j = model_to_json(hm);
  CHECK(j.at("candidate_count").get<std::size_t>() == hm.model->size());
  const LoadedModel back = model_from_json(j);
  REQUIRE(back.hmm.has_value());
  CHECK(back.model->size() == hm.model->size());
  for (std::size_t i : {std::size_t{0}, hm.model->size() - 1}) {
    CHECK(back.model->at(i).id == hm.model->at(i).id);
    const double x[] = {1.0, 0.0};
    CHECK(back.model->at(i).log_density(x) ==
          doctest::Approx(hm.model->at(i).log_density(x)).epsilon(1e-15));
  }
}
