#include "rhoest/families.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rhoest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // ln sqrt(2*pi)

void require_params(const EmissionSpec& s, std::size_t count) {
  if (s.params.size() != count)
    throw std::invalid_argument("emission '" + s.family +
                                "': wrong parameter count");
}

double panel_width_hint(const EmissionSpec& s) {
  if (s.family == "exponential") return 10.0 / s.params[0];
  if (s.family == "gaussian") return 2.0 * s.params[1];
  if (s.family == "falpha") return 0.25;
  return kInf;
}

}  // namespace

bool has_density(const EmissionSpec& spec) {
  return spec.family == "exponential" || spec.family == "gaussian" ||
         spec.family == "falpha" || spec.family == "categorical";
}

double falpha_log_density(double alpha, double z, double x) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("falpha: alpha must be in (0,1)");
  const double d = std::fabs(x - z);
  if (d > 1.0) return -kInf;
  if (d == 0.0) return kInf;  // declared integrable singularity
  return std::log(0.5 * (1.0 - alpha)) - alpha * std::log(d);
}

double emission_log_density(const EmissionSpec& spec, double x) {
  if (spec.family == "exponential") {
    require_params(spec, 1);
    const double theta = spec.params[0];
    if (x < 0.0) return -kInf;
    return std::log(theta) - theta * x;
  }
  if (spec.family == "gaussian") {
    require_params(spec, 2);
    const double z = spec.params[0], sigma = spec.params[1];
    const double u = (x - z) / sigma;
    return -std::log(sigma) - kLogSqrt2Pi - 0.5 * u * u;
  }
  if (spec.family == "falpha") {
    require_params(spec, 2);
    return falpha_log_density(spec.params[0], spec.params[1], x);
  }
  if (spec.family == "categorical") {
    if (spec.params.size() != spec.atoms.size())
      throw std::invalid_argument("categorical: params/atoms size mismatch");
    for (std::size_t i = 0; i < spec.atoms.size(); ++i)
      if (spec.atoms[i] == x)
        return spec.params[i] > 0.0 ? std::log(spec.params[i]) : -kInf;
    return -kInf;
  }
  throw std::invalid_argument("emission '" + spec.family + "': no density");
}

double sample_emission(const EmissionSpec& spec, Rng& rng) {
  if (spec.family == "exponential") return rng.exponential(spec.params[0]);
  if (spec.family == "gaussian")
    return spec.params[0] + spec.params[1] * rng.normal();
  if (spec.family == "falpha") {
    const double alpha = spec.params[0], z = spec.params[1];
    const double r = std::pow(rng.uniform01(), 1.0 / (1.0 - alpha));
    return rng.bernoulli(0.5) ? z + r : z - r;
  }
  if (spec.family == "categorical")
    return spec.atoms[rng.discrete(spec.params)];
  if (spec.family == "uniform") return rng.uniform(spec.params[0], spec.params[1]);
  if (spec.family == "constant") return spec.params[0];
  throw std::invalid_argument("emission '" + spec.family + "': no sampler");
}

std::vector<double> emission_param_vector(const EmissionSpec& spec) {
  return spec.params;
}

EmissionSupport emission_support(const EmissionSpec& spec) {
  EmissionSupport out;
  if (spec.family == "exponential") {
    const double theta = spec.params[0];
    if (!(theta > 0.0)) throw std::invalid_argument("exponential: theta <= 0");
    out.support_lo = 0.0;
    out.support_hi = kInf;
    out.quad_lo = 0.0;
    out.quad_hi = 45.0 / theta;
    return out;
  }
  if (spec.family == "gaussian") {
    const double z = spec.params[0], sigma = spec.params[1];
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian: sigma <= 0");
    out.support_lo = -kInf;
    out.support_hi = kInf;
    out.quad_lo = z - 9.0 * sigma;
    out.quad_hi = z + 9.0 * sigma;
    return out;
  }
  if (spec.family == "falpha") {
    const double alpha = spec.params[0], z = spec.params[1];
    out.support_lo = z - 1.0;
    out.support_hi = z + 1.0;
    out.quad_lo = z - 1.0;
    out.quad_hi = z + 1.0;
    out.breakpoints = {z - 1.0, z, z + 1.0};
    out.singularities = {{z, alpha}};
    return out;
  }
  throw std::invalid_argument("emission '" + spec.family +
                              "': no continuous support");
}

std::shared_ptr<const SampleSpace> space_for_emissions(
    const std::vector<EmissionSpec>& specs) {
  if (specs.empty()) throw std::invalid_argument("space_for_emissions: empty");
  if (specs[0].family == "categorical") {
    for (const auto& s : specs)
      if (s.family != "categorical" || s.atoms != specs[0].atoms)
        throw std::invalid_argument(
            "space_for_emissions: mixed or mismatched categorical atoms");
    return SampleSpace::discrete(specs[0].atoms);
  }
  double lo = kInf, hi = -kInf, width = kInf;
  double support_lo = kInf, support_hi = -kInf;
  std::vector<double> edges;
  for (const auto& s : specs) {
    const EmissionSupport sup = emission_support(s);
    lo = std::min(lo, sup.quad_lo);
    hi = std::max(hi, sup.quad_hi);
    support_lo = std::min(support_lo, sup.support_lo);
    support_hi = std::max(support_hi, sup.support_hi);
    width = std::min(width, panel_width_hint(s));
    edges.insert(edges.end(), sup.breakpoints.begin(), sup.breakpoints.end());
  }
  QuadratureSpec quad;
  quad.lo = lo;
  quad.hi = hi;
  const int panels =
      std::min(256, std::max(1, static_cast<int>(std::ceil((hi - lo) / width))));
  for (int k = 1; k < panels; ++k)
    edges.push_back(lo + (hi - lo) * k / panels);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  quad.edges = std::move(edges);
  return SampleSpace::continuous1d(support_lo, support_hi, std::move(quad));
}

DensityCandidate make_emission_candidate(const EmissionSpec& spec,
                                         std::shared_ptr<const SampleSpace> base,
                                         std::string id) {
  DensityCandidate cand;
  if (id.empty()) {
    id = spec.family;
    for (double p : spec.params) id += "_" + std::to_string(p);
  }
  cand.id = std::move(id);
  cand.space = std::move(base);
  cand.log_density = [spec](std::span<const double> x) {
    return emission_log_density(spec, x[0]);
  };
  if (cand.space->kind() == SampleSpace::Kind::continuous1d) {
    const EmissionSupport sup = emission_support(spec);
    cand.breakpoints = sup.breakpoints;
    cand.singularities = sup.singularities;
  }
  cand.metadata["family"] = spec.family;
  return cand;
}

std::vector<EmissionSpec> exponential_net(double theta_min, double theta_max,
                                          std::size_t count) {
  if (!(theta_min > 0.0 && theta_min < theta_max))
    throw std::invalid_argument("exponential_net: need 0 < theta_min < theta_max");
  if (count < 1) throw std::invalid_argument("exponential_net: count >= 1");
  std::vector<EmissionSpec> net;
  const double llo = std::log(theta_min), lhi = std::log(theta_max);
  if (count == 1) {
    net.push_back({"exponential", {std::exp(0.5 * (llo + lhi))}, {}});
    return net;
  }
  for (std::size_t j = 0; j < count; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(count - 1);
    net.push_back({"exponential", {std::exp(llo + t * (lhi - llo))}, {}});
  }
  return net;
}

std::vector<EmissionSpec> gaussian_location_net(double sigma, double z_lo,
                                                double z_hi, std::size_t count) {
  if (!(sigma > 0.0) || !(z_lo <= z_hi) || count < 1)
    throw std::invalid_argument("gaussian_location_net: bad arguments");
  std::vector<EmissionSpec> net;
  if (count == 1) {
    net.push_back({"gaussian", {0.5 * (z_lo + z_hi), sigma}, {}});
    return net;
  }
  for (std::size_t j = 0; j < count; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(count - 1);
    net.push_back({"gaussian", {z_lo + t * (z_hi - z_lo), sigma}, {}});
  }
  return net;
}

std::vector<EmissionSpec> gaussian_scale_location_net(
    double z_lo, double z_hi, std::size_t z_count, double sigma_min,
    double sigma_max, std::size_t sigma_count) {
  if (!(sigma_min > 0.0 && sigma_min <= sigma_max) || z_count < 1 ||
      sigma_count < 1)
    throw std::invalid_argument("gaussian_scale_location_net: bad arguments");
  std::vector<double> sigmas;
  const double llo = std::log(sigma_min), lhi = std::log(sigma_max);
  if (sigma_count == 1) {
    sigmas.push_back(std::exp(0.5 * (llo + lhi)));
  } else {
    for (std::size_t j = 0; j < sigma_count; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(sigma_count - 1);
      sigmas.push_back(std::exp(llo + t * (lhi - llo)));
    }
  }
  std::vector<EmissionSpec> net;
  for (std::size_t zi = 0; zi < z_count; ++zi) {
    const double z =
        z_count == 1 ? 0.5 * (z_lo + z_hi)
                     : z_lo + (z_hi - z_lo) * static_cast<double>(zi) /
                           static_cast<double>(z_count - 1);
    for (double s : sigmas) net.push_back({"gaussian", {z, s}, {}});
  }
  return net;
}

double expfam_log_density(const ExpFamilySpec& spec,
                          std::span<const double> theta, double x) {
  if (theta.size() != static_cast<std::size_t>(spec.dim))
    throw std::invalid_argument("expfam_log_density: theta dimension mismatch");
  for (double t : theta)
    if (t < spec.theta_lo || t > spec.theta_hi)
      throw std::invalid_argument("expfam_log_density: theta outside domain");
  const std::vector<double> eta = spec.eta(theta);
  const std::vector<double> tx = spec.T(x);
  const double bx = spec.B(x);
  if (std::isinf(bx) && bx < 0) return -kInf;
  double dot = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) dot += eta[i] * tx[i];

  double a;
  if (spec.A) {
    a = (*spec.A)(theta);
  } else {
    const std::vector<double> key(theta.begin(), theta.end());
    auto it = spec.a_cache->find(key);
    if (it != spec.a_cache->end()) {
      a = it->second;
    } else {
      if (!spec.base || spec.base->kind() != SampleSpace::Kind::continuous1d)
        throw std::invalid_argument(
            "expfam_log_density: quadrature A needs a continuous base space");
      const auto edges = build_edges(spec.base->quad(), {}, {});
      const double mass = integrate_panels(
          [&](double y, double) {
            const double by = spec.B(y);
            if (std::isinf(by) && by < 0) return 0.0;
            const std::vector<double> ty = spec.T(y);
            double d = 0.0;
            for (std::size_t i = 0; i < eta.size(); ++i) d += eta[i] * ty[i];
            return std::exp(d + by);
          },
          edges, {}, spec.base->quad().nodes_per_panel);
      a = -std::log(mass);
      spec.a_cache->emplace(key, a);
    }
  }
  return dot + a + bx;
}

std::vector<DensityCandidate> log_concave_net_1d(
    double lo, double hi, std::size_t knot_count,
    const std::vector<double>& slope_grid) {
  if (knot_count < 2)
    throw std::invalid_argument("log_concave_net_1d: knot_count >= 2");
  if (!(lo < hi)) throw std::invalid_argument("log_concave_net_1d: empty support");
  if (slope_grid.empty())
    throw std::invalid_argument("log_concave_net_1d: empty slope grid");
  std::vector<double> slopes = slope_grid;
  std::sort(slopes.begin(), slopes.end(), std::greater<>());
  slopes.erase(std::unique(slopes.begin(), slopes.end()), slopes.end());

  std::vector<double> knots(knot_count);
  for (std::size_t i = 0; i < knot_count; ++i)
    knots[i] = lo + (hi - lo) * static_cast<double>(i) /
                   static_cast<double>(knot_count - 1);

  QuadratureSpec quad;
  quad.lo = lo;
  quad.hi = hi;
  quad.edges.assign(knots.begin() + 1, knots.end() - 1);
  auto space = SampleSpace::continuous1d(lo, hi, quad);

  const std::size_t segments = knot_count - 1;
  std::vector<DensityCandidate> out;
  std::vector<std::size_t> pick(segments, 0);  // indices into sorted slopes
  int counter = 0;
  while (true) {
    // Non-increasing slope sequence (slopes sorted descending, so any
    // non-decreasing index sequence qualifies).
    std::vector<double> seq(segments);
    for (std::size_t s = 0; s < segments; ++s) seq[s] = slopes[pick[s]];

    std::vector<double> g(knot_count, 0.0);
    for (std::size_t s = 0; s < segments; ++s)
      g[s + 1] = g[s] + seq[s] * (knots[s + 1] - knots[s]);

    auto g_at = [knots, seq, g](double x) {
      std::size_t s = 0;
      while (s + 2 < knots.size() && x > knots[s + 1]) ++s;
      return g[s] + seq[s] * (x - knots[s]);
    };
    const auto edges = build_edges(space->quad(), {}, {});
    const double mass = integrate_panels(
        [&](double x, double) { return std::exp(g_at(x)); }, edges, {},
        space->quad().nodes_per_panel);
    const double log_z = std::log(mass);

    DensityCandidate cand;
    cand.id = "logconcave_" + std::to_string(counter++);
    cand.space = space;
    cand.log_density = [lo, hi, g_at, log_z](std::span<const double> x) {
      if (x[0] < lo || x[0] > hi) return -kInf;
      return g_at(x[0]) - log_z;
    };
    cand.breakpoints.assign(knots.begin() + 1, knots.end() - 1);
    cand.metadata["family"] = "logconcave";
    cand.metadata["note"] = "heuristic piecewise-linear net";
    out.push_back(std::move(cand));

    // Advance to the next non-decreasing index sequence.
    int s = static_cast<int>(segments) - 1;
    while (s >= 0 && pick[s] == slopes.size() - 1) --s;
    if (s < 0) break;
    const std::size_t v = pick[s] + 1;
    for (std::size_t t = static_cast<std::size_t>(s); t < segments; ++t)
      pick[t] = v;
  }
  return out;
}

DensityCandidate categorical_candidate(std::shared_ptr<const SampleSpace> base,
                                       std::vector<double> probs,
                                       std::string id) {
  if (!base || base->kind() != SampleSpace::Kind::discrete)
    throw std::invalid_argument("categorical_candidate: need a discrete space");
  if (probs.size() != base->atoms().size())
    throw std::invalid_argument("categorical_candidate: wrong vector length");
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("categorical_candidate: p < 0");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("categorical_candidate: probabilities must sum to 1");
  EmissionSpec spec{"categorical", std::move(probs), base->atoms()};
  return make_emission_candidate(spec, std::move(base), std::move(id));
}

std::vector<std::vector<double>> separated_categorical_probs(
    std::size_t atom_count, std::size_t count, double min_h,
    std::uint64_t seed) {
  if (atom_count < 2 || count < 1)
    throw std::invalid_argument("separated_categorical_probs: bad sizes");
  Rng rng(seed, stream_id(StreamRole::model_setup, 0));
  std::vector<std::vector<double>> accepted;
  int attempts = 0;
  while (accepted.size() < count) {
    if (++attempts > 200000)
      throw std::runtime_error(
          "separated_categorical_probs: separation unattainable");
    std::vector<double> p(atom_count);
    double sum = 0.0;
    for (auto& v : p) {
      v = -std::log(rng.uniform01());  // Dirichlet(1,..,1)
      sum += v;
    }
    for (auto& v : p) v /= sum;
    bool ok = true;
    for (const auto& q : accepted) {
      double aff = 0.0;
      for (std::size_t i = 0; i < atom_count; ++i) aff += std::sqrt(p[i] * q[i]);
      const double h = std::sqrt(std::max(0.0, 1.0 - aff));
      if (h < min_h) {
        ok = false;
        break;
      }
    }
    if (ok) accepted.push_back(std::move(p));
  }
  return accepted;
}

}  // namespace rhoest
