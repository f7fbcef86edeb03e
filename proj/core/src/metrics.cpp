#include "rhoest/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rhoest {

namespace {

constexpr double kAffinityResidualTol = 1e-6;

void require_same_space(const DensityCandidate& p, const DensityCandidate& q) {
  if (!p.space || !q.space || !p.space->same_as(*q.space))
    throw std::invalid_argument("space mismatch");
}

bool is_discrete_like(const SampleSpace& s) {
  return s.kind() == SampleSpace::Kind::discrete ||
         (s.kind() == SampleSpace::Kind::product &&
          s.base()->kind() == SampleSpace::Kind::discrete);
}

std::vector<double> merged_breakpoints(const DensityCandidate& p,
                                       const DensityCandidate& q) {
  std::vector<double> bp = p.breakpoints;
  bp.insert(bp.end(), q.breakpoints.begin(), q.breakpoints.end());
  for (const auto& s : p.singularities) bp.push_back(s.location);
  for (const auto& s : q.singularities) bp.push_back(s.location);
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  return bp;
}

// Merged singular structure of the integrand p^{pw} * q^{qw}.
std::vector<Singularity> pair_singularities(const DensityCandidate& p,
                                            const DensityCandidate& q,
                                            double pw, double qw) {
  std::vector<Singularity> out;
  for (const auto& s : p.singularities)
    out.push_back({s.location, s.exponent * pw});
  for (const auto& s : q.singularities) {
    bool merged = false;
    for (auto& o : out)
      if (o.location == s.location) {
        o.exponent += s.exponent * qw;
        merged = true;
      }
    if (!merged) out.push_back({s.location, s.exponent * qw});
  }
  return out;
}

double affinity_by_table(const DensityCandidate& p, const DensityCandidate& q,
                         int nodes_per_panel) {
  const EvalGrid grid =
      make_eval_grid(*p.space, merged_breakpoints(p, q), nodes_per_panel);
  const std::vector<double> dp = density_on_grid(p, grid);
  const std::vector<double> dq = density_on_grid(q, grid);
  double aff = 0.0;
  for (std::size_t t = 0; t < grid.size(); ++t)
    aff += grid.weights[t] * std::sqrt(dp[t] * dq[t]);
  return aff;
}

// Singularity-aware 1D affinity in log space.
double affinity_singular_1d(const DensityCandidate& p,
                            const DensityCandidate& q) {
  const auto sing = pair_singularities(p, q, 0.5, 0.5);
  const auto edges = build_edges(p.space->quad(), merged_breakpoints(p, q), sing);
  auto integrand = [&](double x, double log_w) {
    const double lp = p.log_density({&x, 1});
    const double lq = q.log_density({&x, 1});
    if ((std::isinf(lp) && lp < 0) || (std::isinf(lq) && lq < 0)) return 0.0;
    return std::exp(0.5 * lp + 0.5 * lq + log_w);
  };
  const int nodes = p.space->quad().nodes_per_panel;
  const double a64 = integrate_panels(integrand, edges, sing, nodes);
  const double a32 =
      integrate_panels(integrand, edges, sing, std::max(8, nodes / 2));
  if (std::fabs(a64 - a32) > kAffinityResidualTol)
    throw QuadratureError("hellinger2: quadrature did not converge",
                          std::fabs(a64 - a32));
  return a64;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

double hellinger2(const DensityCandidate& p, const DensityCandidate& q) {
  require_same_space(p, q);
  const auto& space = *p.space;
  if (is_discrete_like(space)) return clamp01(1.0 - affinity_by_table(p, q, 0));

  const bool singular = !p.singularities.empty() || !q.singularities.empty();
  if (space.kind() == SampleSpace::Kind::continuous1d && singular)
    return clamp01(1.0 - affinity_singular_1d(p, q));

  const bool product = space.kind() == SampleSpace::Kind::product;
  const int nodes = product ? 0 : space.quad().nodes_per_panel;  // 0: tensor default
  const double a_full = affinity_by_table(p, q, nodes);
  const int check_nodes = product ? 12 : std::max(8, nodes / 2);
  const double a_half = affinity_by_table(p, q, check_nodes);
  if (std::fabs(a_full - a_half) > kAffinityResidualTol)
    throw QuadratureError("hellinger2: quadrature did not converge",
                          std::fabs(a_full - a_half));
  return clamp01(1.0 - a_full);
}

double total_variation(const DensityCandidate& p, const DensityCandidate& q) {
  require_same_space(p, q);
  const auto& space = *p.space;
  if (is_discrete_like(space)) {
    const EvalGrid grid = make_eval_grid(space, {});
    const std::vector<double> dp = density_on_grid(p, grid);
    const std::vector<double> dq = density_on_grid(q, grid);
    double tv = 0.0;
    for (std::size_t t = 0; t < grid.size(); ++t)
      tv += grid.weights[t] * std::fabs(dp[t] - dq[t]);
    return clamp01(0.5 * tv);
  }
  const EvalGrid grid = make_eval_grid(space, merged_breakpoints(p, q));
  const std::vector<double> dp = density_on_grid(p, grid);
  const std::vector<double> dq = density_on_grid(q, grid);
  double tv = 0.0;
  for (std::size_t t = 0; t < grid.size(); ++t)
    tv += grid.weights[t] * std::fabs(dp[t] - dq[t]);
  return clamp01(0.5 * tv);
}

double kl_divergence(const DensityCandidate& p, const DensityCandidate& q) {
  require_same_space(p, q);
  const auto& space = *p.space;
  const double inf = std::numeric_limits<double>::infinity();
  if (is_discrete_like(space)) {
    const EvalGrid grid = make_eval_grid(space, {});
    double kl = 0.0;
    const int L = grid.dim;
    for (std::size_t t = 0; t < grid.size(); ++t) {
      std::span<const double> x{grid.points.data() + t * L,
                                static_cast<std::size_t>(L)};
      const double lp = p.log_density(x);
      if (std::isinf(lp) && lp < 0) continue;  // p = 0 contributes nothing
      const double lq = q.log_density(x);
      if (std::isinf(lq) && lq < 0) return inf;  // support violation
      kl += grid.weights[t] * std::exp(lp) * (lp - lq);
    }
    return std::max(0.0, kl);
  }
  // Continuous: singular weights from p (integrand ~ p up to a log factor).
  const auto sing = pair_singularities(p, q, 1.0, 0.0);
  std::vector<Singularity> active;
  for (const auto& s : sing)
    if (s.exponent > 0.0) active.push_back(s);
  if (space.kind() == SampleSpace::Kind::continuous1d) {
    const auto edges = build_edges(space.quad(), merged_breakpoints(p, q), active);
    bool support_violation = false;
    const double kl = integrate_panels(
        [&](double x, double log_w) {
          const double lp = p.log_density({&x, 1});
          if (std::isinf(lp) && lp < 0) return 0.0;
          const double lq = q.log_density({&x, 1});
          if (std::isinf(lq) && lq < 0) {
            support_violation = true;
            return 0.0;
          }
          return std::exp(lp + log_w) * (lp - lq);
        },
        edges, active, space.quad().nodes_per_panel);
    return support_violation ? inf : std::max(0.0, kl);
  }
  const EvalGrid grid = make_eval_grid(space, merged_breakpoints(p, q));
  const int L = grid.dim;
  double kl = 0.0;
  for (std::size_t t = 0; t < grid.size(); ++t) {
    std::span<const double> x{grid.points.data() + t * L,
                              static_cast<std::size_t>(L)};
    const double lp = p.log_density(x);
    if (std::isinf(lp) && lp < 0) continue;
    const double lq = q.log_density(x);
    if (std::isinf(lq) && lq < 0) return inf;
    kl += grid.weights[t] * std::exp(lp) * (lp - lq);
  }
  return std::max(0.0, kl);
}

double finite_model_dimension(std::size_t m) {
  if (m < 1) throw std::invalid_argument("finite_model_dimension: m >= 1");
  return 9.0 * std::log(2.0 * static_cast<double>(m));
}

double vc_index_finite(std::size_t m) {
  if (m < 1) throw std::invalid_argument("vc_index_finite: m >= 1");
  return 1.0 + std::log2(static_cast<double>(m));
}

}  // namespace rhoest
