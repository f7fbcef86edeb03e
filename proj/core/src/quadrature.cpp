#include "rhoest/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace rhoest {

namespace {

struct GlRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Newton iteration on Legendre polynomials; deterministic to the last bit.
GlRule compute_gl(int n) {
  GlRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

const GlRule& gl_rule(int n) {
  static std::mutex mu;
  static std::map<int, GlRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gl(n)).first;
  return it->second;
}

double beta_at(std::span<const Singularity> sing, double x) {
  double beta = 0.0;
  for (const auto& s : sing)
    if (s.location == x) beta += s.exponent;
  return beta;
}

// Plain panel [a,b].
double plain_panel(const WeightedIntegrand& f, double a, double b, int n) {
  const auto& t = gl_nodes(n);
  const auto& w = gl_weights(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += w[i] * f(mid + half * t[i], 0.0);
  return half * acc;
}

// Panel with a power singularity |x-z|^{-beta} at one endpoint.
// Substituting x = a + h*u^{1/(1-beta)} (mirrored for a right endpoint)
// integrates the pure power part exactly:
//   I = h^{1-beta}/(1-beta) * \int_0^1 g(x(u)) du,
// with g(x) = f(x) * |x-z|^{beta} supplied through log_weight.
double singular_panel(const WeightedIntegrand& f, double a, double b,
                      double beta, bool left, int n) {
  const double h = b - a;
  const double inv = 1.0 / (1.0 - beta);
  const auto& t = gl_nodes(n);
  const auto& w = gl_weights(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = 0.5 * (t[i] + 1.0);
    const double dist = h * std::pow(u, inv);
    double x = left ? (a + dist) : (b - dist);
    // Keep the evaluation point strictly off the singular endpoint even
    // when `dist` is below one ulp of the panel boundary.
    if (x == (left ? a : b)) x = std::nextafter(x, left ? b : a);
    acc += 0.5 * w[i] * f(x, beta * std::log(dist));
  }
  return std::pow(h, 1.0 - beta) * inv * acc;
}

}  // namespace

const std::vector<double>& gl_nodes(int n) { return gl_rule(n).nodes; }
const std::vector<double>& gl_weights(int n) { return gl_rule(n).weights; }

double integrate_panels(const WeightedIntegrand& f,
                        std::span<const double> edges,
                        std::span<const Singularity> singularities,
                        int nodes_per_panel) {
  if (edges.size() < 2)
    throw QuadratureError("integrate_panels: need at least one panel", 0.0);
  for (const auto& s : singularities) {
    if (!(s.exponent > 0.0 && s.exponent < 1.0))
      throw QuadratureError("integrate_panels: singular exponent outside (0,1)",
                            0.0);
  }
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double a = edges[k], b = edges[k + 1];
    const double beta_l = beta_at(singularities, a);
    const double beta_r = beta_at(singularities, b);
    if (beta_l > 0.0 && beta_r > 0.0)
      throw QuadratureError(
          "integrate_panels: panel bounded by two singular points", 0.0);
    if (beta_l >= 1.0 || beta_r >= 1.0)
      throw QuadratureError("integrate_panels: non-integrable singularity", 0.0);
    if (beta_l > 0.0)
      total += singular_panel(f, a, b, beta_l, true, nodes_per_panel);
    else if (beta_r > 0.0)
      total += singular_panel(f, a, b, beta_r, false, nodes_per_panel);
    else
      total += plain_panel(f, a, b, nodes_per_panel);
  }
  return total;
}

std::vector<double> build_edges(const QuadratureSpec& spec,
                                std::span<const double> extra_breakpoints,
                                std::span<const Singularity> singularities) {
  std::vector<double> edges;
  edges.push_back(spec.lo);
  edges.push_back(spec.hi);
  for (double e : spec.edges)
    if (e > spec.lo && e < spec.hi) edges.push_back(e);
  for (double e : extra_breakpoints)
    if (e > spec.lo && e < spec.hi) edges.push_back(e);
  for (const auto& s : singularities)
    if (s.location > spec.lo && s.location < spec.hi)
      edges.push_back(s.location);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  auto is_singular = [&](double x) {
    for (const auto& s : singularities)
      if (s.location == x) return true;
    return false;
  };

  // Coalesce near-duplicate edges (breakpoints that land a few ulps
  // apart create sliver panels that defeat the singular weighting).
  // A singular location always survives its cluster unchanged so that
  // the exact-match lookup in integrate_panels still fires.
  const double scale =
      std::max({1.0, std::fabs(spec.lo), std::fabs(spec.hi)});
  const double tol = 1e-9 * scale;
  std::vector<double> merged;
  for (std::size_t k = 0; k < edges.size();) {
    std::size_t j = k;
    double keep = edges[k];
    bool keep_singular = is_singular(keep);
    while (j + 1 < edges.size() && edges[j + 1] - edges[k] <= tol) {
      ++j;
      if (!keep_singular && is_singular(edges[j])) {
        keep = edges[j];
        keep_singular = true;
      }
    }
    merged.push_back(keep);
    k = j + 1;
  }
  if (merged.front() > spec.lo) merged.front() = spec.lo;
  if (merged.back() < spec.hi) merged.back() = spec.hi;

  // Split panels whose both endpoints are singular.
  std::vector<double> out;
  out.push_back(merged.front());
  for (std::size_t k = 0; k + 1 < merged.size(); ++k) {
    const double a = merged[k], b = merged[k + 1];
    if (is_singular(a) && is_singular(b)) out.push_back(0.5 * (a + b));
    out.push_back(b);
  }
  return out;
}

FlatGrid flatten_grid(const QuadratureSpec& spec,
                      std::span<const double> extra_breakpoints,
                      int nodes_per_panel) {
  const int n = nodes_per_panel > 0 ? nodes_per_panel : spec.nodes_per_panel;
  const auto edges = build_edges(spec, extra_breakpoints, {});
  const auto& t = gl_nodes(n);
  const auto& w = gl_weights(n);
  FlatGrid grid;
  grid.nodes.reserve((edges.size() - 1) * n);
  grid.weights.reserve((edges.size() - 1) * n);
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double half = 0.5 * (edges[k + 1] - edges[k]);
    const double mid = 0.5 * (edges[k + 1] + edges[k]);
    for (int i = 0; i < n; ++i) {
      grid.nodes.push_back(mid + half * t[i]);
      grid.weights.push_back(half * w[i]);
    }
  }
  return grid;
}

}  // namespace rhoest
