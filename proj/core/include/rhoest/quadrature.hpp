#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rhoest/space.hpp"

namespace rhoest {

/// An integrable power singularity: the integrand behaves like
/// C * |x - location|^{-exponent} near `location`, exponent in (0,1).
struct Singularity {
  double location = 0.0;
  double exponent = 0.0;
};

struct QuadratureError : std::runtime_error {
  explicit QuadratureError(const std::string& what, double residual_estimate)
      : std::runtime_error(what), residual(residual_estimate) {}
  double residual;
};

/// Gauss-Legendre nodes/weights on (-1,1); cached per order.
const std::vector<double>& gl_nodes(int n);
const std::vector<double>& gl_weights(int n);

/// Integrand evaluated in log space. `x` is the abscissa; `log_weight`
/// is the log of the power factor |x-z|^{beta} removed on a singular
/// panel: the callback must return its value *times* exp(log_weight),
/// i.e. compute exp(log_integrand(x) + log_weight) for product-form
/// integrands. On regular panels log_weight is 0.
using WeightedIntegrand = std::function<double(double x, double log_weight)>;

/// Composite Gauss-Legendre over explicit panel edges. Panels whose
/// endpoint coincides with a declared singularity are reparameterized
/// so that the pure power integral is computed exactly.
double integrate_panels(const WeightedIntegrand& f,
                        std::span<const double> edges,
                        std::span<const Singularity> singularities,
                        int nodes_per_panel);

/// Builds the panel edge list for a space window: spec edges plus extra
/// breakpoints and singular locations, sorted, deduplicated, and with
/// panels bounded by two singular endpoints split at their midpoint.
std::vector<double> build_edges(const QuadratureSpec& spec,
                                std::span<const double> extra_breakpoints,
                                std::span<const Singularity> singularities);

/// Flattened 1D integration grid: absolute node positions and weights.
/// Singular transforms are not applied here (used for smooth tensor
/// integrands and cached affinity tables).
struct FlatGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
};

FlatGrid flatten_grid(const QuadratureSpec& spec,
                      std::span<const double> extra_breakpoints,
                      int nodes_per_panel = 0);

}  // namespace rhoest
