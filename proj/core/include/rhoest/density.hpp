#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rhoest/quadrature.hpp"
#include "rhoest/space.hpp"

namespace rhoest {

/// An evaluable (log-)density over a sample space. Candidates are
/// immutable after construction and cheap to copy.
///
/// `log_density` may return -inf (outside support) and +inf only at
/// locations declared in `singularities`. `breakpoints` are axis
/// positions where the density is non-smooth; the quadrature engine
/// splits panels there. Both lists are expressed in base-space
/// coordinates and apply to every axis of a product space.
struct DensityCandidate {
  std::string id;
  std::shared_ptr<const SampleSpace> space;
  std::function<double(std::span<const double>)> log_density;
  std::vector<double> breakpoints;
  std::vector<Singularity> singularities;

  /// Optional fast evaluator for product spaces: fills `out` with the
  /// density (linear scale) at every tuple of `axis_nodes`, tuples
  /// enumerated row-major (axis 0 slowest). Used for affinity tables;
  /// must agree with exp(log_density) up to rounding.
  std::function<void(std::span<const double> axis_nodes, std::span<double> out)>
      tensor_density_eval;

  std::map<std::string, std::string> metadata;
};

/// |∫ exp(log_density) dμ − 1| for a candidate, by exact summation on
/// discrete spaces and singularity-aware quadrature otherwise.
double normalization_error(const DensityCandidate& cand);

/// How FiniteModel construction certifies candidate normalization.
enum class NormalizationCheck {
  all,        // check every candidate (default)
  spot,       // check first, middle, last (builders certify components)
  none,
};

/// An ordered collection of density candidates sharing one space.
class FiniteModel {
 public:
  FiniteModel(std::shared_ptr<const SampleSpace> space,
              std::vector<DensityCandidate> candidates,
              std::optional<double> dimension_bound_override = std::nullopt,
              NormalizationCheck check = NormalizationCheck::all);

  const std::shared_ptr<const SampleSpace>& space() const { return space_; }
  const std::vector<DensityCandidate>& candidates() const { return candidates_; }
  std::size_t size() const { return candidates_.size(); }
  const DensityCandidate& at(std::size_t i) const { return candidates_[i]; }
  double dimension_bound() const { return dimension_bound_; }

  /// Index of a candidate id; -1 if absent.
  int index_of(const std::string& id) const;

 private:
  std::shared_ptr<const SampleSpace> space_;
  std::vector<DensityCandidate> candidates_;
  std::map<std::string, int> index_;
  double dimension_bound_ = 0.0;
};

/// Evaluation support shared by the metric engine and affinity caches:
/// either the exact atom enumeration of a (product-)discrete space or
/// the (tensor) Gauss-Legendre grid of a continuous one.
struct EvalGrid {
  int dim = 1;
  std::vector<double> points;   // flat, stride = dim
  std::vector<double> weights;  // one per point
  std::vector<double> axis;     // per-axis nodes (product grids only)
  std::size_t size() const { return weights.size(); }
};

/// Builds the evaluation grid for a space; `extra_breakpoints` refine
/// continuous axes, `nodes_per_panel` overrides the space default.
EvalGrid make_eval_grid(const SampleSpace& space,
                        std::span<const double> extra_breakpoints,
                        int nodes_per_panel = 0);

/// Density values (linear scale) of a candidate at every grid point.
std::vector<double> density_on_grid(const DensityCandidate& cand,
                                    const EvalGrid& grid);

}  // namespace rhoest
