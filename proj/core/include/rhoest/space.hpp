#pragma once

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rhoest {

/// Panel layout for composite Gauss-Legendre integration over a finite
/// window [lo, hi]. `edges` are interior panel boundaries (families add
/// their breakpoints here so that integrands are smooth per panel).
struct QuadratureSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> edges;
  int nodes_per_panel = 64;

  bool operator==(const QuadratureSpec&) const = default;
};

/// A sample space: a discrete atom list, a 1D continuum, or an L-fold
/// product of a base space. The reference measure is implied by the
/// kind (counting for discrete, Lebesgue otherwise).
class SampleSpace {
public:
  enum class Kind { discrete, continuous1d, product };

  static std::shared_ptr<const SampleSpace> discrete(std::vector<double> atoms);
  /// `support_lo/hi` may be infinite; `quad` must be a finite window
  /// carrying essentially all candidate mass.
  static std::shared_ptr<const SampleSpace> continuous1d(double support_lo,
                                                         double support_hi,
                                                         QuadratureSpec quad);
  static std::shared_ptr<const SampleSpace> product(
      std::shared_ptr<const SampleSpace> base, int arity);

  Kind kind() const { return kind_; }
  const std::vector<double>& atoms() const { return atoms_; }
  const QuadratureSpec& quad() const { return quad_; }
  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }
  const std::shared_ptr<const SampleSpace>& base() const { return base_; }
  int arity() const { return arity_; }

  /// Coordinates per point (1 except for product spaces).
  int point_dim() const;

  std::string reference_measure_id() const;

  bool contains(std::span<const double> point) const;

  bool same_as(const SampleSpace& other) const;

private:
  SampleSpace() = default;

  Kind kind_ = Kind::discrete;
  std::vector<double> atoms_;
  QuadratureSpec quad_;
  double support_lo_ = -std::numeric_limits<double>::infinity();
  double support_hi_ = std::numeric_limits<double>::infinity();
  std::shared_ptr<const SampleSpace> base_;
  int arity_ = 1;
};

/// Observations living on a common space, stored flat with stride
/// space->point_dim().
struct Sample {
  std::shared_ptr<const SampleSpace> space;
  std::vector<double> flat;
  std::size_t n = 0;

  Sample() = default;
  Sample(std::shared_ptr<const SampleSpace> sp, std::vector<double> data);

  std::span<const double> point(std::size_t i) const {
    const std::size_t d = static_cast<std::size_t>(space->point_dim());
    return {flat.data() + i * d, d};
  }
};

}  // namespace rhoest
