#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rhoest/density.hpp"
#include "rhoest/rng.hpp"
#include "rhoest/space.hpp"

namespace rhoest {

/// A serializable emission (or contaminant sampler) description.
/// Families and parameter packing:
///   exponential  params = {theta}                density theta·e^{-theta x}, x >= 0
///   gaussian     params = {z, sigma}
///   falpha       params = {alpha, z}             (1-alpha)/2 · |x-z|^{-alpha} on |x-z| <= 1
///   categorical  params = {p_1..p_A}, atoms set  probabilities over the atom list
///   uniform      params = {lo, hi}               sampler only
///   constant     params = {value}                sampler only
struct EmissionSpec {
  std::string family;
  std::vector<double> params;
  std::vector<double> atoms;  // categorical only

  bool operator==(const EmissionSpec&) const = default;
};

/// True for families that define a density (usable as model emissions).
bool has_density(const EmissionSpec& spec);

/// Log density of an emission spec at a scalar point.
double emission_log_density(const EmissionSpec& spec, double x);

/// One draw from the spec's distribution.
double sample_emission(const EmissionSpec& spec, Rng& rng);

/// Flat parameter vector used by parameter-error metrics.
std::vector<double> emission_param_vector(const EmissionSpec& spec);

/// Quadrature window, panel breakpoints and singular points needed to
/// integrate this emission accurately.
struct EmissionSupport {
  double support_lo, support_hi;  // mathematical support (may be infinite)
  double quad_lo, quad_hi;        // finite window carrying the mass
  std::vector<double> breakpoints;
  std::vector<Singularity> singularities;
};
EmissionSupport emission_support(const EmissionSpec& spec);

/// Builds the common 1D sample space covering a set of emission specs
/// (union of quadrature windows, merged panel edges). All specs must be
/// discrete (same atoms) or all continuous.
std::shared_ptr<const SampleSpace> space_for_emissions(
    const std::vector<EmissionSpec>& specs);

/// Wraps a spec into a candidate on the given base space.
DensityCandidate make_emission_candidate(const EmissionSpec& spec,
                                         std::shared_ptr<const SampleSpace> base,
                                         std::string id = {});

/// Geometric (log-uniform) grid of exponential rates over [theta_min,
/// theta_max]; count = 1 yields the geometric midpoint.
std::vector<EmissionSpec> exponential_net(double theta_min, double theta_max,
                                          std::size_t count);

/// Uniform location grid of N(z, sigma²) candidates.
std::vector<EmissionSpec> gaussian_location_net(double sigma, double z_lo,
                                                double z_hi, std::size_t count);

/// Location-scale grid: uniform locations × log-uniform scales.
std::vector<EmissionSpec> gaussian_scale_location_net(
    double z_lo, double z_hi, std::size_t z_count, double sigma_min,
    double sigma_max, std::size_t sigma_count);

/// Generic exponential family e^{⟨η(θ),T(x)⟩ + A(θ) + B(x)} on a 1D
/// space; A is computed by quadrature (and cached per θ) when absent.
struct ExpFamilySpec {
  int dim = 1;
  std::function<std::vector<double>(std::span<const double>)> eta;
  std::function<std::vector<double>(double)> T;
  std::function<double(double)> B;
  std::optional<std::function<double(std::span<const double>)>> A;
  double theta_lo = 0.0, theta_hi = 1.0;  // per-coordinate box
  std::shared_ptr<const SampleSpace> base;

  mutable std::shared_ptr<std::map<std::vector<double>, double>> a_cache =
      std::make_shared<std::map<std::vector<double>, double>>();
};

double expfam_log_density(const ExpFamilySpec& spec,
                          std::span<const double> theta, double x);

/// Candidates exp(g) with g concave piecewise-linear on equispaced
/// knots over `[lo, hi]`; one candidate per non-increasing slope
/// sequence drawn from `slope_grid`, normalized by quadrature.
std::vector<DensityCandidate> log_concave_net_1d(
    double lo, double hi, std::size_t knot_count,
    const std::vector<double>& slope_grid);

/// Log density of the singular translate family at x.
double falpha_log_density(double alpha, double z, double x);

/// Categorical candidate over the atoms of a discrete base space.
DensityCandidate categorical_candidate(std::shared_ptr<const SampleSpace> base,
                                       std::vector<double> probs,
                                       std::string id = {});

/// Deterministically generates `count` categorical distributions over
/// `atom_count` atoms with pairwise Hellinger distance at least
/// `min_h`, by seeded rejection.
std::vector<std::vector<double>> separated_categorical_probs(
    std::size_t atom_count, std::size_t count, double min_h,
    std::uint64_t seed);

}  // namespace rhoest
