#pragma once

#include "rhoest/density.hpp"

namespace rhoest {

/// Squared Hellinger distance h²(P,Q) = ½∫(√p−√q)² dμ, in [0,1].
/// Exact summation on (product-)discrete spaces; composite
/// Gauss-Legendre with singularity-weighted panels otherwise. Throws
/// QuadratureError (with the residual) when the embedded convergence
/// check fails, std::invalid_argument on a space mismatch.
double hellinger2(const DensityCandidate& p, const DensityCandidate& q);

/// Total variation ½∫|p−q| dμ, in [0,1]. Same error contract as
/// hellinger2; singular weights are not applied (the integrand is not
/// of product form), panels are still split at singular points.
double total_variation(const DensityCandidate& p, const DensityCandidate& q);

/// Kullback-Leibler divergence ∫ p log(p/q) dμ ≥ 0, +inf when absolute
/// continuity fails (on a grid point for continuous spaces).
double kl_divergence(const DensityCandidate& p, const DensityCandidate& q);

/// Dimension bound for a finite m-element model: 9·ln(2m).
double finite_model_dimension(std::size_t m);

/// VC-index bound for a finite m-element function class: 1 + log2(m).
double vc_index_finite(std::size_t m);

}  // namespace rhoest
