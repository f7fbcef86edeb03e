#pragma once

#include <vector>

#include "rhoest/hmm.hpp"

namespace rhoest {

/// KL divergence of a finite joint table from the product of its
/// marginals. The table must sum to 1 (tolerance 1e-9).
double coefficient_of_information(const std::vector<std::vector<double>>& joint);

/// Exact dependence content of a spaced sub-sequence of a finite
/// Markov chain: Σ_{i=2}^{n(s,b)} I(σ(X^{(s,b)}_{i−1}), σ(X^{(s,b)}_i)),
/// computed from marginals π0·Q^t and the (s+1)-step coupling. For
/// Markov data this equals the joint-vs-product KL of the block law.
/// `b` is 1-based.
double markov_dependence_term(const TransitionMatrix& Q,
                              const SimplexWeights& pi0, std::size_t n, int s,
                              int b);

/// Hidden-chain bound on the same quantity for an HMM: the dependence
/// content of the hidden chain with matching indices.
double hmm_dependence_bound(const HmmParams& params, std::size_t n, int s,
                            int b);

/// Mixing coefficient of a stationary finite chain at lag t:
/// β(t) = Σ_i π_i · d_TV(Q^t_{i·}, π). The invariant law is found by
/// Cesàro-averaged power iteration from the uniform vector, so chains
/// that are merely invariant-reducible (e.g. the identity) resolve to
/// their symmetric invariant law instead of erroring.
double beta_mixing_markov(const TransitionMatrix& Q, int t);

/// KL of a joint from its marginal product together with the reverse
/// bound 2·Σ_a d_TV(L(B|A=a), L(B)); kl <= bound always.
struct ReversePinskerGap {
  double kl = 0.0;
  double bound = 0.0;
};

ReversePinskerGap reverse_pinsker_gap(
    const std::vector<std::vector<double>>& joint);

}  // namespace rhoest
