#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "rhoest/blocks.hpp"
#include "rhoest/rho.hpp"

namespace rhoest {

/// Candidate spacings {0} ∪ {⌈τ^j⌉ : j = 0..J}, J = ⌊log_τ(s_max(n1))⌋,
/// deduplicated ascending.
struct SGrid {
  double tau = M_E;
  int J = 0;
  std::vector<int> values;
};

/// pre: n1 >= 4 (so s_max >= 1), tau >= e.
SGrid make_s_grid(std::size_t n1, double tau);

/// Outcome of the two-sample spacing selection.
struct SpacingSelection {
  int s_hat = -1;
  DensityCandidate chosen;
  RhoScoreTable stage2;
  std::vector<int> grid;                    // the S values used
  std::vector<DensityCandidate> stage1;     // per grid entry
  std::vector<int> stage2_s_of_candidate;   // spacing behind each stage-2 candidate
};

/// Stage 1 estimates P̂_s on sample1 for each s in the grid; stage 2
/// runs the estimator on sample2 over the (id-deduplicated, smallest-s)
/// stage-1 outputs. The caller asserts that the two samples are
/// independent; nothing here can verify it.
SpacingSelection select_s(
    const Sample& sample1, const Sample& sample2, const SGrid& grid,
    const std::function<const FiniteModel&(int s)>& model_per_s,
    double iota = 1.0, int threads = 1, HellingerCache* cache = nullptr);

}  // namespace rhoest
