#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "rhoest/density.hpp"
#include "rhoest/rho.hpp"

namespace rhoest {

/// Largest admissible spacing for n observations: ⌊(n−2)/2⌋.
int s_max(std::size_t n);

/// The partition of {1..n} into s+1 spaced subsequences: block b
/// (1-based) holds indices b, b+(s+1), b+2(s+1), ...
struct BlockPlan {
  std::size_t n = 0;
  int s = 0;
  std::vector<std::vector<int>> blocks;  // 0-based sample indices
  std::vector<std::size_t> sizes;        // ⌊(n+s+1−b)/(1+s)⌋ per block
};

BlockPlan make_blocks(std::size_t n, int s);

/// Lazy pairwise h² between candidates of a shared collection. Entries
/// persist across calls, so repeated aggregations over one model reuse
/// earlier work. `ensure_rows` fills whole rows with one streaming pass
/// over the collection, which is much cheaper than per-pair quadrature
/// on tensor-product grids. Thread safe; values do not depend on the
/// interleaving of callers.
class HellingerCache {
 public:
  explicit HellingerCache(std::vector<DensityCandidate> candidates);

  /// Index of a candidate registered in the cache; appends it if new.
  int add(const DensityCandidate& cand);

  double h2(int i, int j);
  void ensure_rows(const std::vector<int>& rows);

  std::size_t size() const { return candidates_.size(); }

 private:
  int add_unlocked(const DensityCandidate& cand);
  double h2_unlocked(int i, int j);
  void ensure_rows_unlocked(const std::vector<int>& rows);
  std::vector<double>& table_for(int i);

  std::mutex mu_;
  std::vector<DensityCandidate> candidates_;
  std::map<std::string, int> by_id_;
  bool singular_fallback_ = false;
  EvalGrid grid_;
  std::vector<double> sqrt_weights_;
  std::map<int, std::vector<double>> row_tables_;  // √(density)·√w per point
  std::map<std::pair<int, int>, double> pairs_;
};

/// Diagnostics of one spaced estimation run.
struct SpacingDiagnostics {
  BlockPlan plan;
  std::vector<int> block_choice;             // model index chosen per block
  std::vector<double> block_upsilon;         // winning Υ per block
  std::vector<double> aggregation_objective; // Σ_b n_b·h²(P̂_b, Q) per candidate
  std::vector<std::vector<double>> block_tables;  // full Υ per block, on request
  int chosen_index = -1;
  double iota = 1.0;
};

/// Runs the estimator on each of the s+1 spaced sub-samples and returns
/// the model candidate minimizing the size-weighted h² barycenter
/// objective (exhaustive minimization, so any positive slack ι is
/// satisfied). Ties break at the lowest model index.
std::pair<DensityCandidate, SpacingDiagnostics> estimate_with_spacing(
    const Sample& sample, const FiniteModel& model, int s, double iota = 1.0,
    int threads = 1, HellingerCache* cache = nullptr,
    bool keep_block_tables = false);

}  // namespace rhoest
