#include "rhoest/blocks.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "rhoest/metrics.hpp"

namespace rhoest {

int s_max(std::size_t n) {
  if (n < 2) throw std::invalid_argument("s_max: need n >= 2");
  return static_cast<int>((n - 2) / 2);
}

BlockPlan make_blocks(std::size_t n, int s) {
  if (n < 2) throw std::invalid_argument("make_blocks: need n >= 2");
  if (s < 0 || s > s_max(n))
    throw std::invalid_argument("insufficient data for spacing");
  BlockPlan plan;
  plan.n = n;
  plan.s = s;
  const int stride = s + 1;
  plan.blocks.resize(stride);
  plan.sizes.resize(stride);
  for (int b = 1; b <= stride; ++b) {
    auto& block = plan.blocks[b - 1];
    for (std::size_t i = static_cast<std::size_t>(b); i <= n;
         i += static_cast<std::size_t>(stride))
      block.push_back(static_cast<int>(i - 1));  // store 0-based
    plan.sizes[b - 1] = (n + stride - b) / stride;
    assert(plan.sizes[b - 1] == block.size());
    if (plan.sizes[b - 1] < 2)
      throw std::logic_error("make_blocks: block shorter than 2");
  }
  return plan;
}

HellingerCache::HellingerCache(std::vector<DensityCandidate> candidates)
    : candidates_(std::move(candidates)) {
  if (candidates_.empty())
    throw std::invalid_argument("HellingerCache: no candidates");
  std::vector<double> breakpoints;
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    const auto& c = candidates_[i];
    if (!c.space->same_as(*candidates_[0].space))
      throw std::invalid_argument("HellingerCache: space mismatch");
    by_id_.emplace(c.id, static_cast<int>(i));
    if (!c.singularities.empty()) singular_fallback_ = true;
    breakpoints.insert(breakpoints.end(), c.breakpoints.begin(),
                       c.breakpoints.end());
  }
  if (!singular_fallback_) {
    grid_ = make_eval_grid(*candidates_[0].space, breakpoints);
    sqrt_weights_.resize(grid_.size());
    for (std::size_t t = 0; t < grid_.size(); ++t)
      sqrt_weights_[t] = std::sqrt(grid_.weights[t]);
  }
}

int HellingerCache::add(const DensityCandidate& cand) {
  std::lock_guard<std::mutex> lock(mu_);
  return add_unlocked(cand);
}

double HellingerCache::h2(int i, int j) {
  std::lock_guard<std::mutex> lock(mu_);
  return h2_unlocked(i, j);
}

void HellingerCache::ensure_rows(const std::vector<int>& rows) {
  std::lock_guard<std::mutex> lock(mu_);
  ensure_rows_unlocked(rows);
}

int HellingerCache::add_unlocked(const DensityCandidate& cand) {
  auto it = by_id_.find(cand.id);
  if (it != by_id_.end()) return it->second;
  if (!cand.space->same_as(*candidates_[0].space))
    throw std::invalid_argument("HellingerCache: space mismatch");
  if (!cand.singularities.empty()) singular_fallback_ = true;
  const int idx = static_cast<int>(candidates_.size());
  candidates_.push_back(cand);
  by_id_.emplace(cand.id, idx);
  return idx;
}

std::vector<double>& HellingerCache::table_for(int i) {
  auto it = row_tables_.find(i);
  if (it != row_tables_.end()) return it->second;
  std::vector<double> dens = density_on_grid(candidates_[i], grid_);
  for (std::size_t t = 0; t < dens.size(); ++t)
    dens[t] = std::sqrt(dens[t]) * sqrt_weights_[t];
  return row_tables_.emplace(i, std::move(dens)).first->second;
}

double HellingerCache::h2_unlocked(int i, int j) {
  if (i == j) return 0.0;
  const auto key = std::minmax(i, j);
  auto it = pairs_.find({key.first, key.second});
  if (it != pairs_.end()) return it->second;
  double value;
  if (singular_fallback_) {
    value = hellinger2(candidates_[i], candidates_[j]);
  } else {
    const std::vector<double>& a = table_for(key.first);
    const std::vector<double>& b = table_for(key.second);
    double aff = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) aff += a[t] * b[t];
    value = std::min(1.0, std::max(0.0, 1.0 - aff));
  }
  pairs_.emplace(std::make_pair(key.first, key.second), value);
  return value;
}

void HellingerCache::ensure_rows_unlocked(const std::vector<int>& rows) {
  if (singular_fallback_) {
    for (int r : rows)
      for (std::size_t j = 0; j < candidates_.size(); ++j)
        h2_unlocked(r, static_cast<int>(j));
    return;
  }
  std::vector<int> missing;
  for (int r : rows) {
    bool complete = true;
    for (std::size_t j = 0; j < candidates_.size() && complete; ++j) {
      const auto key = std::minmax<int>(r, static_cast<int>(j));
      if (r != static_cast<int>(j) &&
          !pairs_.count({key.first, key.second}))
        complete = false;
    }
    if (!complete) missing.push_back(r);
  }
  if (missing.empty()) return;
  for (int r : missing) table_for(r);
  // One streaming pass over the collection fills all missing rows.
  for (std::size_t j = 0; j < candidates_.size(); ++j) {
    const int jj = static_cast<int>(j);
    bool needed = false;
    for (int r : missing)
      if (r != jj && !pairs_.count(std::minmax(r, jj))) needed = true;
    if (!needed) continue;
    auto row_it = row_tables_.find(jj);
    std::vector<double> transient;
    const std::vector<double>* tbl;
    if (row_it != row_tables_.end()) {
      tbl = &row_it->second;
    } else {
      transient = density_on_grid(candidates_[j], grid_);
      for (std::size_t t = 0; t < transient.size(); ++t)
        transient[t] = std::sqrt(transient[t]) * sqrt_weights_[t];
      tbl = &transient;
    }
    for (int r : missing) {
      if (r == jj) continue;
      const auto key = std::minmax(r, jj);
      if (pairs_.count({key.first, key.second})) continue;
      const std::vector<double>& a = row_tables_.find(r)->second;
      double aff = 0.0;
      for (std::size_t t = 0; t < a.size(); ++t) aff += a[t] * (*tbl)[t];
      pairs_.emplace(std::make_pair(key.first, key.second),
                     std::min(1.0, std::max(0.0, 1.0 - aff)));
    }
  }
}

std::pair<DensityCandidate, SpacingDiagnostics> estimate_with_spacing(
    const Sample& sample, const FiniteModel& model, int s, double iota,
    int threads, HellingerCache* cache, bool keep_block_tables) {
  if (!(iota > 0.0 && iota <= 1273.0))
    throw std::invalid_argument("estimate_with_spacing: iota must be in (0, 1273]");
  if (!sample.space->same_as(*model.space()))
    throw std::invalid_argument("space mismatch");

  SpacingDiagnostics diag;
  diag.plan = make_blocks(sample.n, s);
  diag.iota = iota;

  const detail::ScoreMatrix full =
      detail::build_score_matrix(sample, model.candidates(), threads);
  const int nb = s + 1;
  diag.block_choice.resize(nb);
  diag.block_upsilon.resize(nb);
  for (int b = 0; b < nb; ++b) {
    const detail::ScoreMatrix sub = detail::gather_rows(full, diag.plan.blocks[b]);
    std::vector<double> upsilon;
    detail::score_all_pairs(sub, threads, upsilon, nullptr);
    int best = 0;
    for (std::size_t i = 1; i < upsilon.size(); ++i)
      if (upsilon[i] < upsilon[best]) best = static_cast<int>(i);
    diag.block_choice[b] = best;
    diag.block_upsilon[b] = upsilon[best];
    if (keep_block_tables) diag.block_tables.push_back(std::move(upsilon));
  }

  // Aggregation: argmin_Q Σ_b n_b h²(P̂_b, Q) over the model.
  std::unique_ptr<HellingerCache> local;
  if (!cache) {
    local = std::make_unique<HellingerCache>(model.candidates());
    cache = local.get();
  }
  std::vector<int> distinct;
  std::map<int, double> weight;  // block choice -> Σ n_b
  for (int b = 0; b < nb; ++b)
    weight[diag.block_choice[b]] += static_cast<double>(diag.plan.sizes[b]);
  std::vector<int> rows;
  for (const auto& [choice, w] : weight) {
    (void)w;
    rows.push_back(cache->add(model.at(choice)));
    distinct.push_back(choice);
  }
  cache->ensure_rows(rows);

  diag.aggregation_objective.assign(model.size(), 0.0);
  for (std::size_t qi = 0; qi < model.size(); ++qi) {
    const int q_row = cache->add(model.at(qi));
    double obj = 0.0;
    std::size_t k = 0;
    for (const auto& [choice, w] : weight) {
      obj += w * cache->h2(rows[k], q_row);
      ++k;
      (void)choice;
    }
    diag.aggregation_objective[qi] = obj;
  }
  int best = 0;
  for (std::size_t qi = 1; qi < model.size(); ++qi)
    if (diag.aggregation_objective[qi] < diag.aggregation_objective[best])
      best = static_cast<int>(qi);
  diag.chosen_index = best;
  return {model.at(best), std::move(diag)};
}

}  // namespace rhoest
