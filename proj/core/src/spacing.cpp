#include "rhoest/spacing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace rhoest {

SGrid make_s_grid(std::size_t n1, double tau) {
  if (n1 < 4) throw std::invalid_argument("make_s_grid: need n1 >= 4");
  if (!(tau >= M_E)) throw std::invalid_argument("make_s_grid: need tau >= e");
  const int cap = s_max(n1);
  SGrid grid;
  grid.tau = tau;
  // J = floor(log_tau(s_max)), computed with integer-safe adjustment.
  int J = static_cast<int>(std::floor(std::log(static_cast<double>(cap)) /
                                      std::log(tau)));
  while (std::pow(tau, J + 1) <= static_cast<double>(cap)) ++J;
  while (J > 0 && std::pow(tau, J) > static_cast<double>(cap)) --J;
  grid.J = J;
  grid.values.push_back(0);
  for (int j = 0; j <= J; ++j) {
    const int s = static_cast<int>(std::ceil(std::pow(tau, j)));
    if (s <= cap) grid.values.push_back(s);
  }
  std::sort(grid.values.begin(), grid.values.end());
  grid.values.erase(std::unique(grid.values.begin(), grid.values.end()),
                    grid.values.end());
  return grid;
}

SpacingSelection select_s(
    const Sample& sample1, const Sample& sample2, const SGrid& grid,
    const std::function<const FiniteModel&(int s)>& model_per_s, double iota,
    int threads, HellingerCache* cache) {
  if (grid.values.empty()) throw std::invalid_argument("select_s: empty grid");

  SpacingSelection out;
  out.grid = grid.values;
  for (int s : grid.values) {
    const FiniteModel& model = model_per_s(s);
    auto [cand, diag] =
        estimate_with_spacing(sample1, model, s, iota, threads, cache);
    out.stage1.push_back(std::move(cand));
  }

  // Deduplicate by density id, keeping the smallest s (grid ascending).
  std::vector<DensityCandidate> stage2_cands;
  std::map<std::string, int> seen;
  for (std::size_t k = 0; k < out.stage1.size(); ++k) {
    const auto& cand = out.stage1[k];
    if (seen.count(cand.id)) continue;
    seen.emplace(cand.id, grid.values[k]);
    stage2_cands.push_back(cand);
    out.stage2_s_of_candidate.push_back(grid.values[k]);
  }

  // The stage-2 model reuses already certified candidates.
  auto stage2_space = stage2_cands[0].space;
  FiniteModel stage2_model(std::move(stage2_space), std::move(stage2_cands),
                           std::nullopt, NormalizationCheck::none);
  out.stage2 = rho_estimate(sample2, stage2_model, kRhoSlack, threads);
  out.s_hat = out.stage2_s_of_candidate[out.stage2.chosen_index];
  out.chosen = stage2_model.at(out.stage2.chosen_index);
  return out;
}

}  // namespace rhoest
