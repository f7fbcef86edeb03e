#include "rhoest/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rhoest {

namespace {

constexpr double kNormalizationTol = 1e-6;
constexpr std::size_t kMaxGridPoints = 8u << 20;  // tensor/tuple budget

// Per-axis Gauss-Legendre order on tensor-product grids. The 1D engine
// keeps its 64-node panels; tensor axes integrate smooth mixture
// factors, where 24 nodes per panel already reach machine precision,
// and the grid size grows with the L-th power of the axis length.
constexpr int kTensorAxisNodes = 24;

std::vector<Singularity> scaled_singularities(const DensityCandidate& c,
                                              double power) {
  std::vector<Singularity> s = c.singularities;
  for (auto& x : s) x.exponent *= power;
  return s;
}

}  // namespace

EvalGrid make_eval_grid(const SampleSpace& space,
                        std::span<const double> extra_breakpoints,
                        int nodes_per_panel) {
  EvalGrid grid;
  switch (space.kind()) {
    case SampleSpace::Kind::discrete: {
      grid.dim = 1;
      grid.points = space.atoms();
      grid.weights.assign(space.atoms().size(), 1.0);
      return grid;
    }
    case SampleSpace::Kind::continuous1d: {
      grid.dim = 1;
      FlatGrid g = flatten_grid(space.quad(), extra_breakpoints, nodes_per_panel);
      grid.points = std::move(g.nodes);
      grid.weights = std::move(g.weights);
      return grid;
    }
    case SampleSpace::Kind::product: {
      const auto& base = *space.base();
      const int L = space.arity();
      const int axis_nodes =
          nodes_per_panel > 0 ? nodes_per_panel
          : base.kind() == SampleSpace::Kind::continuous1d ? kTensorAxisNodes
                                                           : 0;
      EvalGrid axis = make_eval_grid(base, extra_breakpoints, axis_nodes);
      const std::size_t g = axis.size();
      std::size_t total = 1;
      for (int l = 0; l < L; ++l) {
        total *= g;
        if (total > kMaxGridPoints)
          throw std::invalid_argument("make_eval_grid: tensor grid too large");
      }
      grid.dim = L;
      grid.axis = axis.points;
      grid.points.resize(total * L);
      grid.weights.assign(total, 1.0);
      std::vector<std::size_t> idx(L, 0);
      for (std::size_t t = 0; t < total; ++t) {
        double w = 1.0;
        for (int l = 0; l < L; ++l) {
          grid.points[t * L + l] = axis.points[idx[l]];
          w *= axis.weights[idx[l]];
        }
        grid.weights[t] = w;
        for (int l = L - 1; l >= 0; --l) {
          if (++idx[l] < g) break;
          idx[l] = 0;
        }
      }
      return grid;
    }
  }
  throw std::logic_error("make_eval_grid: unknown space kind");
}

std::vector<double> density_on_grid(const DensityCandidate& cand,
                                    const EvalGrid& grid) {
  std::vector<double> out(grid.size());
  const int L = grid.dim;
  if (cand.tensor_density_eval && L > 1 && !grid.axis.empty()) {
    cand.tensor_density_eval(grid.axis, out);
    return out;
  }
  for (std::size_t t = 0; t < grid.size(); ++t) {
    const double l = cand.log_density({grid.points.data() + t * L,
                                       static_cast<std::size_t>(L)});
    out[t] = std::isinf(l) && l < 0 ? 0.0 : std::exp(l);
  }
  return out;
}

double normalization_error(const DensityCandidate& cand) {
  const auto& space = *cand.space;
  if (space.kind() == SampleSpace::Kind::continuous1d &&
      !cand.singularities.empty()) {
    // Singularity-aware path: weighted panels keep the power part exact.
    auto sing = scaled_singularities(cand, 1.0);
    auto edges = build_edges(space.quad(), cand.breakpoints, sing);
    const double mass = integrate_panels(
        [&](double x, double log_w) {
          const double l = cand.log_density({&x, 1});
          const double v = l + log_w;
          return std::isinf(v) && v < 0 ? 0.0 : std::exp(v);
        },
        edges, sing, space.quad().nodes_per_panel);
    return std::fabs(mass - 1.0);
  }
  EvalGrid grid = make_eval_grid(space, cand.breakpoints);
  std::vector<double> dens = density_on_grid(cand, grid);
  double mass = 0.0;
  for (std::size_t t = 0; t < grid.size(); ++t) mass += grid.weights[t] * dens[t];
  return std::fabs(mass - 1.0);
}

FiniteModel::FiniteModel(std::shared_ptr<const SampleSpace> space,
                         std::vector<DensityCandidate> candidates,
                         std::optional<double> dimension_bound_override,
                         NormalizationCheck check)
    : space_(std::move(space)), candidates_(std::move(candidates)) {
  if (candidates_.empty())
    throw std::invalid_argument("finite model: no candidates");
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    const auto& c = candidates_[i];
    if (!c.space || !c.space->same_as(*space_))
      throw std::invalid_argument("finite model: space mismatch");
    if (!index_.emplace(c.id, static_cast<int>(i)).second)
      throw std::invalid_argument("finite model: duplicate candidate id '" +
                                  c.id + "'");
  }
  std::vector<std::size_t> to_check;
  if (check == NormalizationCheck::all) {
    to_check.resize(candidates_.size());
    for (std::size_t i = 0; i < to_check.size(); ++i) to_check[i] = i;
  } else if (check == NormalizationCheck::spot) {
    to_check = {0, candidates_.size() / 2, candidates_.size() - 1};
  }
  for (std::size_t i : to_check) {
    const double err = normalization_error(candidates_[i]);
    if (!(err <= kNormalizationTol))
      throw std::invalid_argument("finite model: candidate '" +
                                  candidates_[i].id +
                                  "' is not normalized (error " +
                                  std::to_string(err) + ")");
  }
  dimension_bound_ =
      dimension_bound_override.value_or(9.0 * std::log(2.0 * candidates_.size()));
}

int FiniteModel::index_of(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

}  // namespace rhoest
