#include "rhoest/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace rhoest {

std::vector<int> simulate_markov(const TransitionMatrix& Q,
                                 const SimplexWeights& pi0, std::size_t n,
                                 std::uint64_t seed, std::uint64_t stream) {
  if (Q.K != pi0.K) throw std::invalid_argument("simulate_markov: K mismatch");
  if (n == 0) throw std::invalid_argument("simulate_markov: n >= 1");
  Rng rng(seed, stream);
  std::vector<int> path(n);
  path[0] = static_cast<int>(rng.discrete(pi0.w));
  for (std::size_t i = 1; i < n; ++i)
    path[i] = static_cast<int>(rng.discrete(Q.rows[path[i - 1]]));
  return path;
}

HmmSimulation simulate_hmm(const HmmParams& params, std::size_t n,
                           std::uint64_t seed, std::uint64_t stream) {
  if (n == 0) throw std::invalid_argument("simulate_hmm: n >= 1");
  Rng rng(seed, stream);
  HmmSimulation out;
  out.hidden.resize(n);
  out.y.resize(n);
  out.hidden[0] = static_cast<int>(rng.discrete(params.w.w));
  out.y[0] = sample_emission(params.emissions[out.hidden[0]], rng);
  for (std::size_t i = 1; i < n; ++i) {
    out.hidden[i] = static_cast<int>(rng.discrete(params.Q.rows[out.hidden[i - 1]]));
    out.y[i] = sample_emission(params.emissions[out.hidden[i]], rng);
  }
  return out;
}

std::vector<double> contaminate(std::span<const double> series,
                                const ContaminationSpec& spec) {
  std::vector<double> out(series.begin(), series.end());
  Rng draw(spec.seed, spec.draw_stream);
  if (spec.mode == ContaminationSpec::Mode::huber) {
    if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0))
      throw std::invalid_argument("contaminate: epsilon must be in [0,1]");
    if (spec.epsilon == 0.0) return out;
    Rng mask(spec.seed, spec.mask_stream);
    for (auto& y : out)
      if (mask.bernoulli(spec.epsilon)) y = sample_emission(spec.contaminant, draw);
    return out;
  }
  for (std::size_t idx : spec.outlier_indices) {
    if (idx >= out.size())
      throw std::invalid_argument("contaminate: outlier index out of range");
    out[idx] = sample_emission(spec.contaminant, draw);
  }
  return out;
}

std::vector<double> simulate_langevin(const DiffusionSpec& spec, std::size_t n,
                                      std::uint64_t seed, std::uint64_t stream) {
  if (!(spec.dt > 0.0)) throw std::invalid_argument("simulate_langevin: dt > 0");
  if (spec.thin < 1) throw std::invalid_argument("simulate_langevin: thin >= 1");
  if (n == 0) throw std::invalid_argument("simulate_langevin: n >= 1");
  Rng rng(seed, stream);
  const double sqrt_dt = std::sqrt(spec.dt);
  double y = spec.x0;
  for (std::size_t i = 0; i < spec.burn_in; ++i)
    y += spec.drift(y) * spec.dt + sqrt_dt * rng.normal();
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int t = 0; t < spec.thin; ++t)
      y += spec.drift(y) * spec.dt + sqrt_dt * rng.normal();
    out.push_back(y);
  }
  return out;
}

}  // namespace rhoest
