#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rhoest/families.hpp"
#include "rhoest/hmm.hpp"
#include "rhoest/rng.hpp"

namespace rhoest {

/// Finite-state chain path (state indices 0..K-1), reproducible given
/// (seed, stream).
std::vector<int> simulate_markov(const TransitionMatrix& Q,
                                 const SimplexWeights& pi0, std::size_t n,
                                 std::uint64_t seed, std::uint64_t stream);

struct HmmSimulation {
  std::vector<double> y;
  std::vector<int> hidden;
};

HmmSimulation simulate_hmm(const HmmParams& params, std::size_t n,
                           std::uint64_t seed, std::uint64_t stream);

/// Independent replacement model: Huber mode swaps each point with a
/// contaminant draw with probability epsilon; outlier mode swaps
/// exactly the listed indices.
struct ContaminationSpec {
  enum class Mode { huber, outlier_set };
  Mode mode = Mode::huber;
  double epsilon = 0.0;
  std::vector<std::size_t> outlier_indices;
  EmissionSpec contaminant;
  std::uint64_t seed = 0;
  std::uint64_t mask_stream = stream_id(StreamRole::contamination_mask, 0);
  std::uint64_t draw_stream = stream_id(StreamRole::contamination_draw, 0);
};

std::vector<double> contaminate(std::span<const double> series,
                                const ContaminationSpec& spec);

/// Euler-Maruyama discretization of dY = -U'(Y) dt + dB. `thin` retains
/// every thin-th post-burn-in step, so consecutive outputs are spaced
/// thin*dt apart in process time. The drift must be well behaved on the
/// visited range; that is the caller's responsibility.
struct DiffusionSpec {
  std::function<double(double)> drift;  // -U'(x)
  double dt = 0.01;
  std::size_t burn_in = 0;
  int thin = 1;
  double x0 = 0.0;
};

std::vector<double> simulate_langevin(const DiffusionSpec& spec, std::size_t n,
                                      std::uint64_t seed, std::uint64_t stream);

}  // namespace rhoest
