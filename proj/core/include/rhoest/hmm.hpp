#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rhoest/density.hpp"
#include "rhoest/families.hpp"
#include "rhoest/space.hpp"

namespace rhoest {

/// Probability vector over K hidden states.
struct SimplexWeights {
  int K = 0;
  std::vector<double> w;

  SimplexWeights() = default;
  SimplexWeights(std::vector<double> weights);
};

/// Row-stochastic K×K matrix.
struct TransitionMatrix {
  int K = 0;
  std::vector<std::vector<double>> rows;

  TransitionMatrix() = default;
  TransitionMatrix(std::vector<std::vector<double>> r);
};

/// Parameters (K, w, Q, F) of a finite hidden-state chain with one
/// emission per state.
struct HmmParams {
  int K = 0;
  SimplexWeights w;
  TransitionMatrix Q;
  std::vector<EmissionSpec> emissions;

  HmmParams() = default;
  HmmParams(SimplexWeights weights, TransitionMatrix trans,
            std::vector<EmissionSpec> em);
};

/// Overlapping L-tuples of a scalar series.
struct WindowedSample {
  std::size_t N = 0;
  int L = 0;
  Sample sample;  // n = N+1-L tuples on product(base, L)
};

/// pre: 2 <= L <= floor(N/2).
WindowedSample window(std::span<const double> series, int L,
                      std::shared_ptr<const SampleSpace> base);

/// The law of L consecutive observations as a density candidate on
/// product(base, L), evaluated by an O(K²L) forward recursion with
/// log-sum-exp stabilization (identical to the K^L mixture sum).
DensityCandidate product_chain_density(const HmmParams& params, int L,
                                       std::shared_ptr<const SampleSpace> base,
                                       std::string id = {});

/// The K^L brute-force mixture log density; test oracle for the
/// forward recursion, exponential in L.
double product_chain_log_density_bruteforce(const HmmParams& params, int L,
                                            std::span<const double> x);

/// Invariant distribution of an irreducible aperiodic Q (primitivity
/// checked on powers up to K²), residual below 1e-12.
SimplexWeights stationary_distribution(const TransitionMatrix& Q);

/// All probability vectors with entries in {delta, delta+step, ...}
/// summing to 1, enumerated lexicographically. `delta` must lie on the
/// step grid: (1 − K·delta)/step must be an integer.
std::vector<SimplexWeights> simplex_grid(int K, double delta, double step);

/// K-fold product of row grids.
std::vector<TransitionMatrix> transition_grid(int K, double delta, double step);

/// Grid floor: min(Vbar/(n_s1·(K−1)), 1/K).
double delta_for(double vbar, std::size_t n_s1, int K);

/// VC-budget of per-state nets of sizes m_1..m_K over L-tuples:
/// Σ over (k_1..k_L) of (1 + Σ_l log2 m_{k_l}).
double vbar_for_nets(const std::vector<std::size_t>& net_sizes, int K, int L);

/// Closed form for exponential-family emissions with dimensions d_k:
/// 3·K^L + L·K^{L−1}·(d_1+...+d_K).
double vbar_exponential_family(int K, int L, const std::vector<int>& dims);

/// A finite model of L-tuple laws over simplex/transition grids and
/// per-state emission nets, with the id -> parameter index retained.
/// Candidate ids are decimal lexicographic indices in (w, Q, F) order.
struct HmmModel {
  std::shared_ptr<const SampleSpace> base;
  int K = 0;
  int L = 0;
  double delta = 0.0;
  double step = 0.0;
  std::vector<SimplexWeights> w_grid;
  std::vector<TransitionMatrix> q_grid;
  std::vector<std::vector<EmissionSpec>> emission_nets;  // per state
  std::shared_ptr<const FiniteModel> model;
  std::vector<HmmParams> params_by_index;
};

HmmModel build_hmm_model(const std::vector<std::vector<EmissionSpec>>& nets,
                         int K, int L, double delta, double step,
                         std::shared_ptr<const SampleSpace> base = nullptr,
                         std::size_t budget = 100000);

/// Permutation-aligned parameter error:
/// min over σ of ||w∘σ − ŵ||² + ||Q∘σ − Q̂||² + Σ_k (||θ_{σ(k)} − θ̂_k||² ∧ 1),
/// σ applied to rows and columns of Q consistently. K <= 6.
double param_error(const HmmParams& est, const HmmParams& truth);

}  // namespace rhoest
