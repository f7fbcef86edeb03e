#include "rhoest/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rhoest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSimplexTol = 1e-12;

double log_sum_exp(std::span<const double> v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  if (m == kInf) return kInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

std::vector<double> log_vector(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = v[i] > 0.0 ? std::log(v[i]) : -kInf;
  return out;
}

}  // namespace

SimplexWeights::SimplexWeights(std::vector<double> weights)
    : K(static_cast<int>(weights.size())), w(std::move(weights)) {
  if (w.empty()) throw std::invalid_argument("simplex weights: empty");
  double sum = 0.0;
  for (double x : w) {
    if (x < 0.0) throw std::invalid_argument("simplex weights: negative entry");
    sum += x;
  }
  if (std::fabs(sum - 1.0) > kSimplexTol)
    throw std::invalid_argument("simplex weights: entries must sum to 1");
}

TransitionMatrix::TransitionMatrix(std::vector<std::vector<double>> r)
    : K(static_cast<int>(r.size())), rows(std::move(r)) {
  if (rows.empty()) throw std::invalid_argument("transition matrix: empty");
  for (const auto& row : rows) {
    if (row.size() != rows.size())
      throw std::invalid_argument("transition matrix: not square");
    double sum = 0.0;
    for (double x : row) {
      if (x < 0.0)
        throw std::invalid_argument("transition matrix: negative entry");
      sum += x;
    }
    if (std::fabs(sum - 1.0) > kSimplexTol)
      throw std::invalid_argument("transition matrix: rows must sum to 1");
  }
}

HmmParams::HmmParams(SimplexWeights weights, TransitionMatrix trans,
                     std::vector<EmissionSpec> em)
    : K(weights.K), w(std::move(weights)), Q(std::move(trans)),
      emissions(std::move(em)) {
  if (K < 1) throw std::invalid_argument("hmm params: K >= 1");
  if (Q.K != K || static_cast<int>(emissions.size()) != K)
    throw std::invalid_argument("hmm params: size mismatch");
}

WindowedSample window(std::span<const double> series, int L,
                      std::shared_ptr<const SampleSpace> base) {
  const std::size_t N = series.size();
  if (L < 2 || static_cast<std::size_t>(L) > N / 2)
    throw std::invalid_argument("window: need 2 <= L <= floor(N/2)");
  const std::size_t n = N + 1 - static_cast<std::size_t>(L);
  std::vector<double> flat;
  flat.reserve(n * static_cast<std::size_t>(L));
  for (std::size_t i = 0; i < n; ++i)
    for (int l = 0; l < L; ++l) flat.push_back(series[i + static_cast<std::size_t>(l)]);
  WindowedSample out;
  out.N = N;
  out.L = L;
  out.sample = Sample(SampleSpace::product(std::move(base), L), std::move(flat));
  return out;
}

DensityCandidate product_chain_density(const HmmParams& params, int L,
                                       std::shared_ptr<const SampleSpace> base,
                                       std::string id) {
  if (L < 1) throw std::invalid_argument("product_chain_density: L >= 1");
  const int K = params.K;
  auto space = SampleSpace::product(base, L);

  std::vector<double> log_w = log_vector(params.w.w);
  std::vector<double> log_q(static_cast<std::size_t>(K) * K);
  for (int i = 0; i < K; ++i) {
    const auto lr = log_vector(params.Q.rows[i]);
    for (int j = 0; j < K; ++j) log_q[static_cast<std::size_t>(i) * K + j] = lr[j];
  }
  const std::vector<EmissionSpec> emissions = params.emissions;

  DensityCandidate cand;
  cand.id = std::move(id);
  cand.space = space;
  cand.log_density = [K, L, log_w, log_q,
                      emissions](std::span<const double> x) {
    // Forward recursion in log space.
    std::vector<double> alpha(K), next(K), terms(K);
    for (int k = 0; k < K; ++k)
      alpha[k] = log_w[k] + emission_log_density(emissions[k], x[0]);
    for (int l = 1; l < L; ++l) {
      for (int k2 = 0; k2 < K; ++k2) {
        for (int k1 = 0; k1 < K; ++k1)
          terms[k1] = alpha[k1] + log_q[static_cast<std::size_t>(k1) * K + k2];
        next[k2] = log_sum_exp(terms) +
                   emission_log_density(emissions[k2], x[l]);
      }
      std::swap(alpha, next);
    }
    return log_sum_exp(alpha);
  };

  // Linear-scale tensor evaluator for affinity tables: per-axis emission
  // values are shared across the grid, the chain part is a small matrix
  // product per tuple.
  const std::vector<double> wv = params.w.w;
  std::vector<double> qv(static_cast<std::size_t>(K) * K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      qv[static_cast<std::size_t>(i) * K + j] = params.Q.rows[i][j];
  cand.tensor_density_eval = [K, L, wv, qv, emissions](
                                 std::span<const double> axis,
                                 std::span<double> out) {
    const std::size_t g = axis.size();
    std::vector<double> f(static_cast<std::size_t>(K) * g);
    for (int k = 0; k < K; ++k)
      for (std::size_t i = 0; i < g; ++i) {
        const double l = emission_log_density(emissions[k], axis[i]);
        f[static_cast<std::size_t>(k) * g + i] =
            std::isinf(l) && l < 0 ? 0.0 : std::exp(l);
      }
    std::vector<std::size_t> idx(L, 0);
    std::vector<double> alpha(K), next(K);
    for (std::size_t t = 0; t < out.size(); ++t) {
      for (int k = 0; k < K; ++k)
        alpha[k] = wv[k] * f[static_cast<std::size_t>(k) * g + idx[0]];
      for (int l = 1; l < L; ++l) {
        for (int k2 = 0; k2 < K; ++k2) {
          double acc = 0.0;
          for (int k1 = 0; k1 < K; ++k1)
            acc += alpha[k1] * qv[static_cast<std::size_t>(k1) * K + k2];
          next[k2] = acc * f[static_cast<std::size_t>(k2) * g + idx[l]];
        }
        std::swap(alpha, next);
      }
      out[t] = std::accumulate(alpha.begin(), alpha.end(), 0.0);
      for (int l = L - 1; l >= 0; --l) {
        if (++idx[l] < g) break;
        idx[l] = 0;
      }
    }
  };

  // Axis-level panel structure inherited from the emissions.
  if (base->kind() == SampleSpace::Kind::continuous1d) {
    for (const auto& e : emissions) {
      const EmissionSupport sup = emission_support(e);
      cand.breakpoints.insert(cand.breakpoints.end(), sup.breakpoints.begin(),
                              sup.breakpoints.end());
      cand.singularities.insert(cand.singularities.end(),
                                sup.singularities.begin(),
                                sup.singularities.end());
    }
    std::sort(cand.breakpoints.begin(), cand.breakpoints.end());
    cand.breakpoints.erase(
        std::unique(cand.breakpoints.begin(), cand.breakpoints.end()),
        cand.breakpoints.end());
  }
  return cand;
}

double product_chain_log_density_bruteforce(const HmmParams& params, int L,
                                            std::span<const double> x) {
  const int K = params.K;
  std::vector<int> path(L, 0);
  std::vector<double> terms;
  while (true) {
    double log_term = params.w.w[path[0]] > 0.0 ? std::log(params.w.w[path[0]])
                                                : -kInf;
    for (int l = 1; l < L; ++l) {
      const double q = params.Q.rows[path[l - 1]][path[l]];
      log_term += q > 0.0 ? std::log(q) : -kInf;
    }
    for (int l = 0; l < L; ++l)
      log_term += emission_log_density(params.emissions[path[l]], x[l]);
    terms.push_back(log_term);
    int l = L - 1;
    while (l >= 0 && path[l] == K - 1) path[l--] = 0;
    if (l < 0) break;
    ++path[l];
  }
  return log_sum_exp(terms);
}

SimplexWeights stationary_distribution(const TransitionMatrix& Q) {
  const int K = Q.K;
  // Primitivity: some power of Q entrywise positive, tested up to K².
  std::vector<double> power(static_cast<std::size_t>(K) * K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      power[static_cast<std::size_t>(i) * K + j] = Q.rows[i][j];
  bool primitive = false;
  for (int p = 1; p <= K * K && !primitive; ++p) {
    primitive = std::all_of(power.begin(), power.end(),
                            [](double v) { return v > 0.0; });
    if (primitive) break;
    std::vector<double> nxt(static_cast<std::size_t>(K) * K, 0.0);
    for (int i = 0; i < K; ++i)
      for (int k = 0; k < K; ++k) {
        const double v = power[static_cast<std::size_t>(i) * K + k];
        if (v == 0.0) continue;
        for (int j = 0; j < K; ++j)
          nxt[static_cast<std::size_t>(i) * K + j] += v * Q.rows[k][j];
      }
    power = std::move(nxt);
  }
  if (!primitive)
    throw std::invalid_argument(
        "stationary_distribution: chain is not irreducible and aperiodic");

  // Solve pi (Q - I) = 0 with sum(pi) = 1 by Gaussian elimination on the
  // transposed system; the last equation is replaced by the normalization.
  std::vector<std::vector<double>> a(K, std::vector<double>(K + 1, 0.0));
  for (int i = 0; i < K - 1; ++i) {
    for (int j = 0; j < K; ++j) a[i][j] = Q.rows[j][i] - (i == j ? 1.0 : 0.0);
    a[i][K] = 0.0;
  }
  for (int j = 0; j < K; ++j) a[K - 1][j] = 1.0;
  a[K - 1][K] = 1.0;
  for (int col = 0; col < K; ++col) {
    int pivot = col;
    for (int r = col + 1; r < K; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    if (std::fabs(a[col][col]) < 1e-14)
      throw std::invalid_argument("stationary_distribution: singular system");
    for (int r = 0; r < K; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c <= K; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> pi(K);
  for (int i = 0; i < K; ++i) pi[i] = a[i][K] / a[i][i];
  // Residual check on pi Q = pi.
  double residual = 0.0;
  for (int j = 0; j < K; ++j) {
    double v = 0.0;
    for (int i = 0; i < K; ++i) v += pi[i] * Q.rows[i][j];
    residual = std::max(residual, std::fabs(v - pi[j]));
  }
  if (residual > 1e-12)
    throw std::runtime_error("stationary_distribution: residual too large");
  return SimplexWeights(std::move(pi));
}

std::vector<SimplexWeights> simplex_grid(int K, double delta, double step) {
  if (K < 1) throw std::invalid_argument("simplex_grid: K >= 1");
  if (!(delta > 0.0 && delta <= 1.0 / K))
    throw std::invalid_argument("simplex_grid: need 0 < delta <= 1/K");
  if (!(step > 0.0)) throw std::invalid_argument("simplex_grid: step > 0");
  const double budget = 1.0 - K * delta;
  const long total = std::lround(budget / step);
  if (std::fabs(K * delta + total * step - 1.0) > 1e-9)
    throw std::invalid_argument("simplex_grid: delta is not on the step grid");

  // Enumerate integer compositions of `total` into K parts; the vectors
  // sum to 1 exactly in this integer representation. The double
  // conversion drift is folded into the last entry.
  std::vector<SimplexWeights> out;
  std::vector<long> parts(K, 0);
  auto emit = [&]() {
    std::vector<double> w(K);
    for (int i = 0; i < K; ++i) w[i] = delta + static_cast<double>(parts[i]) * step;
    double sum = 0.0;
    for (double v : w) sum += v;
    w[K - 1] += 1.0 - sum;
    out.emplace_back(std::move(w));
  };
  std::function<void(int, long)> rec = [&](int level, long remaining) {
    if (level == K - 1) {
      parts[level] = remaining;
      emit();
      return;
    }
    for (long v = 0; v <= remaining; ++v) {
      parts[level] = v;
      rec(level + 1, remaining - v);
    }
  };
  rec(0, total);
  return out;
}

std::vector<TransitionMatrix> transition_grid(int K, double delta, double step) {
  const std::vector<SimplexWeights> rows = simplex_grid(K, delta, step);
  std::vector<TransitionMatrix> out;
  std::vector<std::size_t> idx(K, 0);
  const std::size_t r = rows.size();
  std::size_t total = 1;
  for (int i = 0; i < K; ++i) {
    total *= r;
    if (total > (1u << 24))
      throw std::invalid_argument("transition_grid: grid too large");
  }
  out.reserve(total);
  while (true) {
    std::vector<std::vector<double>> m(K);
    for (int i = 0; i < K; ++i) m[i] = rows[idx[i]].w;
    out.emplace_back(std::move(m));
    int i = K - 1;
    while (i >= 0 && idx[i] == r - 1) idx[i--] = 0;
    if (i < 0) break;
    ++idx[i];
  }
  return out;
}

double delta_for(double vbar, std::size_t n_s1, int K) {
  if (!(vbar > 0.0) || n_s1 < 1 || K < 2)
    throw std::invalid_argument("delta_for: need vbar > 0, n >= 1, K >= 2");
  return std::min(vbar / (static_cast<double>(n_s1) * (K - 1)), 1.0 / K);
}

double vbar_for_nets(const std::vector<std::size_t>& net_sizes, int K, int L) {
  if (static_cast<int>(net_sizes.size()) != K || K < 1 || L < 1)
    throw std::invalid_argument("vbar_for_nets: bad arguments");
  double sum_log = 0.0;
  for (std::size_t m : net_sizes) {
    if (m < 1) throw std::invalid_argument("vbar_for_nets: net size >= 1");
    sum_log += std::log2(static_cast<double>(m));
  }
  // Σ over K^L tuples of (1 + Σ_l log2 m_{k_l}).
  return std::pow(K, L) + L * std::pow(K, L - 1) * sum_log;
}

double vbar_exponential_family(int K, int L, const std::vector<int>& dims) {
  if (static_cast<int>(dims.size()) != K || K < 1 || L < 1)
    throw std::invalid_argument("vbar_exponential_family: bad arguments");
  const double d_sum = std::accumulate(dims.begin(), dims.end(), 0.0);
  return 3.0 * std::pow(K, L) + L * std::pow(K, L - 1) * d_sum;
}

HmmModel build_hmm_model(const std::vector<std::vector<EmissionSpec>>& nets,
                         int K, int L, double delta, double step,
                         std::shared_ptr<const SampleSpace> base,
                         std::size_t budget) {
  if (static_cast<int>(nets.size()) != K)
    throw std::invalid_argument("build_hmm_model: one net per state");
  for (const auto& net : nets)
    if (net.empty()) throw std::invalid_argument("build_hmm_model: empty net");
  if (L < 1) throw std::invalid_argument("build_hmm_model: L >= 1");

  HmmModel out;
  out.K = K;
  out.L = L;
  out.delta = delta;
  out.step = step;
  out.w_grid = simplex_grid(K, delta, step);
  out.q_grid = transition_grid(K, delta, step);
  out.emission_nets = nets;

  if (!base) {
    std::vector<EmissionSpec> all;
    for (const auto& net : nets) all.insert(all.end(), net.begin(), net.end());
    base = space_for_emissions(all);
  }
  out.base = base;

  std::size_t combos = 1;
  for (const auto& net : nets) combos *= net.size();
  const std::size_t count = out.w_grid.size() * out.q_grid.size() * combos;
  if (count > budget)
    throw std::invalid_argument("build_hmm_model: model budget exceeded (" +
                                std::to_string(count) + " candidates)");

  // Certify emission normalization once; tuple candidates inherit it.
  for (const auto& net : nets)
    for (const auto& spec : net) {
      const DensityCandidate c = make_emission_candidate(spec, base);
      const double err = normalization_error(c);
      if (!(err <= 1e-6))
        throw std::invalid_argument("build_hmm_model: emission '" + c.id +
                                    "' not normalized (error " +
                                    std::to_string(err) + ")");
    }

  std::vector<DensityCandidate> candidates;
  candidates.reserve(count);
  out.params_by_index.reserve(count);
  std::vector<std::size_t> pick(K, 0);
  std::size_t index = 0;
  for (const auto& w : out.w_grid) {
    for (const auto& q : out.q_grid) {
      std::fill(pick.begin(), pick.end(), 0);
      while (true) {
        std::vector<EmissionSpec> emissions(K);
        for (int k = 0; k < K; ++k) emissions[k] = nets[k][pick[k]];
        HmmParams params(w, q, std::move(emissions));
        candidates.push_back(
            product_chain_density(params, L, base, std::to_string(index)));
        out.params_by_index.push_back(std::move(params));
        ++index;
        int k = K - 1;
        while (k >= 0 && pick[k] == nets[k].size() - 1) pick[k--] = 0;
        if (k < 0) break;
        ++pick[k];
      }
    }
  }
  out.model = std::make_shared<FiniteModel>(
      SampleSpace::product(base, L), std::move(candidates), std::nullopt,
      NormalizationCheck::spot);
  return out;
}

double param_error(const HmmParams& est, const HmmParams& truth) {
  if (est.K != truth.K) throw std::invalid_argument("param_error: K mismatch");
  const int K = est.K;
  if (K > 6) throw std::invalid_argument("param_error: K > 6 unsupported");
  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  double best = kInf;
  do {
    bool tags_ok = true;
    for (int k = 0; k < K && tags_ok; ++k)
      tags_ok = truth.emissions[perm[k]].family == est.emissions[k].family;
    if (!tags_ok) continue;
    double err = 0.0;
    for (int k = 0; k < K; ++k) {
      const double d = truth.w.w[perm[k]] - est.w.w[k];
      err += d * d;
    }
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) {
        const double d = truth.Q.rows[perm[i]][perm[j]] - est.Q.rows[i][j];
        err += d * d;
      }
    for (int k = 0; k < K; ++k) {
      const auto a = emission_param_vector(truth.emissions[perm[k]]);
      const auto b = emission_param_vector(est.emissions[k]);
      if (a.size() != b.size())
        throw std::invalid_argument("param_error: emission dimension mismatch");
      double d2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
      err += std::min(d2, 1.0);
    }
    best = std::min(best, err);
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (best == kInf)
    throw std::invalid_argument("param_error: no tag-compatible permutation");
  return best;
}

}  // namespace rhoest
