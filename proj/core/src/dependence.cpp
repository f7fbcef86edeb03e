#include "rhoest/dependence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rhoest/blocks.hpp"

namespace rhoest {

namespace {

void validate_joint(const std::vector<std::vector<double>>& joint) {
  if (joint.empty() || joint[0].empty())
    throw std::invalid_argument("joint table: empty");
  double sum = 0.0;
  for (const auto& row : joint) {
    if (row.size() != joint[0].size())
      throw std::invalid_argument("joint table: ragged rows");
    for (double v : row) {
      if (v < 0.0) throw std::invalid_argument("joint table: negative entry");
      sum += v;
    }
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("joint table: entries must sum to 1");
}

std::vector<double> row_marginal(const std::vector<std::vector<double>>& joint) {
  std::vector<double> m(joint.size(), 0.0);
  for (std::size_t a = 0; a < joint.size(); ++a)
    for (double v : joint[a]) m[a] += v;
  return m;
}

std::vector<double> col_marginal(const std::vector<std::vector<double>>& joint) {
  std::vector<double> m(joint[0].size(), 0.0);
  for (const auto& row : joint)
    for (std::size_t b = 0; b < row.size(); ++b) m[b] += row[b];
  return m;
}

std::vector<double> left_multiply(const std::vector<double>& v,
                                  const std::vector<std::vector<double>>& m) {
  std::vector<double> out(m[0].size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += v[i] * m[i][j];
  }
  return out;
}

std::vector<std::vector<double>> matrix_power(
    const std::vector<std::vector<double>>& m, int t) {
  const std::size_t k = m.size();
  std::vector<std::vector<double>> out(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) out[i][i] = 1.0;
  for (int p = 0; p < t; ++p) {
    std::vector<std::vector<double>> next(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t l = 0; l < k; ++l) {
        if (out[i][l] == 0.0) continue;
        for (std::size_t j = 0; j < k; ++j) next[i][j] += out[i][l] * m[l][j];
      }
    out = std::move(next);
  }
  return out;
}

double tv_vectors(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace

double coefficient_of_information(
    const std::vector<std::vector<double>>& joint) {
  validate_joint(joint);
  const std::vector<double> pa = row_marginal(joint);
  const std::vector<double> pb = col_marginal(joint);
  double kl = 0.0;
  for (std::size_t a = 0; a < joint.size(); ++a)
    for (std::size_t b = 0; b < joint[a].size(); ++b) {
      const double j = joint[a][b];
      if (j == 0.0) continue;
      const double prod = pa[a] * pb[b];
      if (prod == 0.0) return std::numeric_limits<double>::infinity();
      kl += j * std::log(j / prod);
    }
  return std::max(0.0, kl);
}

double markov_dependence_term(const TransitionMatrix& Q,
                              const SimplexWeights& pi0, std::size_t n, int s,
                              int b) {
  if (Q.K != pi0.K)
    throw std::invalid_argument("markov_dependence_term: K mismatch");
  const BlockPlan plan = make_blocks(n, s);
  if (b < 1 || b > s + 1)
    throw std::invalid_argument("markov_dependence_term: block out of range");
  const std::size_t nb = plan.sizes[b - 1];
  const int K = Q.K;

  // Marginal of the first block element: pi0 Q^{b-1}.
  std::vector<double> marginal = pi0.w;
  const auto step = matrix_power(Q.rows, s + 1);
  {
    const auto to_first = matrix_power(Q.rows, b - 1);
    marginal = left_multiply(marginal, to_first);
  }
  double total = 0.0;
  for (std::size_t i = 2; i <= nb; ++i) {
    std::vector<std::vector<double>> joint(K, std::vector<double>(K, 0.0));
    for (int a = 0; a < K; ++a)
      for (int c = 0; c < K; ++c) joint[a][c] = marginal[a] * step[a][c];
    total += coefficient_of_information(joint);
    marginal = left_multiply(marginal, step);
  }
  return total;
}

double hmm_dependence_bound(const HmmParams& params, std::size_t n, int s,
                            int b) {
  if (params.K == 1) return 0.0;
  return markov_dependence_term(params.Q, params.w, n, s, b);
}

double beta_mixing_markov(const TransitionMatrix& Q, int t) {
  if (t < 0) throw std::invalid_argument("beta_mixing_markov: t >= 0");
  const int K = Q.K;
  // Cesàro-averaged power iteration from the uniform vector.
  std::vector<double> v(K, 1.0 / K);
  std::vector<double> avg = v;
  for (int iter = 0; iter < 100000; ++iter) {
    const std::vector<double> next = left_multiply(v, Q.rows);
    std::vector<double> next_avg(K);
    for (int i = 0; i < K; ++i)
      next_avg[i] = (avg[i] * (iter + 1) + next[i]) / (iter + 2);
    double delta = 0.0;
    for (int i = 0; i < K; ++i) delta += std::fabs(next_avg[i] - avg[i]);
    v = next;
    avg = std::move(next_avg);
    if (delta < 1e-15 && iter > 2) break;
  }
  const std::vector<double> pi = left_multiply(avg, Q.rows);
  double residual = 0.0;
  for (int i = 0; i < K; ++i) residual += std::fabs(pi[i] - avg[i]);
  if (residual > 1e-10)
    throw std::runtime_error("beta_mixing_markov: invariant law not found");

  const auto qt = matrix_power(Q.rows, t);
  double beta = 0.0;
  for (int i = 0; i < K; ++i) {
    if (avg[i] == 0.0) continue;
    beta += avg[i] * tv_vectors(qt[i], avg);
  }
  return beta;
}

ReversePinskerGap reverse_pinsker_gap(
    const std::vector<std::vector<double>>& joint) {
  validate_joint(joint);
  ReversePinskerGap out;
  out.kl = coefficient_of_information(joint);
  const std::vector<double> pa = row_marginal(joint);
  const std::vector<double> pb = col_marginal(joint);
  for (std::size_t a = 0; a < joint.size(); ++a) {
    if (pa[a] == 0.0) continue;
    std::vector<double> conditional(joint[a].size());
    for (std::size_t b = 0; b < joint[a].size(); ++b)
      conditional[b] = joint[a][b] / pa[a];
    out.bound += 2.0 * tv_vectors(conditional, pb);
  }
  return out;
}

}  // namespace rhoest
