#include "rhoest/rho.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <stdexcept>

#include "rhoest/parallel.hpp"

namespace rhoest {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// ψ(√(q'/q)) from raw log densities, used on rows carrying extended
// values. For ordinary rows it reproduces the vectorized formula
// (E'−E)/(E'+E) with E = exp(log/2) bit for bit.
double special_term(double li, double lj) {
  const bool pi = (li == kInf), pj = (lj == kInf);
  if (pi || pj) {
    if (pi && pj) return 0.0;  // ratio of two declared singular values
    return pj ? 1.0 : -1.0;
  }
  double a = std::exp(0.5 * li);
  double b = std::exp(0.5 * lj);
  if (std::isinf(a) || std::isinf(b)) {
    if (std::isinf(a) && std::isinf(b)) {
      const double m = std::max(li, lj);
      a = std::exp(0.5 * (li - m));
      b = std::exp(0.5 * (lj - m));
    } else {
      return std::isinf(b) ? 1.0 : -1.0;
    }
  } else if (a == 0.0 && b == 0.0) {
    if (li == lj) return 0.0;  // includes the 0/0 = 1 convention
    const double m = std::max(li, lj);
    a = std::exp(0.5 * (li - m));
    b = std::exp(0.5 * (lj - m));
  }
  return (b - a) / (b + a);
}

}  // namespace

double psi(double x) {
  if (std::isnan(x) || x < 0.0)
    throw std::invalid_argument("psi: argument must be in [0, +inf]");
  if (x == kInf) return 1.0;
  return (x - 1.0) / (x + 1.0);
}

double RhoScoreTable::upsilon_of(const std::string& id) const {
  for (std::size_t i = 0; i < model_ids.size(); ++i)
    if (model_ids[i] == id) return upsilon[i];
  throw std::invalid_argument("upsilon_of: unknown id '" + id + "'");
}

namespace detail {

ScoreMatrix build_score_matrix(const Sample& sample,
                               const std::vector<DensityCandidate>& candidates,
                               int threads) {
  const std::size_t n = sample.n;
  const std::size_t m = candidates.size();
  ScoreMatrix sm;
  sm.n = n;
  sm.m = m;
  sm.logs.resize(n * m);
  sm.sqrt_density.resize(n * m);
  parallel_chunks(m, threads, [&](std::size_t cb, std::size_t ce, int) {
    for (std::size_t c = cb; c < ce; ++c) {
      double* lcol = sm.logs.data() + c * n;
      double* ecol = sm.sqrt_density.data() + c * n;
      const auto& cand = candidates[c];
      for (std::size_t k = 0; k < n; ++k) {
        const double l = cand.log_density(sample.point(k));
        lcol[k] = l;
        ecol[k] = std::exp(0.5 * l);  // exp(-inf) == 0 exactly
      }
    }
  });
  // A row needs scalar handling when the vector formula could hit
  // 0/0, inf/inf or a declared +inf density value.
  std::vector<std::uint8_t> special(n, 0);
  for (std::size_t c = 0; c < m; ++c) {
    const double* lcol = sm.log_col(c);
    const double* ecol = sm.col(c);
    for (std::size_t k = 0; k < n; ++k) {
      if (lcol[k] == kInf || std::isinf(ecol[k])) {
        special[k] = 2;
      } else if (ecol[k] == 0.0 && special[k] == 0) {
        special[k] = 1;         // one vanishing entry is still fine
      } else if (ecol[k] == 0.0 && special[k] == 1) {
        special[k] = 2;         // two can meet as 0/0
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    if (special[k] == 2) sm.special_rows.push_back(k);
  for (std::size_t k : sm.special_rows)
    for (std::size_t c = 0; c < m; ++c)
      sm.sqrt_density[c * n + k] = 1.0;  // neutral in the vector pass
  return sm;
}

ScoreMatrix gather_rows(const ScoreMatrix& full, const std::vector<int>& rows) {
  ScoreMatrix sm;
  sm.n = rows.size();
  sm.m = full.m;
  sm.logs.resize(sm.n * sm.m);
  sm.sqrt_density.resize(sm.n * sm.m);
  for (std::size_t c = 0; c < sm.m; ++c) {
    const double* src_l = full.log_col(c);
    const double* src_e = full.col(c);
    double* dst_l = sm.logs.data() + c * sm.n;
    double* dst_e = sm.sqrt_density.data() + c * sm.n;
    for (std::size_t k = 0; k < sm.n; ++k) {
      dst_l[k] = src_l[rows[k]];
      dst_e[k] = src_e[rows[k]];
    }
  }
  // Translate special rows into block-local coordinates.
  const std::vector<std::size_t>& specials = full.special_rows;
  for (std::size_t k = 0; k < sm.n; ++k) {
    if (std::binary_search(specials.begin(), specials.end(),
                           static_cast<std::size_t>(rows[k])))
      sm.special_rows.push_back(k);
  }
  return sm;
}

double pair_t(const ScoreMatrix& sm, std::size_t qi, std::size_t qj) {
  const double* a = sm.col(qi);
  const double* b = sm.col(qj);
  double acc = 0.0;
  for (std::size_t k = 0; k < sm.n; ++k) acc += (b[k] - a[k]) / (b[k] + a[k]);
  if (!sm.special_rows.empty()) {
    const double* la = sm.log_col(qi);
    const double* lb = sm.log_col(qj);
    for (std::size_t k : sm.special_rows) acc += special_term(la[k], lb[k]);
  }
  return acc;
}

void score_all_pairs(const ScoreMatrix& sm, int threads,
                     std::vector<double>& upsilon_out,
                     std::vector<double>* t_matrix_out) {
  const std::size_t m = sm.m;
  upsilon_out.assign(m, 0.0);  // the q' = q pair contributes 0
  if (t_matrix_out) t_matrix_out->assign(m * m, 0.0);
  threads = std::max(1, threads);
  std::vector<std::vector<double>> partial(
      static_cast<std::size_t>(threads), std::vector<double>(m, 0.0));
  parallel_chunks(m, threads, [&](std::size_t ib, std::size_t ie, int tid) {
    std::vector<double>& up = partial[static_cast<std::size_t>(tid)];
    for (std::size_t i = ib; i < ie; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const double t = pair_t(sm, i, j);
        up[i] = std::max(up[i], t);
        up[j] = std::max(up[j], -t);
        if (t_matrix_out) {
          (*t_matrix_out)[i * m + j] = t;
          (*t_matrix_out)[j * m + i] = -t;
        }
      }
    }
  });
  for (const auto& up : partial)
    for (std::size_t i = 0; i < m; ++i)
      upsilon_out[i] = std::max(upsilon_out[i], up[i]);
}

RhoScoreTable select_from_scores(const FiniteModel& model,
                                 std::vector<double> upsilon, double slack,
                                 std::optional<std::vector<double>> t_matrix) {
  RhoScoreTable table;
  table.model_ids.reserve(model.size());
  for (const auto& c : model.candidates()) table.model_ids.push_back(c.id);
  table.upsilon = std::move(upsilon);
  table.t_matrix = std::move(t_matrix);
  table.slack_used = slack;
  int best = 0;
  for (std::size_t i = 1; i < table.upsilon.size(); ++i)
    if (table.upsilon[i] < table.upsilon[best]) best = static_cast<int>(i);
  table.chosen_index = best;
  table.chosen_id = table.model_ids[best];
  const double cutoff = table.upsilon[best] + slack;
  for (std::size_t i = 0; i < table.upsilon.size(); ++i)
    if (table.upsilon[i] < cutoff) table.admissible.push_back(static_cast<int>(i));
  return table;
}

}  // namespace detail

double t_statistic(const Sample& sample, const DensityCandidate& q,
                   const DensityCandidate& q_prime) {
  if (!q.space->same_as(*sample.space) || !q_prime.space->same_as(*sample.space))
    throw std::invalid_argument("space mismatch");
  const detail::ScoreMatrix sm =
      detail::build_score_matrix(sample, {q, q_prime}, 1);
  return detail::pair_t(sm, 0, 1);
}

double upsilon_score(const Sample& sample, const DensityCandidate& q,
                     const FiniteModel& model) {
  const int qi = model.index_of(q.id);
  if (qi < 0)
    throw std::invalid_argument("upsilon_score: candidate not in model");
  const detail::ScoreMatrix sm =
      detail::build_score_matrix(sample, model.candidates(), 1);
  double best = 0.0;
  for (std::size_t j = 0; j < sm.m; ++j) {
    if (j == static_cast<std::size_t>(qi)) continue;
    best = std::max(best, detail::pair_t(sm, static_cast<std::size_t>(qi), j));
  }
  return best;
}

RhoScoreTable rho_estimate(const Sample& sample, const FiniteModel& model,
                           double slack, int threads, bool keep_t_matrix) {
  if (model.size() == 0) throw std::invalid_argument("rho_estimate: empty model");
  if (!(slack > 0.0 && slack <= kRhoSlack))
    throw std::invalid_argument("rho_estimate: slack must be in (0, 11.36]");
  if (!sample.space->same_as(*model.space()))
    throw std::invalid_argument("space mismatch");
  const detail::ScoreMatrix sm =
      detail::build_score_matrix(sample, model.candidates(), threads);
  std::vector<double> upsilon;
  std::optional<std::vector<double>> tmat;
  if (keep_t_matrix) tmat.emplace();
  detail::score_all_pairs(sm, threads, upsilon,
                          keep_t_matrix ? &*tmat : nullptr);
  return detail::select_from_scores(model, std::move(upsilon), slack,
                                    std::move(tmat));
}

}  // namespace rhoest
