#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rhoest/density.hpp"
#include "rhoest/space.hpp"

namespace rhoest {

/// Default selection slack; any smaller positive value is also valid.
inline constexpr double kRhoSlack = 11.36;

/// ψ(x) = (x−1)/(x+1) on [0,+inf], with ψ(+inf) = 1.
double psi(double x);

/// Scores of one estimation run over a finite model.
struct RhoScoreTable {
  std::vector<std::string> model_ids;
  std::vector<double> upsilon;  // by model index, each in [0, n]
  /// Full pairwise statistic, row-major m×m, kept only on request.
  std::optional<std::vector<double>> t_matrix;
  int chosen_index = -1;
  std::string chosen_id;
  double slack_used = kRhoSlack;
  /// Indices whose score is within `slack_used` of the minimum.
  std::vector<int> admissible;

  double upsilon_of(const std::string& id) const;
};

/// T(x, q, q') = Σ_i ψ(√(q'(x_i)/q(x_i))), with the ratio conventions
/// 0/0 = 1 and a/0 = +inf taken on log densities. Antisymmetric in
/// (q, q') exactly, values in [−n, n].
double t_statistic(const Sample& sample, const DensityCandidate& q,
                   const DensityCandidate& q_prime);

/// Υ(x, q) = max over q' in the model of T(x, q, q'); ≥ 0 since the
/// model contains q itself.
double upsilon_score(const Sample& sample, const DensityCandidate& q,
                     const FiniteModel& model);

/// The estimator over a finite model: scores every candidate, picks the
/// minimizer of Υ (ties broken by lowest model index) and records the
/// admissible set at the given slack. Pair scoring may run on several
/// threads; reductions are index-ordered so results do not depend on
/// the thread count.
RhoScoreTable rho_estimate(const Sample& sample, const FiniteModel& model,
                           double slack = kRhoSlack, int threads = 1,
                           bool keep_t_matrix = false);

namespace detail {

/// Per-(point, candidate) scaled square-root densities, column-major;
/// rows needing extended-value handling are listed in `special_rows`
/// and neutralized in the vector data. Pair statistics computed from
/// this structure are bit-identical to direct evaluation.
struct ScoreMatrix {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> sqrt_density;  // exp(log/2), [c*n + k]
  std::vector<double> logs;          // raw log densities, [c*n + k]
  std::vector<std::size_t> special_rows;

  const double* col(std::size_t c) const { return sqrt_density.data() + c * n; }
  const double* log_col(std::size_t c) const { return logs.data() + c * n; }
};

ScoreMatrix build_score_matrix(const Sample& sample,
                               const std::vector<DensityCandidate>& candidates,
                               int threads);

/// Restriction of a score matrix to a subset of rows (a block).
ScoreMatrix gather_rows(const ScoreMatrix& full, const std::vector<int>& rows);

double pair_t(const ScoreMatrix& sm, std::size_t qi, std::size_t qj);

/// Fills Υ for every candidate (and optionally the full T matrix).
void score_all_pairs(const ScoreMatrix& sm, int threads,
                     std::vector<double>& upsilon_out,
                     std::vector<double>* t_matrix_out);

RhoScoreTable select_from_scores(const FiniteModel& model,
                                 std::vector<double> upsilon, double slack,
                                 std::optional<std::vector<double>> t_matrix);

}  // namespace detail

}  // namespace rhoest
