#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rhoest/blocks.hpp"
#include "rhoest/density.hpp"
#include "rhoest/hmm.hpp"
#include "rhoest/simulate.hpp"
#include "rhoest/spacing.hpp"

namespace rhoest {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// How the spacing parameter is chosen per replicate.
struct SPolicy {
  enum class Kind { fixed, grid, oracle_scan };
  Kind kind = Kind::fixed;
  int s = 0;        // fixed
  double tau = M_E; // grid / oracle_scan
};

struct ContaminationConfig {
  std::string mode;  // "huber" | "outlier_set"
  double epsilon = 0.0;
  std::vector<std::size_t> indices;
  EmissionSpec contaminant;
};

/// A fully validated experiment description. The `truth` and `model`
/// blocks stay scenario-specific JSON; unknown fields anywhere are
/// rejected at parse time.
struct ExperimentConfig {
  int version = 1;
  std::string scenario;
  std::uint64_t seed = 0;
  int replicates = 1;
  std::vector<std::size_t> n_list;
  std::size_t n2 = 0;  // hold-out size for spacing selection
  SPolicy s_policy;
  nlohmann::json truth;
  nlohmann::json model;
  std::optional<ContaminationConfig> contamination;
  int threads = 1;
};

ExperimentConfig parse_config(const nlohmann::json& j);

/// One replicate-level result row. `param_err` is NaN when the scenario
/// has no parameter metric; a non-empty `error` marks an aborted
/// replicate (its numeric fields are NaN).
struct RiskRow {
  std::string scenario;
  int replicate = 0;
  std::size_t n = 0;
  int s_used = 0;
  double h2 = 0.0;
  double param_err = std::numeric_limits<double>::quiet_NaN();
  double ms = 0.0;
  std::uint64_t seed = 0;
  std::string chosen_id;  // persisted in the summary, not the CSV columns
  std::string error;
};

struct RiskReport {
  std::vector<RiskRow> rows;
  nlohmann::json summary;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least-squares fit of ln(median h²) against ln(n) over the rows;
/// needs at least 3 distinct n values with positive medians.
SlopeFit fit_rate_slope(const std::vector<RiskRow>& rows);

RiskReport run_experiment(const ExperimentConfig& config);

// ---- persistence ---------------------------------------------------------

/// Series CSV: '#'-prefixed metadata lines, then a y (and optional h)
/// column. Doubles are round-trip exact.
void write_series_csv(const std::string& path, std::span<const double> y,
                      const std::vector<int>* hidden,
                      const std::string& provenance);

struct SeriesFile {
  std::vector<double> y;
  std::vector<int> hidden;
  std::string provenance;
};
SeriesFile read_series_csv(const std::string& path);

/// Report CSV with the fixed column set
/// scenario,replicate,n,s_used,h2,param_err,ms,seed.
void write_report_csv(const std::string& path, const RiskReport& report);
std::vector<RiskRow> read_report_csv(const std::string& path);

/// Persisted model documents. Tuple-grid models use the flat schema
/// {K, L, delta, step, w_grid, q_grid, emission_families,
/// candidate_count}; plain 1D nets use {"net1d": {"families": [...]}}.
nlohmann::json model_to_json(const HmmModel& model);
nlohmann::json net1d_to_json(const std::vector<EmissionSpec>& families);

struct LoadedModel {
  std::shared_ptr<const FiniteModel> model;
  std::optional<HmmModel> hmm;  // set for tuple-grid models
};
LoadedModel model_from_json(const nlohmann::json& j);

/// Builds the model described by an experiment config `model` block.
LoadedModel model_from_config(const nlohmann::json& model_block);

/// Shortest round-trip decimal text for a double (CSV/golden output).
std::string format_double(double v);

}  // namespace rhoest
