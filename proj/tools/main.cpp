// Command line front end: simulate / estimate / select-s / experiment /
// report. Exit codes: 0 success, 2 configuration or input-file error,
// 3 runtime error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "rhoest/experiment.hpp"
#include "rhoest/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rhoest;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

void dump_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

struct SimSpec {
  std::string kind;
  std::size_t n = 0;
  std::string provenance;
  json body;
};

SimSpec parse_sim_config(const json& j) {
  SimSpec spec;
  if (!j.is_object()) throw ConfigError("simulate config: expected an object");
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw ConfigError("simulate config: version 1 required");
  if (!j.contains("kind")) throw ConfigError("simulate config: missing 'kind'");
  spec.kind = j["kind"].get<std::string>();
  if (!j.contains("n")) throw ConfigError("simulate config: missing 'n'");
  spec.n = j["n"].get<std::size_t>();
  spec.provenance =
      j.contains("provenance") ? j["provenance"].get<std::string>() : spec.kind;
  spec.body = j;
  return spec;
}

EmissionSpec emission_of(const json& j) {
  EmissionSpec spec;
  spec.family = j.at("family").get<std::string>();
  spec.params = j.at("params").get<std::vector<double>>();
  if (j.contains("atoms")) spec.atoms = j["atoms"].get<std::vector<double>>();
  return spec;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed,
                 const std::string& out_path) {
  const SimSpec spec = parse_sim_config(load_json(config_path));
  const std::string provenance =
      spec.provenance + "/seed=" + std::to_string(seed);
  if (spec.kind == "hmm") {
    SimplexWeights w(spec.body.at("w").get<std::vector<double>>());
    TransitionMatrix q(
        spec.body.at("Q").get<std::vector<std::vector<double>>>());
    std::vector<EmissionSpec> em;
    for (const auto& e : spec.body.at("emissions")) em.push_back(emission_of(e));
    HmmParams params(std::move(w), std::move(q), std::move(em));
    const HmmSimulation sim =
        simulate_hmm(params, spec.n, seed, stream_id(StreamRole::data, 0));
    write_series_csv(out_path, sim.y, &sim.hidden, provenance);
    return 0;
  }
  if (spec.kind == "markov") {
    TransitionMatrix q(
        spec.body.at("Q").get<std::vector<std::vector<double>>>());
    SimplexWeights pi0(spec.body.at("pi0").get<std::vector<double>>());
    const auto path =
        simulate_markov(q, pi0, spec.n, seed, stream_id(StreamRole::data, 0));
    std::vector<double> y(path.begin(), path.end());
    write_series_csv(out_path, y, nullptr, provenance);
    return 0;
  }
  if (spec.kind == "langevin") {
    DiffusionSpec d;
    const double a = spec.body.at("a").get<double>();
    const std::string pot = spec.body.at("potential").get<std::string>();
    if (pot == "quadratic")
      d.drift = [a](double x) { return -a * x; };
    else if (pot == "quartic")
      d.drift = [a](double x) { return -a * x * x * x; };
    else
      throw ConfigError("simulate config: unknown potential '" + pot + "'");
    d.dt = spec.body.at("dt").get<double>();
    d.burn_in = spec.body.value("burn_in", std::size_t{0});
    d.thin = spec.body.value("thin", 1);
    d.x0 = spec.body.value("x0", 0.0);
    const auto y =
        simulate_langevin(d, spec.n, seed, stream_id(StreamRole::data, 0));
    write_series_csv(out_path, y, nullptr, provenance);
    return 0;
  }
  if (spec.kind == "iid") {
    const EmissionSpec e = emission_of(spec.body.at("emission"));
    Rng rng(seed, stream_id(StreamRole::data, 0));
    std::vector<double> y(spec.n);
    for (auto& v : y) v = sample_emission(e, rng);
    write_series_csv(out_path, y, nullptr, provenance);
    return 0;
  }
  throw ConfigError("simulate config: unknown kind '" + spec.kind + "'");
}

Sample sample_for_model(const LoadedModel& loaded, const SeriesFile& series) {
  if (loaded.hmm) {
    return window(series.y, loaded.hmm->L, loaded.hmm->base).sample;
  }
  return Sample(loaded.model->space(), series.y);
}

int cmd_estimate(const std::string& model_path, const std::string& series_path,
                 int s, double iota, bool emit_upsilon, bool emit_h2,
                 int threads, const std::string& out_path) {
  const LoadedModel loaded = model_from_json(load_json(model_path));
  const SeriesFile series = read_series_csv(series_path);
  const Sample sample = sample_for_model(loaded, series);
  auto [chosen, diag] = estimate_with_spacing(sample, *loaded.model, s, iota,
                                              threads, nullptr, emit_upsilon);
  json result;
  result["chosen_id"] = chosen.id;
  result["s"] = s;
  result["iota"] = iota;
  result["n"] = sample.n;
  json blocks = json::array();
  for (std::size_t b = 0; b < diag.block_choice.size(); ++b)
    blocks.push_back(json{{"block", b + 1},
                          {"size", diag.plan.sizes[b]},
                          {"chosen_id", loaded.model->at(diag.block_choice[b]).id},
                          {"upsilon", diag.block_upsilon[b]}});
  result["blocks"] = std::move(blocks);
  if (emit_upsilon) {
    json tables = json::array();
    for (const auto& t : diag.block_tables) tables.push_back(t);
    result["upsilon_tables"] = std::move(tables);
  }
  if (emit_h2) {
    json obj = json::object();
    for (std::size_t i = 0; i < diag.aggregation_objective.size(); ++i)
      obj[loaded.model->at(i).id] = diag.aggregation_objective[i];
    result["aggregation_objective"] = std::move(obj);
  }
  dump_json(out_path, result);
  std::cout << "chosen " << chosen.id << "\n";
  return 0;
}

int cmd_select_s(const std::string& model_path, const std::string& series1,
                 const std::string& series2, double tau, int threads,
                 const std::string& out_path) {
  const LoadedModel loaded = model_from_json(load_json(model_path));
  const SeriesFile f1 = read_series_csv(series1);
  const SeriesFile f2 = read_series_csv(series2);
  if (f1.provenance.empty() || f2.provenance.empty())
    throw ConfigError("select-s: both series need a provenance tag");
  if (f1.provenance == f2.provenance)
    throw ConfigError(
        "select-s: series share provenance '" + f1.provenance +
        "'; the procedure requires two independent samples");
  const Sample s1 = sample_for_model(loaded, f1);
  const Sample s2 = sample_for_model(loaded, f2);
  const SGrid grid = make_s_grid(s1.n, tau);
  const FiniteModel& model = *loaded.model;
  const SpacingSelection sel =
      select_s(s1, s2, grid, [&model](int) -> const FiniteModel& { return model; },
               1.0, threads);
  json result;
  result["s_hat"] = sel.s_hat;
  result["chosen_id"] = sel.chosen.id;
  result["grid"] = sel.grid;
  json stage1 = json::array();
  for (std::size_t k = 0; k < sel.stage1.size(); ++k)
    stage1.push_back(json{{"s", sel.grid[k]}, {"chosen_id", sel.stage1[k].id}});
  result["stage1"] = std::move(stage1);
  json stage2 = json::object();
  for (std::size_t i = 0; i < sel.stage2.model_ids.size(); ++i)
    stage2[sel.stage2.model_ids[i]] = sel.stage2.upsilon[i];
  result["stage2_upsilon"] = std::move(stage2);
  dump_json(out_path, result);
  std::cout << "selected s=" << sel.s_hat << " (" << sel.chosen.id << ")\n";
  return 0;
}

int cmd_experiment(const std::string& config_path,
                   std::optional<std::uint64_t> seed_override, int threads,
                   const std::string& out_dir) {
  json j = load_json(config_path);
  if (seed_override) j["seed"] = *seed_override;
  if (threads > 0) j["threads"] = threads;
  const ExperimentConfig cfg = parse_config(j);
  const RiskReport report = run_experiment(cfg);
  fs::create_directories(out_dir);
  write_report_csv((fs::path(out_dir) / "report.csv").string(), report);
  dump_json((fs::path(out_dir) / "summary.json").string(), report.summary);
  // Persist the model document alongside, so rows can be recomputed.
  const LoadedModel loaded = model_from_config(cfg.model);
  if (loaded.hmm) {
    dump_json((fs::path(out_dir) / "model.json").string(),
              model_to_json(*loaded.hmm));
  }
  std::cout << "rows " << report.rows.size() << " -> " << out_dir << "\n";
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& out_path) {
  const std::vector<RiskRow> rows = read_report_csv(report_path);
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> h2s;
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> pes;
  for (const auto& r : rows) {
    if (!std::isnan(r.h2)) h2s[{r.scenario, r.n}].push_back(r.h2);
    if (!std::isnan(r.param_err)) pes[{r.scenario, r.n}].push_back(r.param_err);
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open '" + out_path + "'");
  out << "scenario,n,rows,median_h2,median_param_err\n";
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  };
  for (auto& [key, v] : h2s) {
    out << key.first << "," << key.second << "," << v.size() << ","
        << format_double(median(v)) << ",";
    auto it = pes.find(key);
    if (it != pes.end()) out << format_double(median(it->second));
    out << "\n";
  }
  std::map<std::string, std::vector<RiskRow>> by_scenario;
  for (const auto& r : rows) by_scenario[r.scenario].push_back(r);
  for (const auto& [scenario, rs] : by_scenario) {
    std::set<std::size_t> ns;
    for (const auto& r : rs) ns.insert(r.n);
    if (ns.size() < 3) continue;
    try {
      const SlopeFit fit = fit_rate_slope(rs);
      std::cout << scenario << " slope=" << fit.slope << " r2=" << fit.r2
                << "\n";
    } catch (const std::exception& e) {
      std::cout << scenario << " slope unavailable: " << e.what() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rho-estimation toolkit"};
  app.require_subcommand(1);

  std::string config_path, model_path, series1, series2, out_path = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  int s = 0;
  double iota = 1.0;
  double tau = M_E;
  bool emit_upsilon = false, emit_h2 = false;

  auto* sim = app.add_subcommand("simulate", "write a series CSV");
  sim->add_option("--config", config_path, "simulation config JSON")->required();
  sim->add_option("--seed", seed, "RNG seed")->required();
  sim->add_option("--out", out_path, "output CSV path")->required();

  auto* est = app.add_subcommand("estimate", "estimate from a series CSV");
  est->add_option("--model", model_path, "model JSON")->required();
  est->add_option("--series", series1, "series CSV")->required();
  est->add_option("--s", s, "spacing parameter");
  est->add_option("--iota", iota, "aggregation slack");
  est->add_option("--threads", threads, "worker threads");
  est->add_flag("--emit-upsilon", emit_upsilon, "include per-block score tables");
  est->add_flag("--emit-h2", emit_h2, "include the aggregation objective");
  est->add_option("--out", out_path, "result JSON path")->required();

  auto* sel = app.add_subcommand("select-s", "two-sample spacing selection");
  sel->add_option("--model", model_path, "model JSON")->required();
  sel->add_option("--series1", series1, "estimation series CSV")->required();
  sel->add_option("--series2", series2, "hold-out series CSV")->required();
  sel->add_option("--tau", tau, "grid ratio (>= e)");
  sel->add_option("--threads", threads, "worker threads");
  sel->add_option("--out", out_path, "result JSON path")->required();

  auto* exp = app.add_subcommand("experiment", "run a config end to end");
  exp->add_option("--config", config_path, "experiment config JSON")->required();
  auto* seed_opt = exp->add_option("--seed", seed, "seed override");
  exp->add_option("--threads", threads, "worker threads");
  exp->add_option("--out", out_path, "output directory")->required();

  auto* rep = app.add_subcommand("report", "summarize a report CSV");
  rep->add_option("--report", series1, "report CSV")->required();
  rep->add_option("--out", out_path, "summary CSV path")->required();

  try {
    app.parse(argc, argv);
    seed_given = seed_opt->count() > 0;
    if (sim->parsed()) return cmd_simulate(config_path, seed, out_path);
    if (est->parsed())
      return cmd_estimate(model_path, series1, s, iota, emit_upsilon, emit_h2,
                          threads, out_path);
    if (sel->parsed())
      return cmd_select_s(model_path, series1, series2, tau, threads, out_path);
    if (exp->parsed())
      return cmd_experiment(config_path,
                            seed_given ? std::optional<std::uint64_t>(seed)
                                       : std::nullopt,
                            threads, out_path);
    if (rep->parsed()) return cmd_report(series1, out_path);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
