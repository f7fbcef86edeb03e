#include "rhoest/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "rhoest/metrics.hpp"

namespace rhoest {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ConfigError(where + ": unknown field '" + it.key() + "'");
  }
}

const json& require(const json& j, const std::string& where,
                    const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(where + ": missing field '" + key + "'");
  return *it;
}

EmissionSpec emission_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"family", "params", "atoms"});
  EmissionSpec spec;
  spec.family = require(j, where, "family").get<std::string>();
  spec.params = require(j, where, "params").get<std::vector<double>>();
  if (j.contains("atoms")) spec.atoms = j["atoms"].get<std::vector<double>>();
  return spec;
}

json emission_to_json(const EmissionSpec& spec) {
  json j{{"family", spec.family}, {"params", spec.params}};
  if (!spec.atoms.empty()) j["atoms"] = spec.atoms;
  return j;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---- config --------------------------------------------------------------

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "config",
             {"version", "scenario", "seed", "replicates", "n_list", "n2",
              "s_policy", "truth", "model", "contamination", "threads"});
  ExperimentConfig cfg;
  cfg.version = require(j, "config", "version").get<int>();
  if (cfg.version != 1) throw ConfigError("config: unsupported version");
  cfg.scenario = require(j, "config", "scenario").get<std::string>();
  static const std::vector<std::string> kScenarios = {
      "iid_recovery", "hmm_rate", "contamination", "spacing_selection",
      "langevin_invariant"};
  if (std::find(kScenarios.begin(), kScenarios.end(), cfg.scenario) ==
      kScenarios.end())
    throw ConfigError("config: unknown scenario '" + cfg.scenario + "'");
  cfg.seed = require(j, "config", "seed").get<std::uint64_t>();
  cfg.replicates = require(j, "config", "replicates").get<int>();
  if (cfg.replicates < 1) throw ConfigError("config: replicates >= 1");
  cfg.n_list = require(j, "config", "n_list").get<std::vector<std::size_t>>();
  if (cfg.n_list.empty()) throw ConfigError("config: n_list empty");
  if (j.contains("n2")) cfg.n2 = j["n2"].get<std::size_t>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();

  const json& sp = require(j, "config", "s_policy");
  check_keys(sp, "s_policy", {"fixed", "grid", "oracle_scan"});
  if (sp.size() != 1) throw ConfigError("s_policy: exactly one policy");
  if (sp.contains("fixed")) {
    cfg.s_policy.kind = SPolicy::Kind::fixed;
    cfg.s_policy.s = sp["fixed"].get<int>();
    if (cfg.s_policy.s < 0) throw ConfigError("s_policy: fixed s >= 0");
  } else if (sp.contains("grid")) {
    check_keys(sp["grid"], "s_policy.grid", {"tau"});
    cfg.s_policy.kind = SPolicy::Kind::grid;
    cfg.s_policy.tau = require(sp["grid"], "s_policy.grid", "tau").get<double>();
  } else {
    check_keys(sp["oracle_scan"], "s_policy.oracle_scan", {"tau"});
    cfg.s_policy.kind = SPolicy::Kind::oracle_scan;
    cfg.s_policy.tau =
        require(sp["oracle_scan"], "s_policy.oracle_scan", "tau").get<double>();
  }

  cfg.truth = require(j, "config", "truth");
  cfg.model = require(j, "config", "model");

  if (j.contains("contamination")) {
    const json& c = j["contamination"];
    check_keys(c, "contamination", {"mode", "epsilon", "indices", "contaminant"});
    ContaminationConfig cc;
    cc.mode = require(c, "contamination", "mode").get<std::string>();
    if (cc.mode != "huber" && cc.mode != "outlier_set")
      throw ConfigError("contamination: unknown mode '" + cc.mode + "'");
    if (cc.mode == "huber")
      cc.epsilon = require(c, "contamination", "epsilon").get<double>();
    if (cc.mode == "outlier_set")
      cc.indices =
          require(c, "contamination", "indices").get<std::vector<std::size_t>>();
    cc.contaminant = emission_from_json(
        require(c, "contamination", "contaminant"), "contamination.contaminant");
    cfg.contamination = std::move(cc);
  }

  if (cfg.scenario == "spacing_selection") {
    if (cfg.s_policy.kind == SPolicy::Kind::fixed)
      throw ConfigError("spacing_selection: needs a grid or oracle_scan policy");
    if (cfg.s_policy.kind == SPolicy::Kind::grid && cfg.n2 == 0)
      throw ConfigError("spacing_selection: n2 (hold-out size) required");
  }
  return cfg;
}

// ---- model construction --------------------------------------------------

LoadedModel model_from_config(const json& m) {
  const std::string kind =
      require(m, "model", "kind").get<std::string>();
  LoadedModel out;
  if (kind == "hmm") {
    check_keys(m, "model(hmm)",
               {"kind", "K", "L", "delta", "step", "emission_nets", "budget"});
    const int K = require(m, "model", "K").get<int>();
    const int L = require(m, "model", "L").get<int>();
    const double delta = require(m, "model", "delta").get<double>();
    const double step = require(m, "model", "step").get<double>();
    std::vector<std::vector<EmissionSpec>> nets;
    for (const auto& net_json : require(m, "model", "emission_nets")) {
      std::vector<EmissionSpec> net;
      for (const auto& e : net_json)
        net.push_back(emission_from_json(e, "emission_nets"));
      nets.push_back(std::move(net));
    }
    const std::size_t budget =
        m.contains("budget") ? m["budget"].get<std::size_t>() : 100000;
    HmmModel hmm = build_hmm_model(nets, K, L, delta, step, nullptr, budget);
    out.model = hmm.model;
    out.hmm = std::move(hmm);
    return out;
  }
  if (kind == "net1d") {
    check_keys(m, "model(net1d)", {"kind", "families"});
    std::vector<EmissionSpec> specs;
    for (const auto& e : require(m, "model", "families"))
      specs.push_back(emission_from_json(e, "net1d.families"));
    auto space = space_for_emissions(specs);
    std::vector<DensityCandidate> cands;
    for (std::size_t i = 0; i < specs.size(); ++i)
      cands.push_back(
          make_emission_candidate(specs[i], space, std::to_string(i)));
    out.model = std::make_shared<FiniteModel>(space, std::move(cands));
    return out;
  }
  if (kind == "gaussian_grid") {
    check_keys(m, "model(gaussian_grid)",
               {"kind", "z_lo", "z_hi", "z_count", "sigma_min", "sigma_max",
                "sigma_count"});
    const auto net = gaussian_scale_location_net(
        require(m, "model", "z_lo").get<double>(),
        require(m, "model", "z_hi").get<double>(),
        require(m, "model", "z_count").get<std::size_t>(),
        require(m, "model", "sigma_min").get<double>(),
        require(m, "model", "sigma_max").get<double>(),
        require(m, "model", "sigma_count").get<std::size_t>());
    auto space = space_for_emissions(net);
    std::vector<DensityCandidate> cands;
    for (std::size_t i = 0; i < net.size(); ++i)
      cands.push_back(make_emission_candidate(net[i], space, std::to_string(i)));
    out.model = std::make_shared<FiniteModel>(space, std::move(cands));
    return out;
  }
  if (kind == "categorical_random") {
    check_keys(m, "model(categorical_random)",
               {"kind", "atom_count", "count", "min_h", "gen_seed"});
    const std::size_t atom_count =
        require(m, "model", "atom_count").get<std::size_t>();
    const auto probs = separated_categorical_probs(
        atom_count, require(m, "model", "count").get<std::size_t>(),
        require(m, "model", "min_h").get<double>(),
        require(m, "model", "gen_seed").get<std::uint64_t>());
    std::vector<double> atoms(atom_count);
    for (std::size_t i = 0; i < atom_count; ++i) atoms[i] = static_cast<double>(i);
    auto space = SampleSpace::discrete(atoms);
    std::vector<DensityCandidate> cands;
    for (std::size_t i = 0; i < probs.size(); ++i)
      cands.push_back(categorical_candidate(space, probs[i], std::to_string(i)));
    out.model = std::make_shared<FiniteModel>(space, std::move(cands));
    return out;
  }
  throw ConfigError("model: unknown kind '" + kind + "'");
}

json model_to_json(const HmmModel& model) {
  json j;
  j["K"] = model.K;
  j["L"] = model.L;
  j["delta"] = model.delta;
  j["step"] = model.step;
  json w = json::array();
  for (const auto& v : model.w_grid) w.push_back(v.w);
  j["w_grid"] = std::move(w);
  json q = json::array();
  for (const auto& t : model.q_grid) q.push_back(t.rows);
  j["q_grid"] = std::move(q);
  json nets = json::array();
  for (const auto& net : model.emission_nets) {
    json one = json::array();
    for (const auto& spec : net) one.push_back(emission_to_json(spec));
    nets.push_back(std::move(one));
  }
  j["emission_families"] = std::move(nets);
  j["candidate_count"] = model.model->size();
  return j;
}

json net1d_to_json(const std::vector<EmissionSpec>& families) {
  json fams = json::array();
  for (const auto& spec : families) fams.push_back(emission_to_json(spec));
  return json{{"net1d", {{"families", std::move(fams)}}}};
}

LoadedModel model_from_json(const json& j) {
  if (j.contains("net1d")) {
    check_keys(j, "model json", {"net1d"});
    check_keys(j["net1d"], "net1d", {"families"});
    json cfg{{"kind", "net1d"}, {"families", j["net1d"]["families"]}};
    return model_from_config(cfg);
  }
  check_keys(j, "model json",
             {"K", "L", "delta", "step", "w_grid", "q_grid",
              "emission_families", "candidate_count"});
  json cfg{{"kind", "hmm"},
           {"K", require(j, "model json", "K")},
           {"L", require(j, "model json", "L")},
           {"delta", require(j, "model json", "delta")},
           {"step", require(j, "model json", "step")},
           {"emission_nets", require(j, "model json", "emission_families")}};
  LoadedModel out = model_from_config(cfg);
  const auto count = require(j, "model json", "candidate_count").get<std::size_t>();
  if (count != out.model->size())
    throw ConfigError("model json: candidate_count does not match the grids");
  if (j["w_grid"].size() != out.hmm->w_grid.size() ||
      j["q_grid"].size() != out.hmm->q_grid.size())
    throw ConfigError("model json: grid sizes do not match delta/step");
  return out;
}

// ---- slope fit -------------------------------------------------------------

SlopeFit fit_rate_slope(const std::vector<RiskRow>& rows) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& r : rows)
    if (r.error.empty() && !std::isnan(r.h2)) by_n[r.n].push_back(r.h2);
  if (by_n.size() < 3)
    throw std::invalid_argument("fit_rate_slope: need >= 3 distinct n");
  std::vector<double> xs, ys;
  for (auto& [n, v] : by_n) {
    const double med = median_of(std::move(v));
    if (!(med > 0.0))
      throw std::invalid_argument(
          "fit_rate_slope: nonpositive median h2 at n=" + std::to_string(n));
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(med));
  }
  const std::size_t m = xs.size();
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= static_cast<double>(m);
  ybar /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double pred = fit.intercept + fit.slope * xs[i];
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
  }
  fit.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

// ---- scenario machinery ----------------------------------------------------

namespace {

struct ScenarioContext {
  const ExperimentConfig* cfg = nullptr;
  LoadedModel loaded;
  DensityCandidate truth_density;
  std::optional<HmmParams> truth_hmm;
  std::vector<double> truth_probs;  // iid categorical
  double potential_a = 1.0;
  std::string potential_kind;
  double dt = 0.01;
  std::size_t burn_in = 0;
  int thin = 1;
  double x0 = 0.0;
  std::shared_ptr<HellingerCache> cache;
  int truth_row = -1;
};

HmmParams truth_hmm_from_json(const json& t) {
  check_keys(t, "truth(hmm)", {"w", "Q", "emissions"});
  SimplexWeights w(require(t, "truth", "w").get<std::vector<double>>());
  TransitionMatrix q(
      require(t, "truth", "Q").get<std::vector<std::vector<double>>>());
  std::vector<EmissionSpec> em;
  for (const auto& e : require(t, "truth", "emissions"))
    em.push_back(emission_from_json(e, "truth.emissions"));
  return HmmParams(std::move(w), std::move(q), std::move(em));
}

ScenarioContext make_context(const ExperimentConfig& cfg) {
  ScenarioContext ctx;
  ctx.cfg = &cfg;
  ctx.loaded = model_from_config(cfg.model);
  const auto& scenario = cfg.scenario;
  if (scenario == "iid_recovery") {
    const json& t = cfg.truth;
    check_keys(t, "truth(iid)", {"kind", "probs", "index"});
    const std::string kind = require(t, "truth", "kind").get<std::string>();
    const auto space = ctx.loaded.model->space();
    if (kind == "model_index") {
      const int idx = require(t, "truth", "index").get<int>();
      if (idx < 0 || idx >= static_cast<int>(ctx.loaded.model->size()))
        throw ConfigError("truth: model index out of range");
      ctx.truth_density = ctx.loaded.model->at(idx);
      // Recover the sampling weights from the candidate itself.
      for (double atom : space->atoms())
        ctx.truth_probs.push_back(
            std::exp(ctx.truth_density.log_density({&atom, 1})));
    } else if (kind == "categorical") {
      ctx.truth_probs = require(t, "truth", "probs").get<std::vector<double>>();
      ctx.truth_density =
          categorical_candidate(space, ctx.truth_probs, "__truth__");
    } else {
      throw ConfigError("truth: unknown kind '" + kind + "'");
    }
  } else if (scenario == "hmm_rate" || scenario == "contamination" ||
             scenario == "spacing_selection") {
    if (!ctx.loaded.hmm) throw ConfigError(scenario + ": needs an hmm model");
    ctx.truth_hmm = truth_hmm_from_json(cfg.truth);
    ctx.truth_density =
        product_chain_density(*ctx.truth_hmm, ctx.loaded.hmm->L,
                              ctx.loaded.hmm->base, "__truth__");
  } else if (scenario == "langevin_invariant") {
    const json& t = cfg.truth;
    check_keys(t, "truth(langevin)",
               {"potential", "a", "dt", "burn_in", "thin", "x0"});
    ctx.potential_kind = require(t, "truth", "potential").get<std::string>();
    ctx.potential_a = require(t, "truth", "a").get<double>();
    if (ctx.potential_kind != "quadratic" && ctx.potential_kind != "quartic")
      throw ConfigError("truth: unknown potential '" + ctx.potential_kind + "'");
    ctx.dt = require(t, "truth", "dt").get<double>();
    ctx.burn_in = require(t, "truth", "burn_in").get<std::size_t>();
    ctx.thin = require(t, "truth", "thin").get<int>();
    if (t.contains("x0")) ctx.x0 = t["x0"].get<double>();
    // Invariant density ∝ exp(−2U), normalized on the model window.
    const double a = ctx.potential_a;
    const bool quartic = ctx.potential_kind == "quartic";
    auto log_unnorm = [a, quartic](double x) {
      const double u = quartic ? a * x * x * x * x / 4.0 : 0.5 * a * x * x;
      return -2.0 * u;
    };
    const auto space = ctx.loaded.model->space();
    const auto edges = build_edges(space->quad(), {}, {});
    const double z = integrate_panels(
        [&](double x, double) { return std::exp(log_unnorm(x)); }, edges, {},
        space->quad().nodes_per_panel);
    const double log_z = std::log(z);
    DensityCandidate truth;
    truth.id = "__truth__";
    truth.space = space;
    truth.log_density = [log_unnorm, log_z](std::span<const double> x) {
      return log_unnorm(x[0]) - log_z;
    };
    ctx.truth_density = std::move(truth);
  }
  ctx.cache = std::make_shared<HellingerCache>(ctx.loaded.model->candidates());
  ctx.truth_row = ctx.cache->add(ctx.truth_density);
  return ctx;
}

std::vector<double> apply_contamination(const ExperimentConfig& cfg,
                                        std::vector<double> series,
                                        int replicate, std::size_t n_index,
                                        bool holdout = false) {
  if (!cfg.contamination) return series;
  const std::size_t slot = n_index + (holdout ? 512 : 0);
  ContaminationSpec spec;
  spec.mode = cfg.contamination->mode == "huber"
                  ? ContaminationSpec::Mode::huber
                  : ContaminationSpec::Mode::outlier_set;
  spec.epsilon = cfg.contamination->epsilon;
  spec.outlier_indices = cfg.contamination->indices;
  spec.contaminant = cfg.contamination->contaminant;
  spec.seed = cfg.seed;
  spec.mask_stream = stream_id(StreamRole::contamination_mask,
                               static_cast<std::uint64_t>(replicate), slot);
  spec.draw_stream = stream_id(StreamRole::contamination_draw,
                               static_cast<std::uint64_t>(replicate), slot);
  return contaminate(series, spec);
}

double truth_h2(ScenarioContext& ctx, const DensityCandidate& chosen) {
  const int row = ctx.cache->add(chosen);
  ctx.cache->ensure_rows({ctx.truth_row});
  return ctx.cache->h2(ctx.truth_row, row);
}

// One (n_index, replicate) cell for the single-estimate scenarios.
void run_cell(ScenarioContext& ctx, std::size_t n_index, int replicate,
              int threads, std::vector<RiskRow>& rows_out,
              std::vector<json>& spacing_out) {
  const ExperimentConfig& cfg = *ctx.cfg;
  const std::size_t n = cfg.n_list[n_index];
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&t0]() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  };
  auto base_row = [&](int s_used) {
    RiskRow row;
    row.scenario = cfg.scenario;
    row.replicate = replicate;
    row.n = n;
    row.s_used = s_used;
    row.seed = cfg.seed;
    return row;
  };

  try {
    const std::uint64_t data_stream = stream_id(
        StreamRole::data, static_cast<std::uint64_t>(replicate), n_index);
    if (cfg.scenario == "iid_recovery" || cfg.scenario == "hmm_rate" ||
        cfg.scenario == "contamination" ||
        cfg.scenario == "langevin_invariant") {
      // Build the sample for this cell.
      Sample sample;
      if (cfg.scenario == "iid_recovery") {
        Rng rng(cfg.seed, data_stream);
        const auto& atoms = ctx.loaded.model->space()->atoms();
        std::vector<double> series(n);
        for (auto& y : series) y = atoms[rng.discrete(ctx.truth_probs)];
        series = apply_contamination(cfg, std::move(series), replicate, n_index);
        sample = Sample(ctx.loaded.model->space(), std::move(series));
      } else if (cfg.scenario == "langevin_invariant") {
        DiffusionSpec spec;
        const double a = ctx.potential_a;
        if (ctx.potential_kind == "quadratic")
          spec.drift = [a](double x) { return -a * x; };
        else
          spec.drift = [a](double x) { return -a * x * x * x; };
        spec.dt = ctx.dt;
        spec.burn_in = ctx.burn_in;
        spec.thin = ctx.thin;
        spec.x0 = ctx.x0;
        std::vector<double> y = simulate_langevin(spec, n, cfg.seed, data_stream);
        y = apply_contamination(cfg, std::move(y), replicate, n_index);
        sample = Sample(ctx.loaded.model->space(), std::move(y));
      } else {
        const HmmSimulation sim =
            simulate_hmm(*ctx.truth_hmm, n, cfg.seed, data_stream);
        std::vector<double> y =
            apply_contamination(cfg, sim.y, replicate, n_index);
        sample =
            window(y, ctx.loaded.hmm->L, ctx.loaded.hmm->base).sample;
      }

      std::vector<int> s_values;
      if (cfg.s_policy.kind == SPolicy::Kind::fixed) {
        s_values.push_back(cfg.s_policy.s);
      } else if (cfg.s_policy.kind == SPolicy::Kind::oracle_scan) {
        s_values = make_s_grid(sample.n, cfg.s_policy.tau).values;
      } else {
        throw ConfigError(cfg.scenario + ": grid policy needs spacing_selection");
      }
      for (int s : s_values) {
        auto [chosen, diag] = estimate_with_spacing(
            sample, *ctx.loaded.model, s, 1.0, threads, ctx.cache.get());
        RiskRow row = base_row(s);
        row.chosen_id = chosen.id;
        row.h2 = truth_h2(ctx, chosen);
        if (ctx.truth_hmm)
          row.param_err = param_error(
              ctx.loaded.hmm->params_by_index[diag.chosen_index], *ctx.truth_hmm);
        row.ms = elapsed_ms();
        rows_out.push_back(std::move(row));
      }
      return;
    }
    if (cfg.scenario == "spacing_selection") {
      const HmmSimulation sim1 =
          simulate_hmm(*ctx.truth_hmm, n, cfg.seed, data_stream);
      std::vector<double> y1 =
          apply_contamination(cfg, sim1.y, replicate, n_index);
      const WindowedSample ws1 =
          window(y1, ctx.loaded.hmm->L, ctx.loaded.hmm->base);
      const SGrid grid = make_s_grid(ws1.sample.n, cfg.s_policy.tau);

      if (cfg.s_policy.kind == SPolicy::Kind::oracle_scan) {
        for (int s : grid.values) {
          auto [cand, diag] = estimate_with_spacing(
              ws1.sample, *ctx.loaded.model, s, 1.0, threads, ctx.cache.get());
          RiskRow row = base_row(s);
          row.chosen_id = cand.id;
          row.h2 = truth_h2(ctx, cand);
          row.ms = elapsed_ms();
          rows_out.push_back(std::move(row));
        }
        return;
      }

      const HmmSimulation sim2 = simulate_hmm(
          *ctx.truth_hmm, cfg.n2, cfg.seed,
          stream_id(StreamRole::data_holdout,
                    static_cast<std::uint64_t>(replicate), n_index));
      std::vector<double> y2 =
          apply_contamination(cfg, sim2.y, replicate, n_index, true);
      const WindowedSample ws2 =
          window(y2, ctx.loaded.hmm->L, ctx.loaded.hmm->base);
      const FiniteModel& model = *ctx.loaded.model;
      SpacingSelection sel = select_s(
          ws1.sample, ws2.sample, grid,
          [&model](int) -> const FiniteModel& { return model; }, 1.0, threads,
          ctx.cache.get());

      double best_fixed = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < grid.values.size(); ++k) {
        RiskRow row = base_row(grid.values[k]);
        row.chosen_id = sel.stage1[k].id;
        row.h2 = truth_h2(ctx, sel.stage1[k]);
        row.ms = elapsed_ms();
        best_fixed = std::min(best_fixed, row.h2);
        rows_out.push_back(std::move(row));
      }
      const double h2_hat = truth_h2(ctx, sel.chosen);
      spacing_out.push_back(json{{"replicate", replicate},
                                 {"n", n},
                                 {"s_hat", sel.s_hat},
                                 {"h2_hat", h2_hat},
                                 {"best_fixed_h2", best_fixed},
                                 {"within_3x", h2_hat <= 3.0 * best_fixed}});
      return;
    }
    throw ConfigError("run_experiment: unhandled scenario");
  } catch (const std::exception& e) {
    RiskRow row = base_row(cfg.s_policy.kind == SPolicy::Kind::fixed
                               ? cfg.s_policy.s
                               : -1);
    row.h2 = kNaN;
    row.ms = kNaN;
    row.error = e.what();
    rows_out.push_back(std::move(row));
  }
}

}  // namespace

RiskReport run_experiment(const ExperimentConfig& cfg) {
  ScenarioContext ctx = make_context(cfg);

  const std::size_t cells = cfg.n_list.size() * static_cast<std::size_t>(cfg.replicates);
  std::vector<std::vector<RiskRow>> cell_rows(cells);
  std::vector<std::vector<json>> cell_spacing(cells);

  const int outer =
      static_cast<int>(std::min<std::size_t>(std::max(1, cfg.threads), cells));
  const int inner = outer > 1 ? 1 : std::max(1, cfg.threads);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t cell = next.fetch_add(1);
      if (cell >= cells) return;
      const std::size_t n_index = cell / static_cast<std::size_t>(cfg.replicates);
      const int replicate =
          static_cast<int>(cell % static_cast<std::size_t>(cfg.replicates));
      run_cell(ctx, n_index, replicate, inner, cell_rows[cell],
               cell_spacing[cell]);
    }
  };
  if (outer == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < outer; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  RiskReport report;
  json spacing = json::array();
  json errors = json::array();
  for (std::size_t cell = 0; cell < cells; ++cell) {
    for (auto& row : cell_rows[cell]) {
      if (!row.error.empty())
        errors.push_back(json{{"replicate", row.replicate},
                              {"n", row.n},
                              {"message", row.error}});
      report.rows.push_back(std::move(row));
    }
    for (auto& s : cell_spacing[cell]) spacing.push_back(std::move(s));
  }

  // Summary: per-n medians, slope fit when meaningful.
  json medians = json::array();
  std::map<std::size_t, std::vector<double>> h2_by_n;
  std::map<std::size_t, std::vector<double>> pe_by_n;
  for (const auto& r : report.rows) {
    if (!r.error.empty()) continue;
    h2_by_n[r.n].push_back(r.h2);
    if (!std::isnan(r.param_err)) pe_by_n[r.n].push_back(r.param_err);
  }
  for (const auto& [n, v] : h2_by_n) {
    json m{{"n", n}, {"median_h2", median_of(v)}, {"rows", v.size()}};
    if (pe_by_n.count(n)) m["median_param_err"] = median_of(pe_by_n[n]);
    medians.push_back(std::move(m));
  }
  json choices = json::array();
  for (const auto& r : report.rows) {
    if (r.error.empty())
      choices.push_back(json{{"replicate", r.replicate},
                             {"n", r.n},
                             {"s_used", r.s_used},
                             {"chosen_id", r.chosen_id}});
  }
  report.summary["scenario"] = cfg.scenario;
  report.summary["seed"] = cfg.seed;
  report.summary["choices"] = std::move(choices);
  report.summary["medians"] = std::move(medians);
  if (h2_by_n.size() >= 3) {
    try {
      const SlopeFit fit = fit_rate_slope(report.rows);
      report.summary["slope_fit"] = json{
          {"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
    } catch (const std::exception&) {
      // zero medians or similar; slope omitted
    }
  }
  if (!spacing.empty()) report.summary["spacing"] = std::move(spacing);
  if (!errors.empty()) report.summary["errors"] = std::move(errors);
  return report;
}

// ---- persistence -----------------------------------------------------------

void write_series_csv(const std::string& path, std::span<const double> y,
                      const std::vector<int>* hidden,
                      const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "# provenance: " << provenance << "\n";
  out << (hidden ? "y,h\n" : "y\n");
  for (std::size_t i = 0; i < y.size(); ++i) {
    out << format_double(y[i]);
    if (hidden) out << "," << (*hidden)[i];
    out << "\n";
  }
}

SeriesFile read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open series file '" + path + "'");
  SeriesFile out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  bool has_hidden = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# provenance:";
      if (line.rfind(tag, 0) == 0) {
        std::string v = line.substr(tag.size());
        while (!v.empty() && v.front() == ' ') v.erase(v.begin());
        out.provenance = v;
      }
      continue;
    }
    if (!header_seen) {
      if (line != "y" && line != "y,h")
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": expected header 'y' or 'y,h'");
      has_hidden = line == "y,h";
      header_seen = true;
      continue;
    }
    const std::size_t comma = line.find(',');
    const std::string y_text = comma == std::string::npos ? line : line.substr(0, comma);
    double v;
    const auto res = std::from_chars(y_text.data(), y_text.data() + y_text.size(), v);
    if (res.ec != std::errc() || res.ptr != y_text.data() + y_text.size())
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": malformed y value '" + y_text + "'");
    out.y.push_back(v);
    if (has_hidden) {
      if (comma == std::string::npos)
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": missing h column");
      out.hidden.push_back(std::stoi(line.substr(comma + 1)));
    }
  }
  if (!header_seen) throw ConfigError(path + ": empty series file");
  return out;
}

void write_report_csv(const std::string& path, const RiskReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "scenario,replicate,n,s_used,h2,param_err,ms,seed\n";
  for (const auto& r : report.rows) {
    out << r.scenario << "," << r.replicate << "," << r.n << "," << r.s_used
        << "," << format_double(r.h2) << "," << format_double(r.param_err)
        << "," << format_double(r.ms) << "," << r.seed << "\n";
  }
}

std::vector<RiskRow> read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<RiskRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "scenario,replicate,n,s_used,h2,param_err,ms,seed")
        throw ConfigError(path + ":1: unexpected report header");
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    while (fields.size() < 8) fields.push_back("");
    if (fields.size() != 8)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 8 fields");
    RiskRow r;
    r.scenario = fields[0];
    r.replicate = std::stoi(fields[1]);
    r.n = static_cast<std::size_t>(std::stoull(fields[2]));
    r.s_used = std::stoi(fields[3]);
    r.h2 = fields[4].empty() ? kNaN : std::stod(fields[4]);
    r.param_err = fields[5].empty() ? kNaN : std::stod(fields[5]);
    r.ms = fields[6].empty() ? kNaN : std::stod(fields[6]);
    r.seed = std::stoull(fields[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace rhoest
