#include "asdopt/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "asdopt/errors.hpp"
#include "asdopt/reporting.hpp"
#include "json_fields.hpp"

namespace asdopt {

namespace {

using detail::json;

struct Job {
  std::size_t scenario = 0;
  Method method = Method::kBO;
  int replication = 0;
};

struct JobResult {
  std::vector<RunResult> runs;
  std::string error;
};

bool wants(const ScenarioConfig& c, Method m) {
  return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end();
}

std::vector<Method> active_methods(const ScenarioConfig& c, bool grid_only) {
  std::vector<Method> out;
  for (Method m : {Method::kBO, Method::kBOGrid, Method::kGrid, Method::kGridSmall}) {
    if (!wants(c, m)) continue;
    if (grid_only && m != Method::kGrid && m != Method::kGridSmall) continue;
    out.push_back(m);
  }
  return out;
}

JobResult execute(const ScenarioConfig& config, const Scenario& scenario,
                  const Job& job, const std::vector<Method>& methods) {
  JobResult out;
  const std::uint64_t seed =
      run_seed(config.master_seed, job.scenario, job.method, job.replication);
  try {
    if (job.method == Method::kBO) {
      RunResult bo = run_bo(scenario, bo_options(config), seed);
      const bool want_bo =
          std::find(methods.begin(), methods.end(), Method::kBO) != methods.end();
      const bool want_snap =
          std::find(methods.begin(), methods.end(), Method::kBOGrid) != methods.end();
      if (want_snap) {
        out.runs.push_back(
            snap_run(bo, scenario, config.grid_l, config.validation_reps, seed));
      }
      if (want_bo) out.runs.insert(out.runs.begin(), std::move(bo));
    } else {
      const int l = job.method == Method::kGrid ? config.grid_l : config.grid_small_l;
      out.runs.push_back(run_grid(scenario, l, config.grid_reps, seed, job.method));
    }
  } catch (const std::exception& err) {
    out.error = std::string(to_string(job.method)) + " replication " +
                std::to_string(job.replication) + ": " + err.what();
  }
  return out;
}

json surrogate_json(const GpModel& model) {
  const auto& h = model.hyperparameters();
  return json{{"length_scales", h.length_scales},
              {"signal_variance", h.signal_variance},
              {"nugget", h.nugget},
              {"mean_constant", model.mean_constant()},
              {"log_likelihood", model.log_likelihood()},
              {"jitter", model.jitter()},
              {"degenerate", model.degenerate()},
              {"mean_model", "constant, profiled by generalized least squares"}};
}

json quartiles_json(const Quartiles& q) {
  return json{{"n", q.n},       {"min", q.min}, {"q1", q.q1},     {"median", q.median},
              {"q3", q.q3},     {"max", q.max}, {"mean", q.mean}, {"iqr", q.iqr()}};
}

}  // namespace

int default_workers() {
  if (const char* env = std::getenv("ASDOPT_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

ScenarioConfig apply_overrides(ScenarioConfig config, const RunOptions& options) {
  if (options.seed) config.master_seed = *options.seed;
  if (options.output_dir) config.output_dir = *options.output_dir;
  if (options.nsim_override) {
    if (*options.nsim_override < 1) throw ConfigError("--nsim-override must be positive");
    config.sim.nsim = *options.nsim_override;
  }
  return config;
}

std::uint64_t run_seed(std::uint64_t master, std::size_t scenario_index,
                       Method method, int replication) {
  // BO and BOGrid share a run.
  const Method base = method == Method::kBOGrid ? Method::kBO : method;
  return derive_seed(master, Stream::kScenario, scenario_index,
                     (static_cast<std::uint64_t>(base) << 32) |
                         static_cast<std::uint32_t>(replication));
}

std::vector<ScenarioOutcome> run_scenarios(const ScenarioConfig& config,
                                           const RunOptions& options) {
  const std::vector<Scenario> scenarios = resolve_scenarios(config);
  const std::vector<Method> methods = active_methods(config, options.grid_only);

  std::vector<Job> jobs;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const bool bo = std::find(methods.begin(), methods.end(), Method::kBO) != methods.end() ||
                    std::find(methods.begin(), methods.end(), Method::kBOGrid) != methods.end();
    if (bo) {
      for (int r = 0; r < config.replications; ++r) jobs.push_back({s, Method::kBO, r});
    }
    for (Method m : {Method::kGrid, Method::kGridSmall}) {
      if (std::find(methods.begin(), methods.end(), m) != methods.end()) {
        jobs.push_back({s, m, 0});
      }
    }
  }

  std::vector<JobResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      results[i] = execute(config, scenarios[jobs[i].scenario], jobs[i], methods);
      if (options.log != nullptr) {
        std::lock_guard lock(log_mutex);
        *options.log << "[" << (i + 1) << "/" << jobs.size() << "] "
                     << scenarios[jobs[i].scenario].name << " "
                     << to_string(jobs[i].method) << " #" << jobs[i].replication
                     << (results[i].error.empty() ? " done" : " FAILED: " + results[i].error)
                     << '\n';
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<ScenarioOutcome> outcomes;
  for (const auto& s : scenarios) outcomes.push_back(ScenarioOutcome{s, {}, {}});
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    ScenarioOutcome& target = outcomes[jobs[i].scenario];
    if (!results[i].error.empty()) target.errors.push_back(results[i].error);
    for (auto& run : results[i].runs) target.runs[run.method].push_back(std::move(run));
  }
  return outcomes;
}

std::string design_id(const std::string& scenario, Method method, int replication) {
  return scenario + "/" + std::string(to_string(method)) + "/" + std::to_string(replication);
}

std::string render_history(const std::vector<ScenarioOutcome>& outcomes) {
  std::vector<HistoryRow> rows;
  for (const auto& outcome : outcomes) {
    for (const auto& [method, runs] : outcome.runs) {
      for (std::size_t r = 0; r < runs.size(); ++r) {
        auto part = history_rows(outcome.scenario.name, runs[r], static_cast<int>(r));
        rows.insert(rows.end(), part.begin(), part.end());
      }
    }
  }
  std::ostringstream out;
  write_history(out, rows);
  return out.str();
}

std::string render_summary(const ScenarioConfig& config,
                           const std::vector<ScenarioOutcome>& outcomes) {
  json scenarios = json::array();
  for (const auto& outcome : outcomes) {
    json methods = json::array();
    for (const auto& [method, runs] : outcome.runs) {
      if (runs.empty()) continue;
      json run_list = json::array();
      double wall = 0.0;
      for (std::size_t r = 0; r < runs.size(); ++r) {
        const RunResult& run = runs[r];
        wall += run.wall_seconds;
        json y_valid = json::array();
        for (const auto& y : run.y_valid) y_valid.push_back(detail::to_json(y));
        json entry{{"id", design_id(outcome.scenario.name, method, static_cast<int>(r))},
                   {"replication", r},
                   {"master_seed", run.master_seed},
                   {"chosen", detail::to_json(run.chosen)},
                   {"allocation", detail::to_json(run.allocation)},
                   {"y_valid", y_valid},
                   {"y_valid_mean", run.validated_mean()},
                   {"search_evaluations", run.search_evaluations},
                   {"wall_seconds", run.wall_seconds}};
        if (run.final_model) entry["surrogate"] = surrogate_json(*run.final_model);
        if (method == Method::kBO) entry["fallback_proposals"] = run.fallback_proposals;
        if (!run.replicate_choices.empty()) {
          json choices = json::array();
          for (const auto& c : run.replicate_choices) {
            choices.push_back({{"design", detail::to_json(c.point)},
                               {"naive", c.naive},
                               {"held_out", c.held_out.value}});
          }
          entry["replicate_choices"] = choices;
        }
        run_list.push_back(std::move(entry));
      }
      methods.push_back({{"method", std::string(to_string(method))},
                         {"evaluations_per_run", runs.front().search_evaluations},
                         {"validated", quartiles_json(summarize(validated_samples(runs)))},
                         {"wall_seconds_total", wall},
                         {"runs", run_list}});
    }
    scenarios.push_back({{"name", outcome.scenario.name},
                         {"effect_set", outcome.scenario.effects.name},
                         {"n_total", outcome.scenario.n_total},
                         {"methods", methods},
                         {"errors", outcome.errors}});
  }
  const json doc{
      {"config", json::parse(serialize_config(config))},
      {"seed_derivation",
       "run seed = splitmix64 chain over (master_seed, stream 'scenario', scenario index, "
       "method << 32 | replication); evaluation seeds = chain over (run seed, stream, "
       "counter[, replicate]) with disjoint stream labels for search, validation, "
       "calibration, initial design, acquisition and surrogate fit"},
      {"scenarios", scenarios}};
  return doc.dump(2) + "\n";
}

int run_and_write(const ScenarioConfig& config, const RunOptions& options) {
  if (config.scenarios.empty()) return 0;
  const auto outcomes = run_scenarios(config, options);
  const std::filesystem::path dir = config.output_dir;

  write_file_atomic(dir / "history.csv", render_history(outcomes));
  write_file_atomic(dir / "summary.json", render_summary(config, outcomes));

  std::vector<HistoryRow> grid_rows;
  for (const auto& outcome : outcomes) {
    for (Method m : {Method::kGrid, Method::kGridSmall}) {
      const auto it = outcome.runs.find(m);
      if (it == outcome.runs.end()) continue;
      for (const auto& run : it->second) {
        auto rows = history_rows(outcome.scenario.name, run, 0);
        grid_rows.insert(grid_rows.end(), rows.begin(), rows.end());
      }
    }
  }
  if (!grid_rows.empty()) {
    std::ostringstream curves;
    write_curves(curves, power_curves(grid_rows));
    write_file_atomic(dir / "curves.csv", curves.str());
  }

  for (const auto& outcome : outcomes) {
    if (!outcome.errors.empty()) return 2;
  }
  return 0;
}

std::string validate_from_summary(const std::string& summary_text,
                                  const std::string& id, int reps,
                                  std::optional<std::uint64_t> seed,
                                  std::optional<int> nsim_override) {
  json summary;
  try {
    summary = json::parse(summary_text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("summary: ") + err.what());
  }
  if (!summary.contains("config") || !summary.contains("scenarios")) {
    throw ConfigError("summary: missing config or scenarios");
  }
  ScenarioConfig config = parse_config(summary.at("config").dump());
  if (nsim_override) config.sim.nsim = *nsim_override;

  for (const auto& sc : summary.at("scenarios")) {
    for (const auto& method : sc.at("methods")) {
      for (const auto& run : method.at("runs")) {
        if (run.at("id").get<std::string>() != id) continue;
        const DesignPoint chosen = detail::design_from_json(run.at("chosen"));
        const std::string name = sc.at("name").get<std::string>();
        Scenario scenario;
        bool found = false;
        for (auto& s : resolve_scenarios(config)) {
          if (s.name == name) {
            scenario = std::move(s);
            found = true;
          }
        }
        if (!found) throw ConfigError("summary: scenario '" + name + "' not in config");
        // Fresh seeds unless the caller pins one.
        const std::uint64_t master =
            seed ? *seed : mix64(run.at("master_seed").get<std::uint64_t>() ^ 0x76616c6964617465ULL);
        const auto values = validate(chosen, scenario, reps, master);
        json y = json::array();
        std::vector<double> raw;
        for (const auto& v : values) {
          y.push_back(detail::to_json(v));
          raw.push_back(v.value);
        }
        const json report{{"id", id},
                          {"design", detail::to_json(chosen)},
                          {"nsim", config.sim.nsim},
                          {"master_seed", master},
                          {"y_valid", y},
                          {"summary", quartiles_json(summarize(raw))}};
        return report.dump(2) + "\n";
      }
    }
  }
  throw ConfigError("summary: no run with id '" + id + "'");
}

}  // namespace asdopt
