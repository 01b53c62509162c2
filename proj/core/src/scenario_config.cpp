#include "asdopt/scenario_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "asdopt/errors.hpp"
#include "json_fields.hpp"

namespace asdopt {

namespace detail {

json to_json(const EffectSet& e) {
  return json{{"name", e.name}, {"early", e.early}, {"final", e.final}};
}

json to_json(const DesignPoint& p) {
  json j{{"strategy", std::string(to_string(p.strategy))}, {"r", p.r}};
  if (p.eps) j["eps"] = *p.eps;
  if (p.tau) j["tau"] = *p.tau;
  return j;
}

json to_json(const AllocationResult& a) {
  return json{{"n_stage1", a.n_stage1},
              {"n_stage2", a.n_stage2},
              {"k2_hat", a.k2_hat},
              {"achieved_total", a.achieved_total},
              {"degenerate", a.degenerate}};
}

json to_json(const PowerEstimate& p) {
  return json{{"value", p.value}, {"nsim", p.nsim}, {"mc_se", p.mc_se}};
}

DesignPoint design_from_json(const json& j) {
  const auto strategy = parse_strategy(j.at("strategy").get<std::string>());
  if (!strategy) throw ConfigError("unknown strategy " + j.at("strategy").dump());
  DesignPoint p;
  p.strategy = *strategy;
  p.r = j.at("r").get<double>();
  if (j.contains("eps")) p.eps = j.at("eps").get<double>();
  if (j.contains("tau")) p.tau = j.at("tau").get<double>();
  p.validate();
  return p;
}

}  // namespace detail

namespace {

using detail::json;

// Walks a JSON object, rejecting unknown keys and reporting errors with
// their JSON path.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError((path_.empty() ? std::string("/") : path_) + ": " + what);
  }

  bool has(const char* key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  const json& at(const char* key) { return node_.at(key); }
  std::string child(const char* key) const { return path_ + "/" + key; }

  template <class T>
  void read(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(child(key) + ": wrong type " + node_.at(key).dump());
    }
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) fail("unknown key '" + key + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path + ": " + what);
}

IntersectionTest parse_test(const std::string& name, const std::string& path) {
  if (name == "simes") return IntersectionTest::kSimes;
  if (name == "dunnett") return IntersectionTest::kDunnett;
  throw ConfigError(path + ": intersection_test must be \"simes\" or \"dunnett\"");
}

void read_sim(Reader in, SimConstants& sim) {
  in.read("corr", sim.corr);
  in.read("level", sim.level);
  in.read("ptest", sim.ptest);
  in.read("nsim", sim.nsim);
  if (in.has("intersection_test")) {
    std::string name;
    in.read("intersection_test", name);
    sim.test = parse_test(name, in.child("intersection_test"));
  }
  in.finish();
  require(std::abs(sim.corr) <= 1.0, in.child("corr"), "must lie in [-1, 1]");
  require(sim.level > 0.0 && sim.level < 1.0, in.child("level"), "must lie in (0, 1)");
  require(sim.nsim >= 1, in.child("nsim"), "must be positive");
  require(!sim.ptest.empty(), in.child("ptest"), "must not be empty");
}

ScenarioConfig parse_document(const json& doc) {
  ScenarioConfig cfg;
  Reader in(doc, "");
  in.read("master_seed", cfg.master_seed);
  in.read("output_dir", cfg.output_dir);
  if (in.has("methods")) {
    cfg.methods.clear();
    const json& list = in.at("methods");
    require(list.is_array(), "/methods", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "/methods/" + std::to_string(i);
      require(list[i].is_string(), path, "expected a method name");
      const auto m = parse_method(list[i].get<std::string>());
      require(m.has_value(), path,
              "unknown method " + list[i].dump() + " (BO, BOGrid, Grid, GridSmall)");
      cfg.methods.push_back(*m);
    }
  }
  in.read("replications", cfg.replications);
  in.read("validation_reps", cfg.validation_reps);
  if (in.has("sim")) read_sim(Reader(in.at("sim"), "/sim"), cfg.sim);
  if (in.has("bo")) {
    Reader bo(in.at("bo"), "/bo");
    bo.read("n_init", cfg.bo_n_init);
    bo.read("n_iter", cfg.bo_n_iter);
    bo.read("pessimism", cfg.pessimism);
    bo.finish();
    require(cfg.bo_n_init >= 2, "/bo/n_init", "must be at least 2");
    require(cfg.bo_n_iter >= 0, "/bo/n_iter", "must be non-negative");
    require(cfg.pessimism >= 0.0, "/bo/pessimism", "must be non-negative");
  }
  if (in.has("grid")) {
    Reader grid(in.at("grid"), "/grid");
    grid.read("l", cfg.grid_l);
    grid.read("small_l", cfg.grid_small_l);
    grid.read("reps", cfg.grid_reps);
    grid.finish();
    require(cfg.grid_l >= 2, "/grid/l", "must be at least 2");
    require(cfg.grid_small_l >= 2, "/grid/small_l", "must be at least 2");
    require(cfg.grid_reps >= 2, "/grid/reps", "must be at least 2");
  }
  if (in.has("calibration")) {
    Reader cal(in.at("calibration"), "/calibration");
    cal.read("candidates", cfg.calibration.candidates);
    cal.read("replications", cfg.calibration.replications);
    cal.read("refine_replications", cfg.calibration.refine_replications);
    cal.read("budget_slack", cfg.calibration.budget_slack);
    cal.finish();
    require(cfg.calibration.candidates >= 2, "/calibration/candidates", "must be at least 2");
    require(cfg.calibration.replications >= 1, "/calibration/replications", "must be positive");
    require(cfg.calibration.refine_replications >= 0,
            "/calibration/refine_replications", "must be non-negative");
    require(cfg.calibration.budget_slack >= 0.0, "/calibration/budget_slack",
            "must be non-negative");
  }
  if (in.has("effect_sets")) {
    const json& list = in.at("effect_sets");
    require(list.is_array(), "/effect_sets", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "/effect_sets/" + std::to_string(i);
      Reader es(list[i], path);
      EffectSet e;
      es.read("name", e.name);
      es.read("early", e.early);
      es.read("final", e.final);
      es.finish();
      require(!e.name.empty(), path + "/name", "required");
      try {
        e.validate();
      } catch (const InputError& err) {
        throw ConfigError(path + ": " + err.what());
      }
      cfg.effect_sets.push_back(std::move(e));
    }
  }
  if (in.has("scenarios")) {
    const json& list = in.at("scenarios");
    require(list.is_array(), "/scenarios", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "/scenarios/" + std::to_string(i);
      Reader sc(list[i], path);
      ScenarioEntry entry;
      sc.read("name", entry.name);
      sc.read("effect_set", entry.effect_set);
      sc.read("n_total", entry.n_total);
      sc.finish();
      require(!entry.effect_set.empty(), path + "/effect_set", "required");
      require(entry.n_total >= 1, path + "/n_total", "must be positive");
      if (entry.name.empty()) {
        entry.name = entry.effect_set + "-" + std::to_string(entry.n_total);
      }
      require(entry.name.find_first_of(",/\n") == std::string::npos, path + "/name",
              "must not contain ',', '/' or newlines");
      cfg.scenarios.push_back(std::move(entry));
    }
  }
  in.finish();

  require(cfg.replications >= 1, "/replications", "must be positive");
  require(cfg.validation_reps >= 1, "/validation_reps", "must be positive");
  std::set<std::string> names;
  for (std::size_t i = 0; i < cfg.scenarios.size(); ++i) {
    const auto& entry = cfg.scenarios[i];
    const std::string path = "/scenarios/" + std::to_string(i);
    require(names.insert(entry.name).second, path + "/name",
            "duplicate scenario name '" + entry.name + "'");
    try {
      const EffectSet& e = find_effect_set(cfg, entry.effect_set);
      cfg.sim.validate(e.treatments());
    } catch (const InputError& err) {
      throw ConfigError(path + ": " + err.what());
    }
  }
  return cfg;
}

}  // namespace

std::string_view to_string(IntersectionTest test) {
  return test == IntersectionTest::kSimes ? "simes" : "dunnett";
}

ScenarioConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& err) {
    // nlohmann reports a byte offset; translate it to line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < err.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + err.what());
  }
  return parse_document(doc);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& err) {
    throw ConfigError(path.string() + ": " + err.what());
  }
}

std::string serialize_config(const ScenarioConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(std::string(to_string(m)));
  json sets = json::array();
  for (const auto& e : c.effect_sets) sets.push_back(detail::to_json(e));
  json scenarios = json::array();
  for (const auto& s : c.scenarios) {
    scenarios.push_back({{"name", s.name}, {"effect_set", s.effect_set}, {"n_total", s.n_total}});
  }
  const json doc{
      {"master_seed", c.master_seed},
      {"output_dir", c.output_dir},
      {"methods", methods},
      {"replications", c.replications},
      {"validation_reps", c.validation_reps},
      {"sim",
       {{"corr", c.sim.corr},
        {"level", c.sim.level},
        {"ptest", c.sim.ptest},
        {"nsim", c.sim.nsim},
        {"intersection_test", std::string(to_string(c.sim.test))}}},
      {"bo", {{"n_init", c.bo_n_init}, {"n_iter", c.bo_n_iter}, {"pessimism", c.pessimism}}},
      {"grid", {{"l", c.grid_l}, {"small_l", c.grid_small_l}, {"reps", c.grid_reps}}},
      {"calibration",
       {{"candidates", c.calibration.candidates},
        {"replications", c.calibration.replications},
        {"refine_replications", c.calibration.refine_replications},
        {"budget_slack", c.calibration.budget_slack}}},
      {"effect_sets", sets},
      {"scenarios", scenarios},
  };
  return doc.dump(2) + "\n";
}

const EffectSet& find_effect_set(const ScenarioConfig& config, std::string_view name) {
  for (const auto& e : config.effect_sets) {
    if (e.name == name) return e;
  }
  if (const EffectSet* builtin = find_builtin_effect_set(name)) return *builtin;
  throw InputError("unknown effect set '" + std::string(name) + "'");
}

std::vector<Scenario> resolve_scenarios(const ScenarioConfig& config) {
  std::vector<Scenario> out;
  for (const auto& entry : config.scenarios) {
    Scenario s;
    s.name = entry.name;
    s.effects = find_effect_set(config, entry.effect_set);
    s.n_total = entry.n_total;
    s.sim = config.sim;
    s.calibration = config.calibration;
    out.push_back(std::move(s));
  }
  return out;
}

BoOptions bo_options(const ScenarioConfig& config) {
  BoOptions o;
  o.n_init = config.bo_n_init;
  o.n_iter = config.bo_n_iter;
  o.pessimism = config.pessimism;
  o.validation_reps = config.validation_reps;
  return o;
}

}  // namespace asdopt
