#include "asdopt/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "asdopt/errors.hpp"

namespace asdopt {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::uint64_t bits_of(double x) { return std::bit_cast<std::uint64_t>(x); }

double rule_param(const DesignPoint& p) {
  if (p.eps) return *p.eps;
  if (p.tau) return *p.tau;
  return 0.0;
}

Eigen::MatrixXd encoded_matrix(const std::vector<EvaluationRecord>& history) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(history.size()),
                    static_cast<Eigen::Index>(kEncodedDim));
  for (std::size_t i = 0; i < history.size(); ++i) {
    const EncodedPoint v = encode(history[i].point);
    for (std::size_t j = 0; j < kEncodedDim; ++j) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
    }
  }
  return X;
}

Eigen::VectorXd outcome_vector(const std::vector<EvaluationRecord>& history) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(history.size()));
  for (std::size_t i = 0; i < history.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = history[i].y.value;
  }
  return y;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kBO: return "BO";
    case Method::kBOGrid: return "BOGrid";
    case Method::kGrid: return "Grid";
    case Method::kGridSmall: return "GridSmall";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::kBO, Method::kBOGrid, Method::kGrid, Method::kGridSmall}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

double RunResult::validated_mean() const {
  if (y_valid.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& y : y_valid) sum += y.value;
  return sum / static_cast<double>(y_valid.size());
}

Objective::Objective(Scenario scenario, std::uint64_t master_seed)
    : scenario_(std::move(scenario)), master_seed_(master_seed) {
  scenario_.effects.validate();
  scenario_.sim.validate(scenario_.effects.treatments());
}

AllocationResult Objective::resolve(const DesignPoint& p) {
  p.validate();
  const int k1 = static_cast<int>(scenario_.effects.early.size());
  const int K = scenario_.effects.treatments();
  const SelectionRule rule = to_rule(p, K);
  if (const auto* fixed = std::get_if<KappaBest>(&rule)) {
    return stage_sizes_fixed(p.r, k1, fixed->kappa + 1, scenario_.n_total);
  }
  const Key key{static_cast<int>(p.strategy), bits_of(p.r), bits_of(rule_param(p))};
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const std::uint64_t seed =
      derive_seed(master_seed_, Stream::kCalibration,
                  std::get<1>(key) ^ (std::uint64_t{static_cast<std::uint64_t>(std::get<0>(key))} << 56),
                  std::get<2>(key));
  const Calibration cal =
      calibrate_variable_rule(rule, scenario_.effects, p.r, scenario_.n_total,
                              scenario_.sim.corr, seed, scenario_.calibration);
  cache_.emplace(key, cal.allocation);
  return cal.allocation;
}

EvaluationRecord Objective::evaluate(const DesignPoint& p, std::uint64_t seed,
                                     Stream stream, int iteration, int replicate) {
  const auto start = Clock::now();
  EvaluationRecord rec;
  rec.point = p;
  rec.seed = seed;
  rec.stream = stream;
  rec.iteration = iteration;
  rec.replicate = replicate;
  try {
    rec.allocation = resolve(p);
    const ResolvedDesign design{rec.allocation.n_stage1, rec.allocation.n_stage2,
                                to_rule(p, scenario_.effects.treatments())};
    Engine rng(seed);
    rec.y = estimate_power(design, scenario_.effects, scenario_.sim, rng);
  } catch (const InfeasibleDesign&) {
    rec.allocation = AllocationResult{};
    rec.y = PowerEstimate::from_count(0, scenario_.sim.nsim);
  }
  ++counts_[stream];
  rec.wall_ms = elapsed_ms(start);
  return rec;
}

std::size_t Objective::evaluations(Stream stream) const {
  const auto it = counts_.find(stream);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<PowerEstimate> validate(const DesignPoint& chosen, Objective& objective,
                                    int reps, std::uint64_t master_seed) {
  if (reps < 1) throw InputError("validation needs at least one replicate");
  std::vector<PowerEstimate> out;
  out.reserve(reps);
  for (int j = 0; j < reps; ++j) {
    const std::uint64_t seed =
        derive_seed(master_seed, Stream::kValidation, static_cast<std::uint64_t>(j));
    out.push_back(objective.evaluate(chosen, seed, Stream::kValidation, j, j).y);
  }
  return out;
}

std::vector<PowerEstimate> validate(const DesignPoint& chosen,
                                    const Scenario& scenario, int reps,
                                    std::uint64_t master_seed) {
  Objective objective(scenario, master_seed);
  return validate(chosen, objective, reps, master_seed);
}

RunResult run_bo(const Scenario& scenario, const BoOptions& options,
                 std::uint64_t master_seed) {
  if (options.n_init < 2 || options.n_iter < 0) {
    throw InputError("BO needs n_init >= 2 and n_iter >= 0");
  }
  const auto start = Clock::now();
  Objective objective(scenario, master_seed);
  RunResult result;
  result.method = Method::kBO;
  result.master_seed = master_seed;

  auto record = [&](EvaluationRecord rec) {
    const double prev = result.best_so_far.empty() ? -1.0 : result.best_so_far.back();
    result.best_so_far.push_back(std::max(prev, rec.y.value));
    result.history.push_back(std::move(rec));
  };

  Engine init_rng(derive_seed(master_seed, Stream::kInitialDesign));
  const std::vector<DesignPoint> initial = sample_uniform(options.n_init, init_rng);
  for (int i = 0; i < options.n_init; ++i) {
    record(objective.evaluate(initial[i],
                              derive_seed(master_seed, Stream::kSearch, i),
                              Stream::kSearch, i));
  }

  GpFitOptions fit_options = options.fit;
  auto fit_history = [&](int index) {
    Engine fit_rng(derive_seed(master_seed, Stream::kSurrogateFit, index));
    GpModel model = GpModel::fit(encoded_matrix(result.history),
                                 outcome_vector(result.history), options.bounds,
                                 fit_rng, fit_options);
    fit_options.warm_start = model.hyperparameters();
    return model;
  };

  for (int it = 0; it < options.n_iter; ++it) {
    const int index = options.n_init + it;
    Engine acq_rng(derive_seed(master_seed, Stream::kAcquisition, it));
    DesignPoint next;
    try {
      const GpModel model = fit_history(it);
      AcquisitionContext ctx{model, {}, options.pessimism,
                             std::sqrt(model.hyperparameters().nugget)};
      ctx.design.reserve(result.history.size());
      for (const auto& rec : result.history) ctx.design.push_back(encode(rec.point));
      next = propose_next(ctx, acq_rng, options.proposal);
    } catch (const SurrogateError&) {
      next = sample_point(acq_rng);
      ++result.fallback_proposals;
    }
    record(objective.evaluate(next, derive_seed(master_seed, Stream::kSearch, index),
                              Stream::kSearch, index));
  }
  result.search_evaluations = objective.evaluations(Stream::kSearch);

  // Final choice by surrogate mean over evaluated points, not raw outcomes.
  std::size_t chosen = 0;
  try {
    result.final_model = fit_history(options.n_iter);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < result.history.size(); ++i) {
      const double mean = result.final_model->predict(encode(result.history[i].point)).mean;
      if (mean > best) {
        best = mean;
        chosen = i;
      }
    }
  } catch (const SurrogateError&) {
    for (std::size_t i = 1; i < result.history.size(); ++i) {
      if (result.history[i].y.value > result.history[chosen].y.value) chosen = i;
    }
  }
  result.chosen = result.history[chosen].point;
  result.allocation = result.history[chosen].allocation;
  result.y_valid = validate(result.chosen, objective, options.validation_reps, master_seed);
  result.wall_seconds = elapsed_ms(start) / 1000.0;
  return result;
}

std::vector<ReplicateChoice> cross_replicate_select(
    const std::vector<std::vector<double>>& outcomes) {
  if (outcomes.empty()) throw InputError("no grid outcomes");
  const std::size_t reps = outcomes.front().size();
  if (reps < 2) throw InputError("cross-replicate selection needs >= 2 replicates");
  for (const auto& row : outcomes) {
    if (row.size() != reps) throw InputError("ragged grid outcomes");
  }
  std::vector<ReplicateChoice> choices;
  choices.reserve(reps);
  for (std::size_t j = 0; j < reps; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < outcomes.size(); ++i) {
      if (outcomes[i][j] > outcomes[best][j]) best = i;
    }
    double held_out = 0.0;
    for (std::size_t k = 0; k < reps; ++k) {
      if (k != j) held_out += outcomes[best][k];
    }
    ReplicateChoice choice;
    choice.point_index = best;
    choice.naive = outcomes[best][j];
    choice.held_out.value = held_out / static_cast<double>(reps - 1);
    choices.push_back(choice);
  }
  return choices;
}

RunResult run_grid(const Scenario& scenario, int l, int reps,
                   std::uint64_t master_seed, Method label) {
  const auto start = Clock::now();
  const std::vector<DesignPoint> grid = make_grid(l);
  if (reps < 2) throw InputError("grid search needs at least two replicates");
  Objective objective(scenario, master_seed);

  RunResult result;
  result.method = label;
  result.master_seed = master_seed;
  result.history.reserve(grid.size() * reps);
  std::vector<std::vector<double>> outcomes(grid.size(), std::vector<double>(reps));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (int j = 0; j < reps; ++j) {
      EvaluationRecord rec = objective.evaluate(
          grid[i], derive_seed(master_seed, Stream::kSearch, i, j),
          Stream::kSearch, static_cast<int>(i), j);
      outcomes[i][j] = rec.y.value;
      result.history.push_back(std::move(rec));
    }
  }
  result.search_evaluations = objective.evaluations(Stream::kSearch);

  const int held_out_nsim = (reps - 1) * scenario.sim.nsim;
  result.replicate_choices = cross_replicate_select(outcomes);
  for (auto& choice : result.replicate_choices) {
    choice.point = grid[choice.point_index];
    const double v = choice.held_out.value;
    choice.held_out.nsim = held_out_nsim;
    choice.held_out.mc_se = std::sqrt(v * (1.0 - v) / held_out_nsim);
    result.y_valid.push_back(choice.held_out);
  }

  std::size_t best = 0;
  double best_mean = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double mean =
        std::accumulate(outcomes[i].begin(), outcomes[i].end(), 0.0) / reps;
    if (mean > best_mean) {
      best_mean = mean;
      best = i;
    }
  }
  result.chosen = grid[best];
  result.allocation = objective.resolve(grid[best]);
  result.wall_seconds = elapsed_ms(start) / 1000.0;
  return result;
}

DesignPoint snap_to_grid(const DesignPoint& p, std::span<const DesignPoint> grid) {
  const DesignPoint* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& g : grid) {
    if (g.strategy != p.strategy) continue;
    const double dr = g.r - p.r;
    const double dp = rule_param(g) - rule_param(p);
    const double dist = dr * dr + dp * dp;
    if (best == nullptr || dist < best_dist ||
        (dist == best_dist && (g.r < best->r ||
                               (g.r == best->r && rule_param(g) < rule_param(*best))))) {
      best = &g;
      best_dist = dist;
    }
  }
  if (best == nullptr) throw InputError("grid has no point with the same strategy");
  return *best;
}

RunResult snap_run(const RunResult& bo, const Scenario& scenario, int l,
                   int validation_reps, std::uint64_t master_seed) {
  const auto start = Clock::now();
  const std::vector<DesignPoint> grid = make_grid(l);
  Objective objective(scenario, master_seed);
  RunResult result;
  result.method = Method::kBOGrid;
  result.master_seed = master_seed;
  result.history = bo.history;
  result.best_so_far = bo.best_so_far;
  result.search_evaluations = bo.search_evaluations;
  result.chosen = snap_to_grid(bo.chosen, grid);
  result.allocation = objective.resolve(result.chosen);
  result.y_valid = validate(result.chosen, objective, validation_reps, master_seed);
  result.wall_seconds = bo.wall_seconds + elapsed_ms(start) / 1000.0;
  return result;
}

}  // namespace asdopt
