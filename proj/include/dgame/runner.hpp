/*
 Copyright 2026 The dgame Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef DGAME_RUNNER_HPP_
#define DGAME_RUNNER_HPP_

// Single solves, T_adv sweeps, receding-horizon simulation and the CSV / JSON
// exports behind the command-line tool.
//
// Trajectory CSV: one row per (timestep, player), timesteps outermost.
//   t,player,px,py,theta,v,phi,a,u1,u2,phase,min_dist,max_violation
// Columns a model does not have (phi, a for the pedestrian) and the controls
// of the final timestep are left empty. min_dist is the distance from the
// row's player to its nearest other player; max_violation is the largest
// positive violation among the constraints that player owns.
//
// Wall-clock solve times are printed, never written, so that repeated runs
// produce byte-identical files.

#include "dgame/common.hpp"
#include "dgame/constraints.hpp"
#include "dgame/geometry.hpp"
#include "dgame/ilq_solver.hpp"
#include "dgame/scenarios.hpp"
#include "dgame/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dgame {

inline constexpr const char* kTrajectoryCsvHeader =
    "t,player,px,py,theta,v,phi,a,u1,u2,phase,min_dist,max_violation";

/// Shortest round-trip decimal form; locale independent.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // folds -0
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

struct TrajectoryRecord {
  PlayerStateLayout layout;
  std::size_t num_players = 0;
  std::vector<std::string> player_names;
  std::vector<ModelKind> models;
  std::vector<double> time;         // s, one per row group
  std::vector<VectorXd> states;     // joint state per timestep
  std::vector<VectorXd> controls;   // joint control per timestep, size rows-1
  std::vector<Phase> phases;        // per timestep
  std::vector<std::vector<double>> min_distance;   // [k][player]
  std::vector<std::vector<double>> max_violation;  // [k][player]

  std::size_t num_timesteps() const { return states.size(); }
};

namespace detail {

inline std::vector<ModelKind> models_of(const ScenarioConfig& cfg) {
  std::vector<ModelKind> m;
  for (const auto& p : cfg.players) m.push_back(p.model);
  return m;
}

inline std::vector<std::string> names_of(const ScenarioConfig& cfg) {
  std::vector<std::string> n;
  for (const auto& p : cfg.players) n.push_back(p.name);
  return n;
}

// Fills the per-row diagnostics for the timestep just appended.
inline void annotate_last(const VehicleGame& problem, TrajectoryRecord& rec) {
  const auto& layout = problem.layout();
  const VectorXd& x = rec.states.back();
  const std::size_t N = layout.num_players();
  std::vector<double> dmin(N, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      if (i == j) continue;
      dmin[i] = std::min(dmin[i], (layout.position(x, i) - layout.position(x, j)).norm());
    }
  }
  std::vector<double> viol(N, 0.0);
  for (const auto& c : problem.constraints) {
    viol[c.owner] = std::max(viol[c.owner], violation(c, layout, x));
  }
  rec.min_distance.push_back(std::move(dmin));
  rec.max_violation.push_back(std::move(viol));
}

}  // namespace detail

/// Record of a planned trajectory; phases follow the problem's own T_adv.
inline TrajectoryRecord make_record(const ScenarioConfig& cfg,
                                    const VehicleGame& problem,
                                    const OperatingPoint& traj) {
  TrajectoryRecord rec;
  rec.layout = problem.layout();
  rec.num_players = problem.num_players();
  rec.player_names = detail::names_of(cfg);
  rec.models = detail::models_of(cfg);
  const std::size_t sw = problem.switch_step();
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    rec.time.push_back(static_cast<double>(k) * problem.dt);
    rec.states.push_back(traj.states[k]);
    if (k < traj.controls.size()) rec.controls.push_back(traj.controls[k]);
    rec.phases.push_back(phase_at_step(k, sw));
    detail::annotate_last(problem, rec);
  }
  return rec;
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
  const PlayerStateLayout& layout = rec.layout;
  os << kTrajectoryCsvHeader << '\n';
  for (std::size_t k = 0; k < rec.states.size(); ++k) {
    for (std::size_t i = 0; i < rec.num_players; ++i) {
      const auto& b = layout.block(i);
      os << format_number(rec.time[k]) << ',' << i;
      for (Eigen::Index s = 0; s < 6; ++s) {
        os << ',';
        if (s < b.state_dim) os << format_number(rec.states[k](b.state_offset + s));
      }
      for (Eigen::Index c = 0; c < 2; ++c) {
        os << ',';
        if (k < rec.controls.size() && c < b.control_dim) {
          os << format_number(rec.controls[k](b.control_offset + c));
        }
      }
      os << ',' << to_string(rec.phases[k]) << ','
         << format_number(rec.min_distance[k][i]) << ','
         << format_number(rec.max_violation[k][i]) << '\n';
    }
  }
}

/// Summary statistics of a record, as reported in JSON summaries.
struct TrajectoryMetrics {
  double max_ego_lateral_deviation = 0.0;  // m, |signed offset| from the ego lane
  double ego_offset_at_closest = 0.0;      // m, signed, at the ego's closest approach
  double min_distance = 0.0;               // m, ego to any other player
  double max_violation = 0.0;              // native units, positive part
  std::vector<double> min_speed;           // per player
};

inline TrajectoryMetrics compute_metrics(const ScenarioConfig& cfg,
                                         const VehicleGame& problem,
                                         const TrajectoryRecord& rec) {
  const auto& layout = problem.layout();
  const LaneCenterline ego_lane(cfg.lane(cfg.players.front().lane).waypoints);
  TrajectoryMetrics m;
  m.min_distance = std::numeric_limits<double>::infinity();
  m.min_speed.assign(rec.num_players, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < rec.states.size(); ++k) {
    const VectorXd& x = rec.states[k];
    const double offset = signed_lane_offset(ego_lane, layout.position(x, 0));
    m.max_ego_lateral_deviation = std::max(m.max_ego_lateral_deviation, std::abs(offset));
    if (rec.min_distance[k][0] < m.min_distance) {
      m.min_distance = rec.min_distance[k][0];
      m.ego_offset_at_closest = offset;
    }
    for (std::size_t i = 0; i < rec.num_players; ++i) {
      m.max_violation = std::max(m.max_violation, rec.max_violation[k][i]);
      m.min_speed[i] = std::min(m.min_speed[i], x(layout.speed(i)));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Single solves and sweeps
// ---------------------------------------------------------------------------

struct RunOptions {
  SolverConfig solver;
  BuildMode mode = BuildMode::kSplitHorizon;
  std::optional<std::filesystem::path> out_dir;  // no files when unset
};

struct RunResult {
  ScenarioConfig config;  // with horizon.t_adv set to the solved value
  double t_adv = 0.0;
  bool ok = false;        // solve finished (feasible or not)
  std::string error;      // set when the solve threw
  GameSolution solution;
  TrajectoryRecord record;
  TrajectoryMetrics metrics;

  bool feasible() const { return ok && solution.feasible; }
};

inline std::string run_stem(const ScenarioConfig& cfg, double t_adv) {
  return cfg.name + "_tadv" + format_number(t_adv);
}

inline nlohmann::ordered_json summary_json(const RunResult& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.config.name;
  j["T_adv"] = r.t_adv;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  const auto& s = r.solution;
  j["converged"] = s.converged;
  j["feasible"] = s.feasible;
  j["max_violation"] = s.max_violation;
  j["costs"] = s.costs;
  j["inner_iterations"] = s.inner_iterations;
  j["outer_iterations"] = s.outer_iterations;
  j["max_ego_lateral_deviation"] = r.metrics.max_ego_lateral_deviation;
  j["ego_offset_at_closest"] = r.metrics.ego_offset_at_closest;
  j["min_distance"] = r.metrics.min_distance;
  j["min_speed"] = r.metrics.min_speed;
  j["rows"] = r.record.num_timesteps();
  return j;
}

// Writes text atomically enough for our purposes: the whole buffer at once.
inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty()
                                          ? std::filesystem::path(".")
                                          : path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw Error("failed writing '" + path.string() + "'");
}

inline std::string dump_json(const nlohmann::ordered_json& j) {
  // Fixed float formatting comes from nlohmann's shortest round-trip output.
  return j.dump(2) + "\n";
}

inline void write_run_files(const RunResult& r, const std::filesystem::path& dir) {
  const std::string stem = run_stem(r.config, r.t_adv);
  if (r.ok) {
    std::ostringstream csv;
    write_trajectory_csv(csv, r.record);
    write_text(dir / (stem + ".csv"), csv.str());
  }
  write_text(dir / (stem + ".json"), dump_json(summary_json(r)));
}

/// One full-horizon solve at `t_adv`. Solver exceptions are caught and
/// reported through RunResult::error; configuration errors propagate.
inline RunResult run_single(ScenarioConfig cfg, double t_adv,
                            const RunOptions& options = {}) {
  cfg.horizon.t_adv = t_adv;
  RunResult r;
  r.t_adv = t_adv;
  const VehicleGame problem = build_scenario(cfg, options.mode);
  r.config = cfg;
  try {
    r.solution = solve(problem, options.solver);
    r.record = make_record(cfg, problem, r.solution.trajectory);
    r.metrics = compute_metrics(cfg, problem, r.record);
    r.ok = true;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    r.error = e.what();
  }
  if (options.out_dir) write_run_files(r, *options.out_dir);
  return r;
}

inline nlohmann::ordered_json sweep_summary_json(const std::vector<RunResult>& runs) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : runs) rows.push_back(summary_json(r));
  nlohmann::ordered_json j;
  j["scenario"] = runs.empty() ? std::string() : runs.front().config.name;
  j["runs"] = std::move(rows);
  return j;
}

/// Independent solves over `t_advs`, run concurrently. A failing value is
/// recorded in its RunResult and does not stop the others.
inline std::vector<RunResult> run_sweep(const ScenarioConfig& cfg,
                                        const std::vector<double>& t_advs,
                                        const RunOptions& options = {}) {
  if (t_advs.empty()) throw ConfigError("empty T_adv sweep");
  // Validate once up front so a bad configuration fails as a whole.
  for (double t : t_advs) {
    ScenarioConfig c = cfg;
    c.horizon.t_adv = t;
    validate_scenario(c);
  }
  std::vector<std::future<RunResult>> futures;
  for (double t : t_advs) {
    futures.push_back(std::async(std::launch::async, [&cfg, t, &options] {
      RunOptions o = options;
      o.out_dir.reset();
      o.solver.log = nullptr;  // shared sinks are not thread-safe
      return run_single(cfg, t, o);
    }));
  }
  std::vector<RunResult> runs;
  for (auto& f : futures) runs.push_back(f.get());
  if (options.out_dir) {
    for (const auto& r : runs) write_run_files(r, *options.out_dir);
    write_text(*options.out_dir / (cfg.name + "_sweep.json"),
               dump_json(sweep_summary_json(runs)));
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Receding horizon
// ---------------------------------------------------------------------------

/// How non-ego agents actually behave while the ego replans.
enum class WorldModel {
  kCooperative,  // equilibrium strategies of an all-cooperative game
  kPlanned,      // the ego's own split-horizon equilibrium strategies
};

inline const char* to_string(WorldModel w) {
  return w == WorldModel::kCooperative ? "cooperative" : "planned";
}

struct RecedingHorizonConfig {
  double replan_interval = 0.5;  // s
  double duration = 15.0;        // s of simulated time
  WorldModel world_model = WorldModel::kCooperative;
};

struct RecedingResult {
  ScenarioConfig config;
  double t_adv = 0.0;
  RecedingHorizonConfig rh;
  TrajectoryRecord record;          // executed states, one per simulated step
  std::vector<std::size_t> replan_steps;  // record index where each replan starts
  std::vector<double> solve_times;  // s, per replan (ego game)
  std::vector<GameSolution> plans;  // ego plan of each replan
  bool feasible = true;
  std::string error;
  TrajectoryMetrics metrics;
};

/// Replans every `replan_interval` from the executed state. The ego applies
/// the feedback law of its split-horizon plan; non-egos follow the configured
/// world model. Each solve is warm-started from the previous one. Stops early
/// on the first infeasible or failed replan.
inline RecedingResult run_receding(ScenarioConfig cfg, double t_adv,
                                   const RecedingHorizonConfig& rh,
                                   const RunOptions& options = {}) {
  cfg.horizon.t_adv = t_adv;
  validate_scenario(cfg);
  const double dt = cfg.horizon.dt;
  const auto steps_of = [dt](double s, const char* what) {
    const double r = s / dt;
    if (!(s > 0.0) || std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r)) {
      throw ConfigError(std::string(what) + " must be a positive multiple of dt");
    }
    return static_cast<std::size_t>(std::llround(r));
  };
  const std::size_t interval = steps_of(rh.replan_interval, "replan interval");
  const std::size_t total = steps_of(rh.duration, "duration");

  RecedingResult out;
  out.config = cfg;
  out.t_adv = t_adv;
  out.rh = rh;
  VehicleGame ego_game = build_scenario(cfg, options.mode);
  VehicleGame world_game = build_scenario(cfg, BuildMode::kCooperativeOnly);
  const auto& layout = ego_game.layout();
  const std::size_t K = ego_game.num_steps();
  if (interval > K) throw ConfigError("replan interval exceeds the planning horizon");

  TrajectoryRecord& rec = out.record;
  rec.layout = layout;
  rec.num_players = ego_game.num_players();
  rec.player_names = detail::names_of(cfg);
  rec.models = detail::models_of(cfg);
  rec.states.push_back(ego_game.initial_state);
  rec.time.push_back(0.0);
  rec.phases.push_back(phase_at_step(0, ego_game.switch_step()));
  detail::annotate_last(ego_game, rec);

  std::optional<WarmStart> ego_warm, world_warm;
  std::size_t executed = 0;
  while (executed < total) {
    ego_game.initial_state = rec.states.back();
    world_game.initial_state = rec.states.back();
    out.replan_steps.push_back(executed);
    GameSolution plan, world;
    try {
      plan = solve(ego_game, options.solver, ego_warm);
      if (rh.world_model == WorldModel::kCooperative) {
        world = solve(world_game, options.solver, world_warm);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      out.feasible = false;
      out.error = e.what();
      break;
    }
    out.solve_times.push_back(plan.solve_time);
    if (!plan.feasible ||
        (rh.world_model == WorldModel::kCooperative && !world.feasible)) {
      out.feasible = false;
      out.error = "replan at step " + std::to_string(executed) + " infeasible";
      out.plans.push_back(std::move(plan));
      break;
    }

    const GameSolution& others = rh.world_model == WorldModel::kCooperative ? world : plan;
    const std::size_t n = std::min(interval, total - executed);
    for (std::size_t k = 0; k < n; ++k) {
      const VectorXd& x = rec.states.back();
      VectorXd u(layout.control_dim());
      for (std::size_t i = 0; i < layout.num_players(); ++i) {
        const auto& b = layout.block(i);
        u.segment(b.control_offset, b.control_dim) =
            feedback_control(layout, i == 0 ? plan : others, i, k, x);
      }
      VectorXd next = ego_game.dynamics.integrate_step(x, u, dt);
      rec.controls.push_back(std::move(u));
      rec.states.push_back(std::move(next));
      rec.time.push_back(static_cast<double>(executed + k + 1) * dt);
      // Phase of the ego's model at this point of the current plan.
      rec.phases.push_back(phase_at_step(k + 1 < n ? k + 1 : 0, ego_game.switch_step()));
      detail::annotate_last(ego_game, rec);
    }
    executed += n;
    ego_warm = shift_solution(plan, n);
    if (rh.world_model == WorldModel::kCooperative) world_warm = shift_solution(world, n);
    out.plans.push_back(std::move(plan));
  }
  out.metrics = compute_metrics(cfg, ego_game, rec);

  if (options.out_dir) {
    const std::string stem = run_stem(cfg, t_adv) + "_receding";
    std::ostringstream csv;
    write_trajectory_csv(csv, rec);
    write_text(*options.out_dir / (stem + ".csv"), csv.str());
    nlohmann::ordered_json j;
    j["scenario"] = cfg.name;
    j["T_adv"] = t_adv;
    j["replan_interval"] = rh.replan_interval;
    j["duration"] = rh.duration;
    j["world_model"] = to_string(rh.world_model);
    j["feasible"] = out.feasible;
    if (!out.feasible) j["error"] = out.error;
    j["replans"] = out.replan_steps.size();
    j["max_ego_lateral_deviation"] = out.metrics.max_ego_lateral_deviation;
    j["min_distance"] = out.metrics.min_distance;
    j["max_violation"] = out.metrics.max_violation;
    j["min_speed"] = out.metrics.min_speed;
    j["rows"] = rec.num_timesteps();
    write_text(*options.out_dir / (stem + ".json"), dump_json(j));
  }
  return out;
}

}  // namespace dgame

#endif  // DGAME_RUNNER_HPP_
