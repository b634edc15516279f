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

// dgame: solve, sweep or simulate a split-horizon defensive driving game.
//
// Exit codes: 0 success, 2 infeasible or failed solve, 3 configuration error.

#include "dgame/dgame.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitConfig = 3;

dgame::ScenarioConfig load(const std::string& name_or_path) {
  if (auto cfg = dgame::builtin_scenario(name_or_path)) return *cfg;
  if (!std::filesystem::exists(name_or_path)) {
    throw dgame::ConfigError("'" + name_or_path +
                             "' is neither a built-in scenario nor a file");
  }
  return dgame::load_scenario_file(name_or_path);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw dgame::ConfigError("bad --sweep entry '" + item + "'");
    }
  }
  if (out.empty()) throw dgame::ConfigError("--sweep needs at least one value");
  return out;
}

void print_run(const dgame::RunResult& r) {
  std::printf("%s T_adv=%s ", r.config.name.c_str(), dgame::format_number(r.t_adv).c_str());
  if (!r.ok) {
    std::printf("FAILED: %s\n", r.error.c_str());
    return;
  }
  const auto& s = r.solution;
  std::printf(
      "%s%s max_violation=%.3g iterations=%zu/%zu time=%.3fs "
      "max_ego_dev=%.3fm min_dist=%.3fm\n",
      s.feasible ? "feasible" : "INFEASIBLE", s.converged ? "" : " (not converged)",
      s.max_violation, s.inner_iterations, s.outer_iterations, s.solve_time,
      r.metrics.max_ego_lateral_deviation, r.metrics.min_distance);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Split-horizon defensive driving game solver"};
  std::string scenario;
  std::optional<double> t_adv;
  std::string sweep;
  bool receding = false;
  double replan_interval = 0.5;
  std::optional<double> duration;
  std::string world_model = "cooperative";
  std::string out_dir = "out";
  long long seed = 0;
  bool verbose = false;

  app.add_option("--scenario", scenario, "built-in name (oncoming, intersection) or JSON path")
      ->required();
  app.add_option("--t-adv", t_adv, "adversarial horizon in seconds (default: from scenario)");
  app.add_option("--sweep", sweep, "comma-separated T_adv values");
  app.add_flag("--receding", receding, "receding-horizon simulation");
  app.add_option("--replan-interval", replan_interval, "seconds between replans");
  app.add_option("--duration", duration, "simulated seconds (default: horizon T)");
  app.add_option("--world-model", world_model, "non-ego behaviour while simulating")
      ->check(CLI::IsMember({"cooperative", "planned"}));
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "reserved; the solver is deterministic");
  app.add_flag("--verbose", verbose, "JSON-lines iteration log on stderr");
  app.get_option("--sweep")->excludes("--t-adv");
  app.get_option("--sweep")->excludes("--receding");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const dgame::ScenarioConfig cfg = load(scenario);
    dgame::RunOptions options;
    options.out_dir = std::filesystem::path(out_dir);
    if (verbose) {
      options.solver.log = [](const dgame::IterationRecord& r) {
        nlohmann::ordered_json j;
        j["outer"] = r.outer;
        j["inner"] = r.inner;
        j["step_size"] = r.step_size;
        j["state_change"] = r.state_change;
        j["max_violation"] = r.max_violation;
        j["penalty"] = r.penalty;
        j["costs"] = r.costs;
        std::cerr << j.dump() << '\n';
      };
    }

    if (!sweep.empty()) {
      const auto runs = dgame::run_sweep(cfg, parse_list(sweep), options);
      bool all_ok = true;
      for (const auto& r : runs) {
        print_run(r);
        all_ok = all_ok && r.feasible();
      }
      return all_ok ? kExitOk : kExitInfeasible;
    }

    const double t = t_adv.value_or(cfg.horizon.t_adv);
    if (receding) {
      dgame::RecedingHorizonConfig rh;
      rh.replan_interval = replan_interval;
      rh.duration = duration.value_or(cfg.horizon.T);
      rh.world_model = world_model == "planned" ? dgame::WorldModel::kPlanned
                                                : dgame::WorldModel::kCooperative;
      const auto res = dgame::run_receding(cfg, t, rh, options);
      std::vector<double> times = res.solve_times;
      std::sort(times.begin(), times.end());
      const double median = times.empty() ? 0.0 : times[times.size() / 2];
      std::printf("%s T_adv=%s receding: %zu replans, median solve %.3fs, "
                  "min_dist=%.3fm max_ego_dev=%.3fm %s\n",
                  cfg.name.c_str(), dgame::format_number(t).c_str(),
                  res.replan_steps.size(), median, res.metrics.min_distance,
                  res.metrics.max_ego_lateral_deviation,
                  res.feasible ? "ok" : ("FAILED: " + res.error).c_str());
      return res.feasible ? kExitOk : kExitInfeasible;
    }

    const auto r = dgame::run_single(cfg, t, options);
    print_run(r);
    return r.feasible() ? kExitOk : kExitInfeasible;
  } catch (const dgame::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  }
}
