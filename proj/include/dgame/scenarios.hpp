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

#ifndef DGAME_SCENARIOS_HPP_
#define DGAME_SCENARIOS_HPP_

// Scenario configuration (JSON), the two shipped traffic encounters and the
// builder that turns a configuration into a GameProblem.
//
// Schema (all keys required unless marked optional; unknown keys rejected):
//
//   {
//     "name": string,
//     "kind": "oncoming" | "intersection" | "generic",
//     "lanes": [ { "name": string, "waypoints": [[x, y], ...] } ],
//     "players": [ {
//         "name": string,
//         "model": "bicycle" | "unicycle",
//         "initial_state": [ ... ],          // 6 (bicycle) or 4 (unicycle)
//         "wheelbase": number,               // optional, bicycle only
//         "lane": string, "v_ref": number,
//         "v_lo": number, "v_hi": number,
//         "d_lane": number,                  // optional, overrides constraints.d_lane
//         "costs": { <phase>: <weights> }    // optional per-player overrides
//     } ],
//     "costs": {
//       "ego":         <weights>,
//       "cooperative": <weights>,
//       "adversarial": <weights>,
//       "adversarial_form": "attract" | "repel_clipped",   // optional
//       "adversarial_clip": number                         // optional, m
//     },
//     "constraints": { "d_prox": number, "d_lane": number,
//                      "proximity": bool, "lane": bool, "speed": bool },
//     "horizon": { "T": number, "dt": number, "T_adv": number }
//   }
//
//   <weights> = { "lane": w, "speed": w, "proximity": w, "adversarial": w,
//                 "input": [r_1, r_2], "proximity_distance": m (optional) }
//
// Player 0 is the ego. Numeric defaults are calibration values chosen to
// reproduce the qualitative behaviour of the two encounters; none of them is
// a published ground truth.

#include "dgame/common.hpp"
#include "dgame/constraints.hpp"
#include "dgame/costs.hpp"
#include "dgame/dynamics.hpp"
#include "dgame/geometry.hpp"
#include "dgame/ilq_solver.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace dgame {

using nlohmann::json;

struct PhaseWeights {
  double lane = 0.0;
  double speed = 0.0;
  double proximity = 0.0;
  double adversarial = 0.0;
  std::vector<double> input{1.0, 1.0};
  std::optional<double> proximity_distance;

  bool operator==(const PhaseWeights&) const = default;
};

struct PlayerWeightOverrides {
  std::optional<PhaseWeights> ego;
  std::optional<PhaseWeights> cooperative;
  std::optional<PhaseWeights> adversarial;

  bool operator==(const PlayerWeightOverrides&) const = default;
};

struct PlayerConfig {
  std::string name;
  ModelKind model = ModelKind::kBicycle;
  std::vector<double> initial_state;
  double wheelbase = 3.0;
  std::string lane;
  double v_ref = 0.0;
  double v_lo = 0.0;
  double v_hi = 1.0;
  std::optional<double> d_lane;
  PlayerWeightOverrides costs;

  bool operator==(const PlayerConfig&) const = default;
};

struct LaneConfig {
  std::string name;
  std::vector<Vec2> waypoints;

  bool operator==(const LaneConfig&) const = default;
};

struct CostConfig {
  PhaseWeights ego;
  PhaseWeights cooperative;
  PhaseWeights adversarial;
  AdversarialForm adversarial_form = AdversarialForm::kAttract;
  double adversarial_clip = kDefaultAdversarialClip;

  bool operator==(const CostConfig&) const = default;
};

struct ConstraintConfig {
  double d_prox = 1.0;
  double d_lane = 1.0;
  bool proximity = true;
  bool lane = true;
  bool speed = true;

  bool operator==(const ConstraintConfig&) const = default;
};

struct HorizonConfig {
  double T = 15.0;
  double dt = 0.1;
  double t_adv = 0.0;

  bool operator==(const HorizonConfig&) const = default;
};

struct ScenarioConfig {
  std::string name;
  std::string kind = "generic";
  std::string description;
  std::vector<LaneConfig> lanes;
  std::vector<PlayerConfig> players;
  CostConfig costs;
  ConstraintConfig constraints;
  HorizonConfig horizon;

  const LaneConfig& lane(const std::string& lane_name) const {
    for (const auto& l : lanes) {
      if (l.name == lane_name) return l;
    }
    throw ConfigError("unknown lane '" + lane_name + "'");
  }

  bool operator==(const ScenarioConfig&) const = default;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const json& j, const std::string& where,
                       const std::set<std::string>& required,
                       const std::set<std::string>& optional = {}) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!required.count(key) && !optional.count(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
  for (const auto& key : required) {
    if (!j.contains(key)) {
      throw ConfigError("missing key '" + key + "' in " + where);
    }
  }
}

inline double get_number(const json& j, const std::string& key,
                         const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + "." + key + " must be finite");
  return d;
}

inline std::vector<double> get_numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(where + " must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline PhaseWeights weights_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {}, {"lane", "speed", "proximity", "adversarial", "input",
                            "proximity_distance"});
  PhaseWeights w;
  if (j.contains("lane")) w.lane = get_number(j, "lane", where);
  if (j.contains("speed")) w.speed = get_number(j, "speed", where);
  if (j.contains("proximity")) w.proximity = get_number(j, "proximity", where);
  if (j.contains("adversarial")) w.adversarial = get_number(j, "adversarial", where);
  if (j.contains("input")) w.input = get_numbers(j.at("input"), where + ".input");
  if (j.contains("proximity_distance")) {
    w.proximity_distance = get_number(j, "proximity_distance", where);
  }
  return w;
}

inline json weights_to_json(const PhaseWeights& w) {
  json j = {{"lane", w.lane},
            {"speed", w.speed},
            {"proximity", w.proximity},
            {"adversarial", w.adversarial},
            {"input", w.input}};
  if (w.proximity_distance) j["proximity_distance"] = *w.proximity_distance;
  return j;
}

inline const char* form_name(AdversarialForm f) {
  return f == AdversarialForm::kAttract ? "attract" : "repel_clipped";
}

}  // namespace detail

/// Strict parse; throws ConfigError on any schema violation.
inline ScenarioConfig scenario_from_json(const json& j) {
  using detail::check_keys;
  using detail::get_number;
  check_keys(j, "scenario",
             {"name", "players", "lanes", "costs", "constraints", "horizon"},
             {"kind", "description"});
  ScenarioConfig cfg;
  if (!j.at("name").is_string()) throw ConfigError("name must be a string");
  cfg.name = j.at("name").get<std::string>();
  if (j.contains("description")) {
    if (!j.at("description").is_string()) throw ConfigError("description must be a string");
    cfg.description = j.at("description").get<std::string>();
  }
  if (j.contains("kind")) {
    cfg.kind = j.at("kind").get<std::string>();
    if (cfg.kind != "oncoming" && cfg.kind != "intersection" &&
        cfg.kind != "generic") {
      throw ConfigError("unknown scenario kind '" + cfg.kind + "'");
    }
  }

  if (!j.at("lanes").is_array()) throw ConfigError("lanes must be an array");
  for (const auto& lj : j.at("lanes")) {
    check_keys(lj, "lanes[]", {"name", "waypoints"});
    LaneConfig lane;
    lane.name = lj.at("name").get<std::string>();
    if (!lj.at("waypoints").is_array()) {
      throw ConfigError("lane waypoints must be an array");
    }
    for (const auto& wp : lj.at("waypoints")) {
      const auto xy = detail::get_numbers(wp, "waypoint");
      if (xy.size() != 2) throw ConfigError("waypoints must be [x, y] pairs");
      lane.waypoints.emplace_back(xy[0], xy[1]);
    }
    cfg.lanes.push_back(std::move(lane));
  }

  if (!j.at("players").is_array()) throw ConfigError("players must be an array");
  for (const auto& pj : j.at("players")) {
    check_keys(pj, "players[]",
               {"name", "model", "initial_state", "lane", "v_ref", "v_lo", "v_hi"},
               {"wheelbase", "d_lane", "costs"});
    PlayerConfig p;
    p.name = pj.at("name").get<std::string>();
    const std::string model = pj.at("model").get<std::string>();
    if (model == "bicycle") {
      p.model = ModelKind::kBicycle;
    } else if (model == "unicycle") {
      p.model = ModelKind::kUnicycle;
    } else {
      throw ConfigError("unknown model '" + model + "'");
    }
    p.initial_state = detail::get_numbers(pj.at("initial_state"), "initial_state");
    p.lane = pj.at("lane").get<std::string>();
    p.v_ref = get_number(pj, "v_ref", "player");
    p.v_lo = get_number(pj, "v_lo", "player");
    p.v_hi = get_number(pj, "v_hi", "player");
    if (pj.contains("wheelbase")) p.wheelbase = get_number(pj, "wheelbase", "player");
    if (pj.contains("d_lane")) p.d_lane = get_number(pj, "d_lane", "player");
    if (pj.contains("costs")) {
      const json& cj = pj.at("costs");
      check_keys(cj, "players[].costs", {}, {"ego", "cooperative", "adversarial"});
      if (cj.contains("ego")) p.costs.ego = detail::weights_from_json(cj.at("ego"), "ego");
      if (cj.contains("cooperative")) {
        p.costs.cooperative = detail::weights_from_json(cj.at("cooperative"), "cooperative");
      }
      if (cj.contains("adversarial")) {
        p.costs.adversarial = detail::weights_from_json(cj.at("adversarial"), "adversarial");
      }
    }
    cfg.players.push_back(std::move(p));
  }

  const json& cj = j.at("costs");
  check_keys(cj, "costs", {"ego", "cooperative", "adversarial"},
             {"adversarial_form", "adversarial_clip"});
  cfg.costs.ego = detail::weights_from_json(cj.at("ego"), "costs.ego");
  cfg.costs.cooperative =
      detail::weights_from_json(cj.at("cooperative"), "costs.cooperative");
  cfg.costs.adversarial =
      detail::weights_from_json(cj.at("adversarial"), "costs.adversarial");
  if (cj.contains("adversarial_form")) {
    const std::string f = cj.at("adversarial_form").get<std::string>();
    if (f == "attract") {
      cfg.costs.adversarial_form = AdversarialForm::kAttract;
    } else if (f == "repel_clipped") {
      cfg.costs.adversarial_form = AdversarialForm::kRepelClipped;
    } else {
      throw ConfigError("unknown adversarial_form '" + f + "'");
    }
  }
  if (cj.contains("adversarial_clip")) {
    cfg.costs.adversarial_clip = get_number(cj, "adversarial_clip", "costs");
  }

  const json& kj = j.at("constraints");
  check_keys(kj, "constraints", {"d_prox", "d_lane"}, {"proximity", "lane", "speed"});
  cfg.constraints.d_prox = get_number(kj, "d_prox", "constraints");
  cfg.constraints.d_lane = get_number(kj, "d_lane", "constraints");
  if (kj.contains("proximity")) cfg.constraints.proximity = kj.at("proximity").get<bool>();
  if (kj.contains("lane")) cfg.constraints.lane = kj.at("lane").get<bool>();
  if (kj.contains("speed")) cfg.constraints.speed = kj.at("speed").get<bool>();

  const json& hj = j.at("horizon");
  check_keys(hj, "horizon", {"T", "dt", "T_adv"});
  cfg.horizon.T = get_number(hj, "T", "horizon");
  cfg.horizon.dt = get_number(hj, "dt", "horizon");
  cfg.horizon.t_adv = get_number(hj, "T_adv", "horizon");
  return cfg;
}

inline json scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["kind"] = cfg.kind;
  if (!cfg.description.empty()) j["description"] = cfg.description;
  j["lanes"] = json::array();
  for (const auto& l : cfg.lanes) {
    json wps = json::array();
    for (const auto& p : l.waypoints) wps.push_back({p.x(), p.y()});
    j["lanes"].push_back({{"name", l.name}, {"waypoints", wps}});
  }
  j["players"] = json::array();
  for (const auto& p : cfg.players) {
    json pj = {{"name", p.name},
               {"model", to_string(p.model)},
               {"initial_state", p.initial_state},
               {"lane", p.lane},
               {"v_ref", p.v_ref},
               {"v_lo", p.v_lo},
               {"v_hi", p.v_hi}};
    if (p.model == ModelKind::kBicycle) pj["wheelbase"] = p.wheelbase;
    if (p.d_lane) pj["d_lane"] = *p.d_lane;
    json oj = json::object();
    if (p.costs.ego) oj["ego"] = detail::weights_to_json(*p.costs.ego);
    if (p.costs.cooperative) oj["cooperative"] = detail::weights_to_json(*p.costs.cooperative);
    if (p.costs.adversarial) oj["adversarial"] = detail::weights_to_json(*p.costs.adversarial);
    if (!oj.empty()) pj["costs"] = oj;
    j["players"].push_back(pj);
  }
  j["costs"] = {{"ego", detail::weights_to_json(cfg.costs.ego)},
                {"cooperative", detail::weights_to_json(cfg.costs.cooperative)},
                {"adversarial", detail::weights_to_json(cfg.costs.adversarial)},
                {"adversarial_form", detail::form_name(cfg.costs.adversarial_form)},
                {"adversarial_clip", cfg.costs.adversarial_clip}};
  j["constraints"] = {{"d_prox", cfg.constraints.d_prox},
                      {"d_lane", cfg.constraints.d_lane},
                      {"proximity", cfg.constraints.proximity},
                      {"lane", cfg.constraints.lane},
                      {"speed", cfg.constraints.speed}};
  j["horizon"] = {{"T", cfg.horizon.T},
                  {"dt", cfg.horizon.dt},
                  {"T_adv", cfg.horizon.t_adv}};
  return j;
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed scenario file '" + path + "': " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError("invalid scenario file '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shipped scenarios
// ---------------------------------------------------------------------------

inline constexpr const char* kCalibrationNote =
    "All numbers here are calibration defaults chosen to reproduce the "
    "qualitative behaviour; none are published measurements.";

/// Two-lane straight road. The ego drives North in the right lane (x = +2),
/// the other car South in the left lane (x = -2).
inline ScenarioConfig default_oncoming_config(double t_adv = 0.0) {
  ScenarioConfig cfg;
  cfg.name = "oncoming";
  cfg.kind = "oncoming";
  cfg.description = kCalibrationNote;
  cfg.lanes = {{"northbound", {Vec2(2.0, -100.0), Vec2(2.0, 300.0)}},
               {"southbound", {Vec2(-2.0, 300.0), Vec2(-2.0, -100.0)}}};
  const double pi = std::numbers::pi;
  PlayerConfig ego;
  ego.name = "ego";
  ego.initial_state = {2.0, 0.0, 0.0, 10.0, 0.0, 0.0};
  ego.wheelbase = 3.0;
  ego.lane = "northbound";
  ego.v_ref = 10.0;
  ego.v_lo = 0.0;
  ego.v_hi = 15.0;
  PlayerConfig other = ego;
  other.name = "oncoming";
  other.initial_state = {-2.0, 60.0, pi, 10.0, 0.0, 0.0};
  other.lane = "southbound";
  cfg.players = {ego, other};

  // The ego keeps a 4.5 m comfort buffer on top of the 3 m hard constraint.
  // The adversarial model steers sluggishly so that it cannot chase the ego
  // after passing, which keeps the iteration settling.
  cfg.costs.ego = {.lane = 1.0,
                   .speed = 0.5,
                   .proximity = 50.0,
                   .input = {10.0, 10.0},
                   .proximity_distance = 4.5};
  cfg.costs.cooperative = {.lane = 1.0,
                           .speed = 0.5,
                           .proximity = 50.0,
                           .input = {10.0, 10.0},
                           .proximity_distance = {}};
  cfg.costs.adversarial = {.adversarial = 0.1,
                           .input = {500.0, 10.0},
                           .proximity_distance = {}};
  cfg.constraints = {.d_prox = 3.0, .d_lane = 3.0};
  cfg.horizon = {.T = 15.0, .dt = 0.1, .t_adv = t_adv};
  return cfg;
}

/// Four-way intersection. The ego drives straight North; the other car comes
/// South and turns left (towards +x); a pedestrian crosses left to right on a
/// crosswalk north of the junction.
inline ScenarioConfig default_intersection_config(double t_adv = 0.0) {
  ScenarioConfig cfg;
  cfg.name = "intersection";
  cfg.kind = "intersection";
  cfg.description = kCalibrationNote;
  const double pi = std::numbers::pi;

  // Left-turn path: straight South, quarter circle of radius 6 m about
  // (4, 4), then East.
  std::vector<Vec2> turn{Vec2(-2.0, 100.0), Vec2(-2.0, 4.0)};
  const int arc_points = 16;
  for (int s = 1; s < arc_points; ++s) {
    const double a = pi - (pi / 2.0) * s / arc_points;
    turn.emplace_back(4.0 + 6.0 * std::cos(a), 4.0 - 6.0 * std::sin(a));
  }
  turn.emplace_back(4.0, -2.0);
  turn.emplace_back(100.0, -2.0);

  cfg.lanes = {{"northbound", {Vec2(2.0, -100.0), Vec2(2.0, 300.0)}},
               {"left_turn", turn},
               {"crosswalk", {Vec2(-30.0, 12.0), Vec2(30.0, 12.0)}}};

  PlayerConfig ego;
  ego.name = "ego";
  ego.initial_state = {2.0, -30.0, 0.0, 8.0, 0.0, 0.0};
  ego.wheelbase = 3.0;
  ego.lane = "northbound";
  ego.v_ref = 8.0;
  ego.v_lo = 0.0;
  ego.v_hi = 15.0;

  PlayerConfig car = ego;
  car.name = "left_turner";
  car.initial_state = {-2.0, 30.0, pi, 5.0, 0.0, 0.0};
  car.lane = "left_turn";
  car.v_ref = 5.0;

  PlayerConfig ped;
  ped.name = "pedestrian";
  ped.model = ModelKind::kUnicycle;
  ped.initial_state = {-8.0, 12.0, pi / 2.0, 1.5};
  ped.lane = "crosswalk";
  ped.v_ref = 1.5;
  ped.v_lo = 0.0;
  ped.v_hi = 3.0;
  ped.d_lane = 2.0;
  cfg.players = {ego, car, ped};

  cfg.costs.ego = {.lane = 1.0,
                   .speed = 0.5,
                   .proximity = 50.0,
                   .input = {10.0, 10.0},
                   .proximity_distance = 4.5};
  // Non-ego pairs have no hard constraint; the larger cooperative buffer
  // keeps the turning car and the pedestrian apart.
  cfg.costs.cooperative = {.lane = 1.0,
                           .speed = 0.5,
                           .proximity = 50.0,
                           .input = {10.0, 10.0},
                           .proximity_distance = 3.5};
  cfg.costs.adversarial = {.adversarial = 0.1,
                           .input = {500.0, 10.0},
                           .proximity_distance = {}};
  cfg.constraints = {.d_prox = 3.0, .d_lane = 3.0};
  cfg.horizon = {.T = 15.0, .dt = 0.1, .t_adv = t_adv};
  return cfg;
}

inline std::optional<ScenarioConfig> builtin_scenario(const std::string& name) {
  if (name == "oncoming") return default_oncoming_config();
  if (name == "intersection") return default_intersection_config();
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Problem construction
// ---------------------------------------------------------------------------

using VehicleGame = GameProblem<VehicleDynamics>;

enum class BuildMode {
  kSplitHorizon,     // non-egos adversarial on [0, T_adv), cooperative after
  kCooperativeOnly,  // no adversarial terms at all
};

namespace detail {

inline std::vector<CostTerm> phase_terms(const ScenarioConfig& cfg,
                                         PlayerIndex i, const PhaseWeights& w,
                                         bool adversarial_phase) {
  const PlayerConfig& p = cfg.players[i];
  std::vector<CostTerm> terms;
  if (w.lane > 0.0) {
    terms.push_back(CostTerm::lane_center(
        i, LaneCenterline(cfg.lane(p.lane).waypoints), w.lane));
  }
  if (w.speed > 0.0) terms.push_back(CostTerm::ideal_speed(i, p.v_ref, w.speed));
  if (w.proximity > 0.0) {
    const double dp = w.proximity_distance.value_or(cfg.constraints.d_prox);
    for (PlayerIndex j = 0; j < cfg.players.size(); ++j) {
      if (j == i) continue;
      terms.push_back(CostTerm::cooperative_proximity(i, j, dp, w.proximity));
    }
  }
  if (adversarial_phase && w.adversarial > 0.0) {
    terms.push_back(CostTerm::adversarial(i, 0, w.adversarial,
                                          cfg.costs.adversarial_form,
                                          cfg.costs.adversarial_clip));
  }
  if (w.input.size() != 2) throw ConfigError("input weights need 2 entries");
  MatrixXd R = Eigen::Vector2d(w.input[0], w.input[1]).asDiagonal();
  terms.push_back(CostTerm::input_quadratic(i, std::move(R)));
  return terms;
}

}  // namespace detail

/// Checks the invariants every shipped or user scenario must satisfy.
inline void validate_scenario(const ScenarioConfig& cfg) {
  if (cfg.players.size() < 2) throw ConfigError("need an ego and at least one other player");
  if (cfg.players.front().model != ModelKind::kBicycle) {
    throw ConfigError("the ego (first player) must be a vehicle");
  }
  if (!(cfg.horizon.dt > 0.0) || !(cfg.horizon.T > 0.0)) {
    throw ConfigError("horizon T and dt must be positive");
  }
  if (cfg.horizon.t_adv < 0.0 || cfg.horizon.t_adv > cfg.horizon.T) {
    throw ConfigError("T_adv must lie in [0, T]");
  }
  if (cfg.costs.ego.adversarial != 0.0) {
    throw ConfigError("the ego has no adversarial term");
  }
  for (const auto& p : cfg.players) {
    const std::size_t want = p.model == ModelKind::kBicycle ? 6 : 4;
    if (p.initial_state.size() != want) {
      throw ConfigError("player '" + p.name + "' has a wrong-sized initial state");
    }
    (void)cfg.lane(p.lane);
    if (!(p.v_lo < p.v_hi)) throw ConfigError("player '" + p.name + "' needs v_lo < v_hi");
    if (p.initial_state[3] < p.v_lo || p.initial_state[3] > p.v_hi) {
      throw ConfigError("player '" + p.name + "' starts outside its speed range");
    }
    const double d_lane = p.d_lane.value_or(cfg.constraints.d_lane);
    const LaneCenterline lane(cfg.lane(p.lane).waypoints);
    if (cfg.constraints.lane &&
        distance_to_lane(lane, Vec2(p.initial_state[0], p.initial_state[1])).distance >=
            d_lane) {
      throw ConfigError("player '" + p.name + "' starts outside its lane bounds");
    }
  }
  for (std::size_t a = 0; a < cfg.players.size(); ++a) {
    for (std::size_t b = a + 1; b < cfg.players.size(); ++b) {
      const Vec2 pa(cfg.players[a].initial_state[0], cfg.players[a].initial_state[1]);
      const Vec2 pb(cfg.players[b].initial_state[0], cfg.players[b].initial_state[1]);
      if (cfg.constraints.proximity && a == 0 &&
          (pa - pb).norm() <= cfg.constraints.d_prox) {
        throw ConfigError("players start closer than d_prox");
      }
    }
  }
}

/// Generic builder shared by the shipped scenarios and user configurations.
inline VehicleGame build_problem(const ScenarioConfig& cfg,
                                 BuildMode mode = BuildMode::kSplitHorizon) {
  validate_scenario(cfg);
  VehicleGame problem;
  std::vector<PlayerModel> models;
  std::vector<double> x0;
  for (const auto& p : cfg.players) {
    models.push_back(p.model == ModelKind::kBicycle ? PlayerModel::bicycle(p.wheelbase)
                                                    : PlayerModel::unicycle());
    x0.insert(x0.end(), p.initial_state.begin(), p.initial_state.end());
  }
  problem.dynamics = VehicleDynamics(std::move(models));
  problem.initial_state = Eigen::Map<const VectorXd>(x0.data(), x0.size());
  problem.horizon = cfg.horizon.T;
  problem.dt = cfg.horizon.dt;
  problem.t_adv = mode == BuildMode::kCooperativeOnly ? 0.0 : cfg.horizon.t_adv;

  for (PlayerIndex i = 0; i < cfg.players.size(); ++i) {
    const auto& over = cfg.players[i].costs;
    if (i == 0) {
      problem.costs.push_back(SplitHorizonCost::single(
          0, detail::phase_terms(cfg, 0, over.ego.value_or(cfg.costs.ego), false)));
      continue;
    }
    SplitHorizonCost c;
    c.player = i;
    c.cooperative = detail::phase_terms(
        cfg, i, over.cooperative.value_or(cfg.costs.cooperative), false);
    if (mode == BuildMode::kSplitHorizon) {
      c.adversarial = detail::phase_terms(
          cfg, i, over.adversarial.value_or(cfg.costs.adversarial), true);
      c.t_adv = cfg.horizon.t_adv;
    }
    problem.costs.push_back(std::move(c));
  }

  for (PlayerIndex i = 0; i < cfg.players.size(); ++i) {
    if (cfg.constraints.proximity && i > 0) {
      problem.constraints.push_back(Constraint::proximity(i, cfg.constraints.d_prox));
    }
  }
  for (PlayerIndex i = 0; i < cfg.players.size(); ++i) {
    const auto& p = cfg.players[i];
    if (cfg.constraints.lane) {
      problem.constraints.push_back(Constraint::lane_half_width(
          i, LaneCenterline(cfg.lane(p.lane).waypoints),
          p.d_lane.value_or(cfg.constraints.d_lane)));
    }
    if (cfg.constraints.speed) {
      problem.constraints.push_back(Constraint::speed_range(i, p.v_lo, p.v_hi));
    }
  }
  problem.validate();
  return problem;
}

inline VehicleGame build_oncoming(const ScenarioConfig& cfg,
                                  BuildMode mode = BuildMode::kSplitHorizon) {
  if (cfg.players.size() != 2 ||
      cfg.players[0].model != ModelKind::kBicycle ||
      cfg.players[1].model != ModelKind::kBicycle) {
    throw ConfigError("the oncoming scenario needs exactly two vehicles");
  }
  return build_problem(cfg, mode);
}

inline VehicleGame build_three_player_intersection(
    const ScenarioConfig& cfg, BuildMode mode = BuildMode::kSplitHorizon) {
  if (cfg.players.size() != 3 ||
      cfg.players[0].model != ModelKind::kBicycle ||
      cfg.players[1].model != ModelKind::kBicycle ||
      cfg.players[2].model != ModelKind::kUnicycle) {
    throw ConfigError("the intersection scenario needs two vehicles and a pedestrian");
  }
  return build_problem(cfg, mode);
}

/// Dispatches on cfg.kind.
inline VehicleGame build_scenario(const ScenarioConfig& cfg,
                                  BuildMode mode = BuildMode::kSplitHorizon) {
  if (cfg.kind == "oncoming") return build_oncoming(cfg, mode);
  if (cfg.kind == "intersection") return build_three_player_intersection(cfg, mode);
  return build_problem(cfg, mode);
}

/// Structural checks on a built problem: ego first, proximity constraints
/// ego-owned, every non-ego carries both term lists.
inline void validate_structure(const VehicleGame& problem) {
  problem.validate();
  for (const auto& c : problem.constraints) {
    if (c.kind == ConstraintKind::kProximity && c.owner != 0) {
      throw ConfigError("proximity constraint not owned by the ego");
    }
  }
  if (!problem.costs.front().adversarial.empty()) {
    throw ConfigError("the ego cost must not be split");
  }
  for (std::size_t i = 1; i < problem.costs.size(); ++i) {
    if (problem.costs[i].cooperative.empty() ||
        (problem.t_adv > 0.0 && problem.costs[i].adversarial.empty())) {
      throw ConfigError("non-ego players need adversarial and cooperative terms");
    }
  }
}

}  // namespace dgame

#endif  // DGAME_SCENARIOS_HPP_
