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

#ifndef DGAME_TRAJECTORY_HPP_
#define DGAME_TRAJECTORY_HPP_

#include "dgame/common.hpp"

#include <cmath>
#include <vector>

namespace dgame {

/// Nominal joint trajectory: K+1 states and K joint controls on a uniform
/// grid. Linearization and quadraticization happen about this point.
struct OperatingPoint {
  std::vector<VectorXd> states;
  std::vector<VectorXd> controls;

  std::size_t num_steps() const { return controls.size(); }

  bool operator==(const OperatingPoint& o) const {
    auto eq = [](const std::vector<VectorXd>& a, const std::vector<VectorXd>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].size() != b[k].size() || a[k] != b[k]) return false;
      }
      return true;
    };
    return eq(states, o.states) && eq(controls, o.controls);
  }
};

/// Which cost branch a non-ego agent is using.
enum class Phase { kAdversarial, kCooperative };

inline const char* to_string(Phase p) {
  return p == Phase::kAdversarial ? "adversarial" : "cooperative";
}

/// Grid index at which the adversarial window [0, T_adv) ends.
struct SwitchIndex {
  std::size_t index = 0;
  // True when T_adv was not an integer multiple of dt and had to be rounded.
  bool rounded = false;
};

inline SwitchIndex switch_index(double t_adv, double dt) {
  const double ratio = t_adv / dt;
  const double r = std::round(ratio);
  SwitchIndex s;
  s.index = r <= 0.0 ? 0 : static_cast<std::size_t>(r);
  s.rounded = std::abs(ratio - r) > 1e-9 * std::max(1.0, std::abs(ratio));
  return s;
}

inline Phase phase_at_step(std::size_t k, std::size_t switch_idx) {
  return k < switch_idx ? Phase::kAdversarial : Phase::kCooperative;
}

}  // namespace dgame

#endif  // DGAME_TRAJECTORY_HPP_
