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

#ifndef DGAME_DGAME_HPP_
#define DGAME_DGAME_HPP_

#include "dgame/common.hpp"
#include "dgame/constraints.hpp"
#include "dgame/costs.hpp"
#include "dgame/dynamics.hpp"
#include "dgame/geometry.hpp"
#include "dgame/ilq_solver.hpp"
#include "dgame/lq_game.hpp"
#include "dgame/runner.hpp"
#include "dgame/scenarios.hpp"
#include "dgame/trajectory.hpp"

#endif  // DGAME_DGAME_HPP_
