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

#include "dgame/ilq_solver.hpp"
#include "dgame/scenarios.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

namespace dgame {
namespace {

using testing::linear_quadratic_problem;

double max_gap(const OperatingPoint& a, const OperatingPoint& b) {
  return max_state_change(a, b);
}

OperatingPoint zero_control_op(const GameProblem<testing::LinearDynamics>& p) {
  return simulate_controls(p.dynamics, p.initial_state,
                           std::vector<VectorXd>(p.num_steps(),
                                                 VectorXd::Zero(p.layout().control_dim())),
                           p.dt);
}

SolverConfig exact_config() {
  SolverConfig c;
  c.regularization = 0.0;
  return c;
}

// The quadratic model is exact here, so the first iterate is the LQ game's
// equilibrium about the zero-control trajectory.
TEST(Solve, LinearQuadraticProblemFirstIterateIsLqSolution) {
  const auto p = linear_quadratic_problem(2);
  const OperatingPoint op = zero_control_op(p);
  std::vector<LqGameStage> stages;
  std::vector<TerminalCost> terminal;
  detail::build_lq_game(p, MultiplierState::zeros(0, p.num_steps() + 1), op, 0.0, stages,
                        terminal);
  const auto strategies = solve_lq_game(stages, terminal);
  const auto dx = lq_rollout(stages, strategies, VectorXd::Zero(p.initial_state.size()));

  SolverConfig one = exact_config();
  one.max_inner_iterations = 1;
  const GameSolution sol = solve(p, one);
  for (std::size_t k = 0; k <= p.num_steps(); ++k) {
    EXPECT_LT((sol.trajectory.states[k] - (op.states[k] + dx[k])).cwiseAbs().maxCoeff(),
              1e-10);
  }
}

TEST(Solve, LinearQuadraticProblemIsAFixedPointAfterOneStep) {
  const auto p = linear_quadratic_problem(2);
  SolverConfig one = exact_config();
  one.max_inner_iterations = 1;
  const GameSolution first = solve(p, one);
  const GameSolution sol = solve(p, exact_config());
  EXPECT_TRUE(sol.converged);
  EXPECT_EQ(sol.inner_iterations, 2u);
  EXPECT_LT(max_gap(first.trajectory, sol.trajectory), 1e-9);
}

TEST(Solve, LinearQuadraticProblemIsANashEquilibrium) {
  const auto p = linear_quadratic_problem(3);
  const GameSolution sol = solve(p, exact_config());
  const auto gap = nash_residual(p, sol, exact_config());
  for (std::size_t i = 0; i < gap.size(); ++i) {
    EXPECT_LT(std::abs(gap[i]), 1e-8 * std::max(1.0, std::abs(sol.costs[i]))) << i;
  }
}

TEST(NashResidual, SinglePlayerOptimumHasNoGap) {
  const auto p = linear_quadratic_problem(1);
  const GameSolution sol = solve(p);
  EXPECT_LT(std::abs(nash_residual(p, sol).front()), 1e-6);
}

TEST(NashResidual, DetectsAProfitableDeviation) {
  const auto p = linear_quadratic_problem(2);
  GameSolution sol = solve(p, exact_config());
  auto controls = sol.trajectory.controls;
  for (auto& u : controls) u(0) += 0.5;
  sol.trajectory = simulate_controls(p.dynamics, p.initial_state, controls, p.dt);
  const auto gap = nash_residual(p, sol, exact_config());
  EXPECT_GT(gap[0], 1e-3);
}

TEST(Rollout, ZeroStrategiesReproduceTheReference) {
  const auto p = linear_quadratic_problem(2);
  OperatingPoint ref = zero_control_op(p);
  for (std::size_t k = 0; k < ref.num_steps(); ++k) ref.controls[k].setConstant(0.3);
  ref = simulate_controls(p.dynamics, p.initial_state, ref.controls, p.dt);
  const auto zero = detail::zero_strategies(p.layout(), p.num_steps());
  const OperatingPoint out = rollout(p.dynamics, zero, ref, 1.0, p.dt);
  EXPECT_EQ(max_gap(out, ref), 0.0);
}

TEST(Rollout, ZeroStepIgnoresFeedforward) {
  const auto p = linear_quadratic_problem(2);
  const OperatingPoint ref = zero_control_op(p);
  testing::Rng rng(7);
  auto strategies = detail::zero_strategies(p.layout(), p.num_steps());
  for (auto& s : strategies) {
    for (std::size_t k = 0; k < p.num_steps(); ++k) {
      s.gains[k] = rng.matrix(2, 8, 1.0);
      s.feedforwards[k] = rng.vector(2, 1.0);
    }
  }
  EXPECT_EQ(max_gap(rollout(p.dynamics, strategies, ref, 0.0, p.dt), ref), 0.0);
}

TEST(Rollout, FullStepFollowsTheAffineLaw) {
  const auto p = linear_quadratic_problem(2);
  const OperatingPoint ref = zero_control_op(p);
  testing::Rng rng(8);
  auto strategies = detail::zero_strategies(p.layout(), p.num_steps());
  for (auto& s : strategies) {
    for (std::size_t k = 0; k < p.num_steps(); ++k) {
      s.gains[k] = rng.matrix(2, 8, 0.1);
      s.feedforwards[k] = rng.vector(2, 1.0);
    }
  }
  const OperatingPoint out = rollout(p.dynamics, strategies, ref, 1.0, p.dt);
  VectorXd x = p.initial_state;
  for (std::size_t k = 0; k < p.num_steps(); ++k) {
    VectorXd u(4);
    for (std::size_t i = 0; i < 2; ++i) {
      u.segment(2 * i, 2) = ref.controls[k].segment(2 * i, 2) -
                            strategies[i].gains[k] * (x - ref.states[k]) -
                            strategies[i].feedforwards[k];
    }
    x = p.dynamics.integrate_step(x, u, p.dt);
    EXPECT_LT((out.states[k + 1] - x).cwiseAbs().maxCoeff(), 1e-12);
  }
}

class OncomingSolve : public ::testing::TestWithParam<double> {};

TEST_P(OncomingSolve, SolutionIsConsistent) {
  const VehicleGame p = build_scenario(default_oncoming_config(GetParam()));
  const GameSolution sol = solve(p);
  EXPECT_TRUE(sol.converged);
  EXPECT_TRUE(sol.feasible);

  // Reported costs belong to the reported trajectory.
  for (std::size_t i = 0; i < p.num_players(); ++i) {
    EXPECT_NEAR(sol.costs[i],
                total_cost(p.costs[i], p.layout(), sol.trajectory, p.dt),
                1e-10 * std::max(1.0, std::abs(sol.costs[i])));
  }
  // The trajectory is a rollout of its own controls.
  const OperatingPoint again =
      simulate_controls(p.dynamics, p.initial_state, sol.trajectory.controls, p.dt);
  EXPECT_LT(max_gap(again, sol.trajectory), 1e-12);

  // Violations never grow once the penalty schedule is under way.
  for (std::size_t k = 2; k < sol.violation_history.size(); ++k) {
    EXPECT_LE(sol.violation_history[k], sol.violation_history[k - 1] + 1e-9);
  }

  const auto gap = nash_residual(p, sol);
  for (std::size_t i = 0; i < gap.size(); ++i) {
    EXPECT_GE(gap[i], 0.0);
    EXPECT_LT(gap[i], 0.01 * std::abs(sol.costs[i]) + 1e-4) << "player " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(TAdv, OncomingSolve, ::testing::Values(0.0, 1.0, 5.0));

TEST(Solve, IsDeterministic) {
  const VehicleGame p = build_scenario(default_oncoming_config(1.0));
  const GameSolution a = solve(p), b = solve(p);
  ASSERT_EQ(a.trajectory.states.size(), b.trajectory.states.size());
  for (std::size_t k = 0; k < a.trajectory.states.size(); ++k) {
    EXPECT_EQ(a.trajectory.states[k], b.trajectory.states[k]);
  }
  EXPECT_EQ(a.costs, b.costs);
  EXPECT_EQ(a.inner_iterations, b.inner_iterations);
}

TEST(Solve, AdversarialTermsAreInertWithoutAnAdversarialWindow) {
  const ScenarioConfig cfg = default_oncoming_config(0.0);
  const GameSolution split = solve(build_scenario(cfg, BuildMode::kSplitHorizon));
  const GameSolution coop = solve(build_scenario(cfg, BuildMode::kCooperativeOnly));
  for (std::size_t k = 0; k < split.trajectory.states.size(); ++k) {
    ASSERT_EQ(split.trajectory.states[k], coop.trajectory.states[k]) << k;
  }
  EXPECT_EQ(split.costs, coop.costs);
}

TEST(Solve, WarmStartFromASolutionConvergesQuickly) {
  const VehicleGame p = build_scenario(default_oncoming_config(1.0));
  const GameSolution cold = solve(p);
  const GameSolution warm = solve(p, {}, shift_solution(cold, 0));
  EXPECT_TRUE(warm.converged);
  EXPECT_LT(warm.inner_iterations, cold.inner_iterations);
  EXPECT_LT(max_gap(warm.trajectory, cold.trajectory), 0.05);
}

TEST(ShiftSolution, DropsLeadingStepsAndPads) {
  const auto p = linear_quadratic_problem(2);
  const GameSolution sol = solve(p);
  const std::size_t K = p.num_steps(), s = 5;
  const WarmStart ws = shift_solution(sol, s);
  ASSERT_EQ(ws.reference.num_steps(), K);
  for (std::size_t k = 0; k + s <= K; ++k) {
    EXPECT_EQ(ws.reference.states[k], sol.trajectory.states[k + s]);
  }
  for (std::size_t k = K - s; k <= K; ++k) {
    EXPECT_EQ(ws.reference.states[k], sol.trajectory.states[K]);
  }
  for (std::size_t k = K - s; k < K; ++k) {
    EXPECT_EQ(ws.reference.controls[k].norm(), 0.0);
    EXPECT_EQ(ws.strategies[1].gains[k].norm(), 0.0);
  }
  EXPECT_EQ(ws.strategies[1].gains[0], sol.strategies[1].gains[s]);
}

TEST(Solve, WarmStartHorizonMismatchThrows) {
  const auto p = linear_quadratic_problem(2);
  WarmStart ws = shift_solution(solve(p), 0);
  ws.reference.states.pop_back();
  ws.reference.controls.pop_back();
  EXPECT_THROW(solve(p, {}, ws), DimensionError);
}

TEST(GameProblem, ValidateRejectsBadGrids) {
  auto p = linear_quadratic_problem(2);
  p.dt = 0.07;
  EXPECT_THROW(p.validate(), ConfigError);
  p.dt = 0.1;
  p.t_adv = 4.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p.t_adv = 0.0;
  p.costs.pop_back();
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(GameProblem, ProximityMustBeEgoOwned) {
  auto p = linear_quadratic_problem(3);
  Constraint c = Constraint::proximity(1, 1.0);
  c.owner = 2;
  p.constraints.push_back(c);
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Solve, IterationLogReportsEveryInnerStep) {
  const auto p = linear_quadratic_problem(2);
  SolverConfig c = exact_config();
  std::size_t calls = 0;
  c.log = [&](const IterationRecord& r) {
    ++calls;
    EXPECT_EQ(r.costs.size(), 2u);
  };
  const GameSolution sol = solve(p, c);
  EXPECT_EQ(calls, sol.inner_iterations);
}

}  // namespace
}  // namespace dgame
