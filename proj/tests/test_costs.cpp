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

#include "dgame/costs.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace dgame {
namespace {

using testing::Rng;

// Two bicycles and a pedestrian.
VehicleDynamics three_players() {
  return VehicleDynamics({PlayerModel::bicycle(3.0), PlayerModel::bicycle(3.0),
                          PlayerModel::unicycle()});
}

VectorXd positions(const PlayerStateLayout& layout, std::vector<Vec2> p) {
  VectorXd x = VectorXd::Zero(layout.state_dim());
  for (std::size_t i = 0; i < p.size(); ++i) {
    x(layout.px(i)) = p[i].x();
    x(layout.py(i)) = p[i].y();
  }
  return x;
}

TEST(CostTerm, FactoryValidation) {
  EXPECT_THROW(CostTerm::ideal_speed(0, 1.0, -1.0), ConfigError);
  EXPECT_THROW(CostTerm::ideal_speed(0, 1.0, std::nan("")), ConfigError);
  EXPECT_THROW(CostTerm::cooperative_proximity(0, 1, 0.0, 1.0), ConfigError);
  MatrixXd asym(2, 2);
  asym << 1, 2, 0, 1;
  EXPECT_THROW(CostTerm::input_quadratic(0, asym), ConfigError);
  EXPECT_THROW(CostTerm::input_quadratic(0, -MatrixXd::Identity(2, 2)), ConfigError);
  EXPECT_NO_THROW(CostTerm::input_quadratic(0, MatrixXd::Zero(2, 2)));
}

TEST(EvaluateTerm, ProximityIndicatorOff) {
  const auto dyn = three_players();
  const auto term = CostTerm::cooperative_proximity(0, 1, 5.0, 3.0);
  EXPECT_EQ(evaluate_term(term, dyn.layout(), positions(dyn.layout(), {{0, 0}, {6, 0}, {50, 50}}),
                          VectorXd::Zero(6)),
            0.0);
}

TEST(EvaluateTerm, ProximityInside) {
  const auto dyn = three_players();
  const auto term = CostTerm::cooperative_proximity(0, 1, 10.0, 1.0);
  EXPECT_DOUBLE_EQ(evaluate_term(term, dyn.layout(),
                                 positions(dyn.layout(), {{0, 0}, {0, 6}, {50, 50}}),
                                 VectorXd::Zero(6)),
                   16.0);
}

TEST(EvaluateTerm, AdversarialAttract) {
  const auto dyn = three_players();
  const auto term = CostTerm::adversarial(1, 0, 2.0);
  EXPECT_DOUBLE_EQ(evaluate_term(term, dyn.layout(),
                                 positions(dyn.layout(), {{3, 4}, {0, 0}, {50, 50}}),
                                 VectorXd::Zero(6)),
                   50.0);
}

TEST(EvaluateTerm, AdversarialRepelClipped) {
  const auto dyn = three_players();
  const auto near = CostTerm::adversarial(1, 0, 2.0, AdversarialForm::kRepelClipped, 30.0);
  EXPECT_DOUBLE_EQ(evaluate_term(near, dyn.layout(),
                                 positions(dyn.layout(), {{3, 4}, {0, 0}, {50, 50}}),
                                 VectorXd::Zero(6)),
                   -50.0);
  EXPECT_DOUBLE_EQ(evaluate_term(near, dyn.layout(),
                                 positions(dyn.layout(), {{300, 400}, {0, 0}, {50, 50}}),
                                 VectorXd::Zero(6)),
                   -2.0 * 900.0);
}

TEST(EvaluateTerm, LaneSpeedInput) {
  const auto dyn = three_players();
  const auto& layout = dyn.layout();
  VectorXd x = positions(layout, {{3, 7}, {0, 0}, {0, 0}});
  x(layout.speed(0)) = 12.0;
  VectorXd u = VectorXd::Zero(6);
  u(0) = 1.0;
  u(1) = 2.0;
  const LaneCenterline lane({Vec2(0, -50), Vec2(0, 50)});
  EXPECT_DOUBLE_EQ(evaluate_term(CostTerm::lane_center(0, lane, 2.0), layout, x, u), 18.0);
  EXPECT_DOUBLE_EQ(evaluate_term(CostTerm::ideal_speed(0, 10.0, 0.5), layout, x, u), 2.0);
  MatrixXd R(2, 2);
  R << 2, 1, 1, 3;
  // u' R u = 2 + 4 + 12 = 18
  EXPECT_DOUBLE_EQ(evaluate_term(CostTerm::input_quadratic(0, R, 0.5), layout, x, u), 9.0);
  EXPECT_DOUBLE_EQ(evaluate_term(CostTerm::input_quadratic(1, R, 0.5), layout, x, u), 0.0);
}

SplitHorizonCost split_cost(double t_adv) {
  SplitHorizonCost c;
  c.player = 1;
  c.adversarial = {CostTerm::adversarial(1, 0, 2.0),
                   CostTerm::input_quadratic(1, MatrixXd::Identity(2, 2))};
  c.cooperative = {CostTerm::ideal_speed(1, 10.0, 1.0),
                   CostTerm::input_quadratic(1, MatrixXd::Identity(2, 2), 3.0)};
  c.t_adv = t_adv;
  return c;
}

OperatingPoint random_trajectory(Rng& rng, const VehicleDynamics& dyn, std::size_t K) {
  OperatingPoint op;
  for (std::size_t k = 0; k <= K; ++k) {
    op.states.push_back(testing::random_vehicle_state(rng, dyn));
    if (k < K) op.controls.push_back(rng.vector(dyn.layout().control_dim()));
  }
  return op;
}

TEST(RunningCost, HalfOpenBranchSelection) {
  Rng rng(21);
  const auto dyn = three_players();
  const auto cost = split_cost(1.0);
  const VectorXd x = testing::random_vehicle_state(rng, dyn);
  const VectorXd u = rng.vector(6);
  const double adv = running_cost_in_phase(cost, Phase::kAdversarial, dyn.layout(), x, u);
  const double coop = running_cost_in_phase(cost, Phase::kCooperative, dyn.layout(), x, u);
  ASSERT_NE(adv, coop);
  EXPECT_EQ(running_cost(cost, dyn.layout(), 0.0, x, u), adv);
  EXPECT_EQ(running_cost(cost, dyn.layout(), 0.999, x, u), adv);
  EXPECT_EQ(running_cost(cost, dyn.layout(), 1.0, x, u), coop);
  EXPECT_EQ(running_cost(cost, dyn.layout(), 5.0, x, u), coop);
}

TEST(RunningCost, NoLeakFromInactiveBranch) {
  Rng rng(22);
  const auto dyn = three_players();
  auto cost = split_cost(1.0);
  const VectorXd x = testing::random_vehicle_state(rng, dyn);
  const VectorXd u = rng.vector(6);
  const double before = running_cost(cost, dyn.layout(), 0.5, x, u);
  cost.cooperative.push_back(CostTerm::ideal_speed(1, 0.0, 1e6));
  EXPECT_EQ(running_cost(cost, dyn.layout(), 0.5, x, u), before);
  cost.adversarial.push_back(CostTerm::ideal_speed(1, 0.0, 1e6));
  const double after = running_cost(cost, dyn.layout(), 2.0, x, u);
  cost.adversarial.pop_back();
  EXPECT_EQ(running_cost(cost, dyn.layout(), 2.0, x, u), after);
}

TEST(TotalCost, ZeroAdversarialHorizonIsCooperative) {
  Rng rng(23);
  const auto dyn = three_players();
  const auto op = random_trajectory(rng, dyn, 40);
  auto coop_only = split_cost(0.0);
  coop_only.adversarial.clear();
  EXPECT_EQ(total_cost(split_cost(0.0), dyn.layout(), op, 0.1),
            total_cost(coop_only, dyn.layout(), op, 0.1));
}

TEST(TotalCost, FullAdversarialHorizon) {
  Rng rng(24);
  const auto dyn = three_players();
  const auto op = random_trajectory(rng, dyn, 40);
  auto adv_only = split_cost(0.0);
  adv_only.cooperative = adv_only.adversarial;
  EXPECT_EQ(total_cost(split_cost(4.0), dyn.layout(), op, 0.1),
            total_cost(adv_only, dyn.layout(), op, 0.1));
}

TEST(TotalCost, SplitEqualsTwoPassSum) {
  Rng rng(25);
  const auto dyn = three_players();
  const auto op = random_trajectory(rng, dyn, 40);
  const auto cost = split_cost(1.5);
  double adv = 0.0, coop = 0.0;
  for (std::size_t k = 0; k < 15; ++k) {
    for (const auto& t : cost.adversarial) adv += evaluate_term(t, dyn.layout(), op.states[k], op.controls[k]);
  }
  for (std::size_t k = 15; k < 40; ++k) {
    for (const auto& t : cost.cooperative) coop += evaluate_term(t, dyn.layout(), op.states[k], op.controls[k]);
  }
  EXPECT_NEAR(total_cost(cost, dyn.layout(), op, 0.1), 0.1 * (adv + coop),
              1e-12 * std::abs(0.1 * (adv + coop)));
}

TEST(TotalCost, AdditiveOverPartitions) {
  Rng rng(26);
  const auto dyn = three_players();
  const auto op = random_trajectory(rng, dyn, 40);
  const auto cost = split_cost(1.5);
  const double whole = partial_cost(cost, dyn.layout(), op, 0.1, 15, 0, 40);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t a = static_cast<std::size_t>(rng.integer(0, 40));
    std::size_t b = static_cast<std::size_t>(rng.integer(0, 40));
    if (a > b) std::swap(a, b);
    const double parts = partial_cost(cost, dyn.layout(), op, 0.1, 15, 0, a) +
                         partial_cost(cost, dyn.layout(), op, 0.1, 15, a, b) +
                         partial_cost(cost, dyn.layout(), op, 0.1, 15, b, 40);
    EXPECT_NEAR(parts, whole, 1e-10 * std::abs(whole));
  }
}

TEST(TotalCost, OffGridSwitchRoundsWithWarning) {
  Rng rng(27);
  const auto dyn = three_players();
  const auto op = random_trajectory(rng, dyn, 40);
  std::ostringstream captured;
  auto* old = std::clog.rdbuf(captured.rdbuf());
  const double rounded = total_cost(split_cost(1.04), dyn.layout(), op, 0.1);
  std::clog.rdbuf(old);
  EXPECT_EQ(rounded, total_cost(split_cost(1.0), dyn.layout(), op, 0.1));
  EXPECT_NE(captured.str().find("not a multiple of dt"), std::string::npos);
  EXPECT_TRUE(switch_index(1.04, 0.1).rounded);
  EXPECT_FALSE(switch_index(1.0, 0.1).rounded);
  EXPECT_EQ(switch_index(1.0, 0.1).index, 10u);
}

TEST(TotalCost, RejectsMalformedTrajectory) {
  OperatingPoint op;
  op.states = {VectorXd::Zero(16)};
  op.controls = {VectorXd::Zero(6)};
  EXPECT_THROW(total_cost(split_cost(0.0), three_players().layout(), op, 0.1), DimensionError);
}

TEST(Quadraticize, IdealSpeedAtReference) {
  const auto dyn = three_players();
  const auto& layout = dyn.layout();
  VectorXd x = VectorXd::Zero(layout.state_dim());
  x(layout.speed(1)) = 7.0;
  const auto cost = SplitHorizonCost::single(1, {CostTerm::ideal_speed(1, 7.0, 0.5)});
  const auto q = quadraticize(cost, layout, 0.0, x, VectorXd::Zero(6));
  EXPECT_EQ(q.l, VectorXd::Zero(layout.state_dim()));
  EXPECT_DOUBLE_EQ(q.Q(layout.speed(1), layout.speed(1)), 1.0 + kDefaultCostRegularization);
}

TEST(Quadraticize, InputQuadraticExact) {
  Rng rng(28);
  const auto dyn = three_players();
  const MatrixXd R = rng.pd(2);
  const VectorXd u = rng.vector(6);
  const auto cost = SplitHorizonCost::single(2, {CostTerm::input_quadratic(2, R)});
  const auto q = quadraticize(cost, dyn.layout(), 0.0, VectorXd::Zero(16), u);
  EXPECT_LT((q.R[2] - 2.0 * R).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((q.r[2] - 2.0 * R * u.segment(4, 2)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(q.R[0], MatrixXd::Zero(2, 2));
}

TEST(Quadraticize, TermGradientsMatchFiniteDifferences) {
  Rng rng(29);
  const auto dyn = three_players();
  const auto& layout = dyn.layout();
  const LaneCenterline bent({Vec2(0, -40), Vec2(0, 0), Vec2(30, 25)});
  int checked = 0;
  double worst = 0.0;
  while (checked < 100) {
    VectorXd x = testing::random_vehicle_state(rng, dyn);
    // Bring the players close enough for the proximity hinge to be active
    // about half the time.
    x.segment<2>(layout.px(1)) = layout.position(x, 0) + rng.vector(2, 4.0);
    const VectorXd u = rng.vector(6);
    const double d01 = (layout.position(x, 0) - layout.position(x, 1)).norm();
    if (std::abs(d01 - 6.0) < 1e-2 || d01 < 1e-2) continue;
    if (testing::near_lane_kink(bent, layout.position(x, 2), 0.1)) continue;
    const std::vector<CostTerm> terms{
        CostTerm::lane_center(2, bent, 1.3),
        CostTerm::ideal_speed(1, 8.0, 0.7),
        CostTerm::cooperative_proximity(0, 1, 6.0, 5.0),
        CostTerm::adversarial(1, 0, 0.4),
        CostTerm::adversarial(1, 0, 0.4, AdversarialForm::kRepelClipped, 30.0),
        CostTerm::input_quadratic(0, rng.pd(2), 2.0)};
    for (const auto& t : terms) {
      const double e = testing::term_gradient_error(t, layout, x, u);
      worst = std::max(worst, e);
      EXPECT_LT(e, 1e-4) << "kind " << static_cast<int>(t.kind);
    }
    ++checked;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Quadraticize, ProjectedBlocksArePsd) {
  Rng rng(30);
  const auto dyn = three_players();
  const auto& layout = dyn.layout();
  SplitHorizonCost cost;
  cost.player = 1;
  cost.adversarial = {CostTerm::adversarial(1, 0, 5.0, AdversarialForm::kRepelClipped, 30.0),
                      CostTerm::cooperative_proximity(1, 2, 8.0, 3.0),
                      CostTerm::input_quadratic(1, rng.psd(2))};
  cost.cooperative = cost.adversarial;
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd x = testing::random_vehicle_state(rng, dyn);
    x.segment<2>(layout.px(2)) = layout.position(x, 1) + rng.vector(2, 3.0);
    const auto q = quadraticize(cost, layout, 0.0, x, rng.vector(6));
    EXPECT_TRUE(q.Q.isApprox(q.Q.transpose()));
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(q.Q).eigenvalues().minCoeff(), -1e-10);
    for (const auto& R : q.R) {
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(R).eigenvalues().minCoeff(), -1e-10);
    }
  }
}

TEST(Quadraticize, RepelHessianIsNegativeBeforeProjection) {
  const auto dyn = three_players();
  const auto& layout = dyn.layout();
  QuadraticCostModel m = QuadraticCostModel::zero(layout);
  const VectorXd x = positions(layout, {{3, 4}, {0, 0}, {50, 50}});
  const bool psd = accumulate_term(CostTerm::adversarial(1, 0, 1.0, AdversarialForm::kRepelClipped),
                                   layout, x, VectorXd::Zero(6), 1.0, m);
  EXPECT_FALSE(psd);
  EXPECT_DOUBLE_EQ(m.Q(layout.px(1), layout.px(1)), -2.0);
  finalize_quadratic_model(m, true, 0.0);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(m.Q).eigenvalues().minCoeff(), -1e-12);
}

TEST(Quadraticize, NonFiniteDerivativesThrow) {
  const auto dyn = three_players();
  QuadraticCostModel m = QuadraticCostModel::zero(dyn.layout());
  m.l(0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(finalize_quadratic_model(m, false, 0.0), NonFiniteError);
}

TEST(SplitHorizonCost, SingleIsNeverSplit) {
  const auto c = SplitHorizonCost::single(0, {CostTerm::ideal_speed(0, 1.0, 1.0)});
  EXPECT_TRUE(c.adversarial.empty());
  EXPECT_EQ(c.t_adv, 0.0);
  EXPECT_EQ(c.phase_at(0.0), Phase::kCooperative);
}

}  // namespace
}  // namespace dgame
