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

#ifndef DGAME_COSTS_HPP_
#define DGAME_COSTS_HPP_

// Running-cost primitives and the split-horizon cost that switches a
// non-ego agent from its adversarial terms to its cooperative terms at T_adv.

#include "dgame/common.hpp"
#include "dgame/dynamics.hpp"
#include "dgame/geometry.hpp"
#include "dgame/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

namespace dgame {

enum class CostKind {
  kLaneCenter,
  kIdealSpeed,
  kCooperativeProximity,
  kAdversarial,
  kInputQuadratic,
};

/// How the adversarial term is signed.
///  kAttract:      w ||p_i - p_j||^2, minimized by closing the distance.
///  kRepelClipped: -w min(||p_i - p_j||^2, d_clip^2).
enum class AdversarialForm { kAttract, kRepelClipped };

inline constexpr double kDefaultAdversarialClip = 30.0;  // m
inline constexpr double kProximityCurvatureBand = 0.5;  // m

struct CostTerm {
  CostKind kind = CostKind::kInputQuadratic;
  double weight = 1.0;
  PlayerIndex player = 0;  // whose state/control the term reads
  PlayerIndex other = 0;   // paired player (proximity / adversarial)
  LaneCenterline lane;
  double v_ref = 0.0;
  double d_prox = 1.0;
  double d_clip = kDefaultAdversarialClip;
  AdversarialForm form = AdversarialForm::kAttract;
  MatrixXd R;

  static CostTerm lane_center(PlayerIndex i, LaneCenterline lane, double w) {
    CostTerm t = base(CostKind::kLaneCenter, i, w);
    t.lane = std::move(lane);
    return t;
  }
  static CostTerm ideal_speed(PlayerIndex i, double v_ref, double w) {
    CostTerm t = base(CostKind::kIdealSpeed, i, w);
    t.v_ref = v_ref;
    return t;
  }
  static CostTerm cooperative_proximity(PlayerIndex i, PlayerIndex j,
                                        double d_prox, double w) {
    if (!(d_prox > 0.0)) throw ConfigError("d_prox must be positive");
    CostTerm t = base(CostKind::kCooperativeProximity, i, w);
    t.other = j;
    t.d_prox = d_prox;
    return t;
  }
  static CostTerm adversarial(PlayerIndex i, PlayerIndex target, double w,
                              AdversarialForm form = AdversarialForm::kAttract,
                              double d_clip = kDefaultAdversarialClip) {
    CostTerm t = base(CostKind::kAdversarial, i, w);
    t.other = target;
    t.form = form;
    t.d_clip = d_clip;
    return t;
  }
  static CostTerm input_quadratic(PlayerIndex i, MatrixXd R, double w = 1.0) {
    if (R.rows() != R.cols() || !R.isApprox(R.transpose())) {
      throw ConfigError("input weight matrix must be square and symmetric");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(R);
    if (eig.eigenvalues().minCoeff() < -1e-12) {
      throw ConfigError("input weight matrix must be positive semidefinite");
    }
    CostTerm t = base(CostKind::kInputQuadratic, i, w);
    t.R = std::move(R);
    return t;
  }

  bool operator==(const CostTerm& o) const {
    return kind == o.kind && weight == o.weight && player == o.player &&
           other == o.other && lane == o.lane && v_ref == o.v_ref &&
           d_prox == o.d_prox && d_clip == o.d_clip && form == o.form &&
           R.rows() == o.R.rows() && R.cols() == o.R.cols() && R == o.R;
  }

 private:
  static CostTerm base(CostKind kind, PlayerIndex i, double w) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("cost weight must be finite and nonnegative");
    }
    CostTerm t;
    t.kind = kind;
    t.player = i;
    t.weight = w;
    return t;
  }
};

/// Second-order model of one player's cost in (x, u_1..u_N).
/// cost ~ 1/2 x'Qx + l'x + sum_j (1/2 u_j' R_j u_j + r_j' u_j).
struct QuadraticCostModel {
  MatrixXd Q;
  VectorXd l;
  std::vector<MatrixXd> R;
  std::vector<VectorXd> r;

  static QuadraticCostModel zero(const PlayerStateLayout& layout) {
    QuadraticCostModel m;
    const auto n = layout.state_dim();
    m.Q = MatrixXd::Zero(n, n);
    m.l = VectorXd::Zero(n);
    for (std::size_t j = 0; j < layout.num_players(); ++j) {
      const auto mj = layout.block(j).control_dim;
      m.R.push_back(MatrixXd::Zero(mj, mj));
      m.r.push_back(VectorXd::Zero(mj));
    }
    return m;
  }
};

namespace detail {

inline void add_pair_hessian(MatrixXd& Q, Eigen::Index ix, Eigen::Index jx,
                             const Mat2& H) {
  // Hessian of h(p_i - p_j) w.r.t. (p_i, p_j) is [H -H; -H H].
  Q.block<2, 2>(ix, ix) += H;
  Q.block<2, 2>(jx, jx) += H;
  Q.block<2, 2>(ix, jx) -= H;
  Q.block<2, 2>(jx, ix) -= H;
}

}  // namespace detail

/// Value of a single weighted term.
inline double evaluate_term(const CostTerm& term,
                            const PlayerStateLayout& layout,
                            const VectorXd& x, const VectorXd& u) {
  const PlayerIndex i = term.player;
  switch (term.kind) {
    case CostKind::kLaneCenter: {
      const double d = distance_to_lane(term.lane, layout.position(x, i)).distance;
      return term.weight * d * d;
    }
    case CostKind::kIdealSpeed: {
      const double dv = x(layout.speed(i)) - term.v_ref;
      return term.weight * dv * dv;
    }
    case CostKind::kCooperativeProximity: {
      const double d =
          (layout.position(x, i) - layout.position(x, term.other)).norm();
      if (d >= term.d_prox) return 0.0;
      return term.weight * (term.d_prox - d) * (term.d_prox - d);
    }
    case CostKind::kAdversarial: {
      const double d2 =
          (layout.position(x, i) - layout.position(x, term.other)).squaredNorm();
      if (term.form == AdversarialForm::kAttract) return term.weight * d2;
      return -term.weight * std::min(d2, term.d_clip * term.d_clip);
    }
    case CostKind::kInputQuadratic: {
      const VectorXd ui = layout.player_control(u, i);
      return term.weight * ui.dot(term.R * ui);
    }
  }
  return 0.0;
}

/// Adds scale * (gradient, Gauss-Newton Hessian) of one term to `model`.
/// Returns false if the added Hessian may be indefinite.
inline bool accumulate_term(const CostTerm& term,
                            const PlayerStateLayout& layout, const VectorXd& x,
                            const VectorXd& u, double scale,
                            QuadraticCostModel& model) {
  const PlayerIndex i = term.player;
  const double w = scale * term.weight;
  switch (term.kind) {
    case CostKind::kLaneCenter: {
      const auto d = lane_cost_gradient(term.lane, layout.position(x, i));
      const auto ix = layout.px(i);
      model.l.segment<2>(ix) += w * d.gradient;
      model.Q.block<2, 2>(ix, ix) += w * d.hessian;
      return true;
    }
    case CostKind::kIdealSpeed: {
      const auto iv = layout.speed(i);
      model.l(iv) += 2.0 * w * (x(iv) - term.v_ref);
      model.Q(iv, iv) += 2.0 * w;
      return true;
    }
    case CostKind::kCooperativeProximity: {
      const Vec2 delta = layout.position(x, i) - layout.position(x, term.other);
      const double d = delta.norm();
      // Curvature is kept on a thin band outside the hinge so the active set
      // does not chatter between iterations; the gradient there is zero, so
      // stationary points are unchanged.
      if (d >= term.d_prox + kProximityCurvatureBand || d < 1e-9) return true;
      const Vec2 n = delta / d;
      const Vec2 g = -2.0 * w * std::max(term.d_prox - d, 0.0) * n;
      model.l.segment<2>(layout.px(i)) += g;
      model.l.segment<2>(layout.px(term.other)) -= g;
      detail::add_pair_hessian(model.Q, layout.px(i), layout.px(term.other),
                               2.0 * w * n * n.transpose());
      return true;
    }
    case CostKind::kAdversarial: {
      const Vec2 delta = layout.position(x, i) - layout.position(x, term.other);
      double sign = 1.0;
      if (term.form == AdversarialForm::kRepelClipped) {
        if (delta.squaredNorm() >= term.d_clip * term.d_clip) return true;
        sign = -1.0;
      }
      const Vec2 g = sign * 2.0 * w * delta;
      model.l.segment<2>(layout.px(i)) += g;
      model.l.segment<2>(layout.px(term.other)) -= g;
      detail::add_pair_hessian(model.Q, layout.px(i), layout.px(term.other),
                               sign * 2.0 * w * Mat2::Identity());
      return sign > 0.0;
    }
    case CostKind::kInputQuadratic: {
      const VectorXd ui = layout.player_control(u, i);
      model.r[i] += 2.0 * w * term.R * ui;
      model.R[i] += 2.0 * w * term.R;
      return true;
    }
  }
  return true;
}

/// Projects Q and every R_j block onto the PSD cone (negative eigenvalues
/// clamped to zero) when needed, then adds eps to the diagonal of Q.
inline void finalize_quadratic_model(QuadraticCostModel& model,
                                     bool maybe_indefinite, double eps) {
  auto project = [](MatrixXd& M) {
    if (M.size() == 0) return;
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M);
    if (eig.eigenvalues().minCoeff() >= 0.0) return;
    const VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
    M = eig.eigenvectors() * clamped.asDiagonal() *
        eig.eigenvectors().transpose();
    M = 0.5 * (M + M.transpose()).eval();
  };
  if (maybe_indefinite) {
    project(model.Q);
    for (auto& Rj : model.R) project(Rj);
  }
  model.Q.diagonal().array() += eps;
  if (!model.Q.allFinite() || !model.l.allFinite()) {
    throw NonFiniteError("non-finite cost derivatives");
  }
}

inline constexpr double kDefaultCostRegularization = 1e-4;

/// One player's running cost, split at T_adv into an adversarial branch on
/// [0, T_adv) and a cooperative branch on [T_adv, T]. The ego keeps a single
/// term list (stored as `cooperative`, with T_adv = 0).
struct SplitHorizonCost {
  PlayerIndex player = 0;
  std::vector<CostTerm> adversarial;
  std::vector<CostTerm> cooperative;
  double t_adv = 0.0;

  static SplitHorizonCost single(PlayerIndex i, std::vector<CostTerm> terms) {
    SplitHorizonCost c;
    c.player = i;
    c.cooperative = std::move(terms);
    return c;
  }

  Phase phase_at(double t) const {
    return t < t_adv ? Phase::kAdversarial : Phase::kCooperative;
  }
  const std::vector<CostTerm>& terms(Phase p) const {
    return p == Phase::kAdversarial ? adversarial : cooperative;
  }

  bool operator==(const SplitHorizonCost&) const = default;
};

inline double running_cost_in_phase(const SplitHorizonCost& cost, Phase phase,
                                    const PlayerStateLayout& layout,
                                    const VectorXd& x, const VectorXd& u) {
  double total = 0.0;
  for (const auto& term : cost.terms(phase)) {
    total += evaluate_term(term, layout, x, u);
  }
  return total;
}

/// g_i(t, x, u): the adversarial sum when t < T_adv, else the cooperative sum.
inline double running_cost(const SplitHorizonCost& cost,
                           const PlayerStateLayout& layout, double t,
                           const VectorXd& x, const VectorXd& u) {
  return running_cost_in_phase(cost, cost.phase_at(t), layout, x, u);
}

/// Left-endpoint Riemann sum of the running cost over [k_begin, k_end).
inline double partial_cost(const SplitHorizonCost& cost,
                           const PlayerStateLayout& layout,
                           const OperatingPoint& traj, double dt,
                           std::size_t switch_idx, std::size_t k_begin,
                           std::size_t k_end) {
  double total = 0.0;
  for (std::size_t k = k_begin; k < k_end; ++k) {
    total += running_cost_in_phase(cost, phase_at_step(k, switch_idx), layout,
                                   traj.states[k], traj.controls[k]);
  }
  return dt * total;
}

/// J_i over the whole trajectory; the branch switches at grid index
/// round(T_adv / dt). Warns on stderr when T_adv is off-grid.
inline double total_cost(const SplitHorizonCost& cost,
                         const PlayerStateLayout& layout,
                         const OperatingPoint& traj, double dt) {
  if (traj.states.size() != traj.controls.size() + 1) {
    throw DimensionError("trajectory needs exactly one more state than controls");
  }
  const SwitchIndex s = switch_index(cost.t_adv, dt);
  if (s.rounded) {
    std::clog << "warning: T_adv = " << cost.t_adv
              << " s is not a multiple of dt; switching at step " << s.index
              << "\n";
  }
  return partial_cost(cost, layout, traj, dt, s.index, 0, traj.num_steps());
}

/// Accumulates the active branch's derivatives, scaled, without finalizing.
inline bool accumulate_phase(const SplitHorizonCost& cost, Phase phase,
                             const PlayerStateLayout& layout,
                             const VectorXd& x, const VectorXd& u,
                             double scale, QuadraticCostModel& model) {
  bool psd = true;
  for (const auto& term : cost.terms(phase)) {
    psd = accumulate_term(term, layout, x, u, scale, model) && psd;
  }
  return psd;
}

/// Gradient and projected Gauss-Newton Hessian of g_i at (t, x, u).
inline QuadraticCostModel quadraticize(
    const SplitHorizonCost& cost, const PlayerStateLayout& layout, double t,
    const VectorXd& x, const VectorXd& u,
    double eps = kDefaultCostRegularization) {
  QuadraticCostModel model = QuadraticCostModel::zero(layout);
  const bool psd =
      accumulate_phase(cost, cost.phase_at(t), layout, x, u, 1.0, model);
  finalize_quadratic_model(model, !psd, eps);
  return model;
}

}  // namespace dgame

#endif  // DGAME_COSTS_HPP_
