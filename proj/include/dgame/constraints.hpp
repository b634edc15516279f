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

#ifndef DGAME_CONSTRAINTS_HPP_
#define DGAME_CONSTRAINTS_HPP_

// Inequality constraints g(x) <= 0 and their Powell-Hestenes-Rockafellar
// augmented-Lagrangian treatment.

#include "dgame/common.hpp"
#include "dgame/dynamics.hpp"
#include "dgame/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace dgame {

enum class ConstraintKind { kProximity, kLaneHalfWidth, kSpeedRange };

struct Constraint {
  ConstraintKind kind = ConstraintKind::kSpeedRange;
  PlayerIndex owner = 0;  // whose cost absorbs the penalty
  PlayerIndex other = 0;  // proximity partner
  double d_prox = 1.0;
  LaneCenterline lane;
  double d_lane = 1.0;
  double v_lo = 0.0;
  double v_hi = 1.0;

  /// Keeps the ego (player 0) at least d_prox from player j.
  static Constraint proximity(PlayerIndex j, double d_prox) {
    if (!(d_prox > 0.0)) throw ConfigError("d_prox must be positive");
    if (j == 0) throw ConfigError("proximity partner must be a non-ego player");
    Constraint c;
    c.kind = ConstraintKind::kProximity;
    c.owner = 0;
    c.other = j;
    c.d_prox = d_prox;
    return c;
  }
  static Constraint lane_half_width(PlayerIndex i, LaneCenterline lane,
                                    double d_lane) {
    if (!(d_lane > 0.0)) throw ConfigError("d_lane must be positive");
    Constraint c;
    c.kind = ConstraintKind::kLaneHalfWidth;
    c.owner = i;
    c.lane = std::move(lane);
    c.d_lane = d_lane;
    return c;
  }
  static Constraint speed_range(PlayerIndex i, double v_lo, double v_hi) {
    if (!(v_lo < v_hi)) throw ConfigError("speed range needs v_lo < v_hi");
    Constraint c;
    c.kind = ConstraintKind::kSpeedRange;
    c.owner = i;
    c.v_lo = v_lo;
    c.v_hi = v_hi;
    return c;
  }

  bool operator==(const Constraint&) const = default;
};

/// g(x); feasible iff g <= 0.
inline double violation(const Constraint& c, const PlayerStateLayout& layout,
                        const VectorXd& x) {
  switch (c.kind) {
    case ConstraintKind::kProximity:
      return c.d_prox -
             (layout.position(x, 0) - layout.position(x, c.other)).norm();
    case ConstraintKind::kLaneHalfWidth:
      return std::abs(
                 distance_to_lane(c.lane, layout.position(x, c.owner)).distance) -
             c.d_lane;
    case ConstraintKind::kSpeedRange: {
      const double v = x(layout.speed(c.owner));
      return std::max(c.v_lo - v, v - c.v_hi);
    }
  }
  return 0.0;
}

/// g(x) together with its gradient w.r.t. the joint state.
struct ViolationDerivative {
  double value = 0.0;
  VectorXd gradient;
};

inline ViolationDerivative violation_derivative(const Constraint& c,
                                                const PlayerStateLayout& layout,
                                                const VectorXd& x) {
  ViolationDerivative out;
  out.gradient = VectorXd::Zero(layout.state_dim());
  switch (c.kind) {
    case ConstraintKind::kProximity: {
      const Vec2 delta = layout.position(x, 0) - layout.position(x, c.other);
      const double d = delta.norm();
      out.value = c.d_prox - d;
      if (d > 1e-9) {
        const Vec2 n = delta / d;
        out.gradient.segment<2>(layout.px(0)) = -n;
        out.gradient.segment<2>(layout.px(c.other)) = n;
      }
      break;
    }
    case ConstraintKind::kLaneHalfWidth: {
      const Vec2 p = layout.position(x, c.owner);
      const LaneProjection proj = distance_to_lane(c.lane, p);
      out.value = proj.distance - c.d_lane;
      if (proj.distance > 1e-9) {
        out.gradient.segment<2>(layout.px(c.owner)) =
            (p - proj.foot) / proj.distance;
      }
      break;
    }
    case ConstraintKind::kSpeedRange: {
      const auto iv = layout.speed(c.owner);
      const double lo = c.v_lo - x(iv), hi = x(iv) - c.v_hi;
      // Ties go to the upper branch.
      if (lo > hi) {
        out.value = lo;
        out.gradient(iv) = -1.0;
      } else {
        out.value = hi;
        out.gradient(iv) = 1.0;
      }
      break;
    }
  }
  return out;
}

/// Penalty value and its first two derivatives with respect to g.
struct PenaltyTerms {
  double value = 0.0;
  double d_dg = 0.0;
  double d2_dg2 = 0.0;
};

/// PHR inequality penalty:
///   lambda g + mu/2 g^2   if lambda + mu g > 0,
///   -lambda^2 / (2 mu)    otherwise.
inline PenaltyTerms al_penalty(double lambda, double mu, double g) {
  PenaltyTerms p;
  if (lambda + mu * g > 0.0) {
    p.value = lambda * g + 0.5 * mu * g * g;
    p.d_dg = lambda + mu * g;
    p.d2_dg2 = mu;
  } else {
    p.value = lambda == 0.0 ? 0.0 : -lambda * lambda / (2.0 * mu);
  }
  return p;
}

inline constexpr double kInitialPenalty = 10.0;
inline constexpr double kPenaltyGrowth = 10.0;
inline constexpr double kMaxPenalty = 1e6;

/// Lagrange multipliers, one per (constraint, grid point), and the shared
/// penalty coefficient.
struct MultiplierState {
  std::vector<std::vector<double>> lambda;  // [constraint][timestep]
  double mu = kInitialPenalty;
  // Max violation seen at the previous update; drives the penalty schedule.
  double last_max_violation = std::numeric_limits<double>::infinity();

  static MultiplierState zeros(std::size_t num_constraints,
                               std::size_t num_points,
                               double mu0 = kInitialPenalty) {
    MultiplierState s;
    s.lambda.assign(num_constraints, std::vector<double>(num_points, 0.0));
    s.mu = mu0;
    return s;
  }

  bool operator==(const MultiplierState&) const = default;
};

inline double max_positive(const std::vector<std::vector<double>>& g) {
  double worst = 0.0;
  for (const auto& row : g) {
    for (double v : row) worst = std::max(worst, v);
  }
  return worst;
}

/// lambda <- max(0, lambda + mu g); mu grows by kPenaltyGrowth (capped at
/// kMaxPenalty) whenever the max violation did not at least halve.
inline MultiplierState update_multipliers(
    const MultiplierState& state,
    const std::vector<std::vector<double>>& violations,
    double growth = kPenaltyGrowth, double mu_max = kMaxPenalty) {
  if (violations.size() != state.lambda.size()) {
    throw DimensionError("update_multipliers: constraint count mismatch");
  }
  MultiplierState next = state;
  for (std::size_t c = 0; c < violations.size(); ++c) {
    if (violations[c].size() != state.lambda[c].size()) {
      throw DimensionError("update_multipliers: timestep count mismatch");
    }
    for (std::size_t k = 0; k < violations[c].size(); ++k) {
      next.lambda[c][k] =
          std::max(0.0, state.lambda[c][k] + state.mu * violations[c][k]);
    }
  }
  const double worst = max_positive(violations);
  if (worst > 0.0 && worst > 0.5 * state.last_max_violation) {
    next.mu = std::min(state.mu * growth, mu_max);
  }
  next.last_max_violation = worst;
  return next;
}

}  // namespace dgame

#endif  // DGAME_CONSTRAINTS_HPP_
