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

#ifndef DGAME_DYNAMICS_HPP_
#define DGAME_DYNAMICS_HPP_

// Multi-player ground-vehicle dynamics. Each player owns a contiguous block
// of the joint state and of the joint control; the joint system is the
// concatenation of the per-player models and is therefore decoupled across
// players (interaction enters only through costs and constraints).
//
// All models share the heading convention p_x' = v sin(theta),
// p_y' = v cos(theta): theta = 0 points along +y ("North").

#include "dgame/common.hpp"

#include <cmath>
#include <concepts>
#include <string>
#include <vector>

namespace dgame {

/// Where one player's quantities live inside the joint vectors.
struct PlayerBlock {
  Eigen::Index state_offset = 0;
  Eigen::Index state_dim = 0;
  Eigen::Index control_offset = 0;
  Eigen::Index control_dim = 0;

  // Positions of the shared semantic quantities, relative to state_offset.
  Eigen::Index px = 0;
  Eigen::Index py = 1;
  Eigen::Index heading = 2;
  Eigen::Index speed = 3;

  bool operator==(const PlayerBlock&) const = default;
};

class PlayerStateLayout {
 public:
  PlayerStateLayout() = default;

  /// Appends a player whose state/control blocks follow the previous one.
  PlayerIndex add_player(Eigen::Index state_dim, Eigen::Index control_dim) {
    if (state_dim < 4 || control_dim < 1) {
      throw DimensionError("player block needs >= 4 states and >= 1 control");
    }
    PlayerBlock b;
    b.state_offset = n_;
    b.state_dim = state_dim;
    b.control_offset = m_;
    b.control_dim = control_dim;
    blocks_.push_back(b);
    n_ += state_dim;
    m_ += control_dim;
    return blocks_.size() - 1;
  }

  std::size_t num_players() const { return blocks_.size(); }
  Eigen::Index state_dim() const { return n_; }
  Eigen::Index control_dim() const { return m_; }
  const PlayerBlock& block(PlayerIndex i) const { return blocks_.at(i); }

  Eigen::Index px(PlayerIndex i) const {
    return block(i).state_offset + block(i).px;
  }
  Eigen::Index py(PlayerIndex i) const {
    return block(i).state_offset + block(i).py;
  }
  Eigen::Index heading(PlayerIndex i) const {
    return block(i).state_offset + block(i).heading;
  }
  Eigen::Index speed(PlayerIndex i) const {
    return block(i).state_offset + block(i).speed;
  }

  Vec2 position(const VectorXd& x, PlayerIndex i) const {
    return {x(px(i)), x(py(i))};
  }

  auto player_state(const VectorXd& x, PlayerIndex i) const {
    return x.segment(block(i).state_offset, block(i).state_dim);
  }
  auto player_control(const VectorXd& u, PlayerIndex i) const {
    return u.segment(block(i).control_offset, block(i).control_dim);
  }

  bool operator==(const PlayerStateLayout&) const = default;

 private:
  std::vector<PlayerBlock> blocks_;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
};

/// Discrete-time linearization: x+ ~ A x + sum_i B_i u_i.
struct LinearizedDynamics {
  MatrixXd A;
  std::vector<MatrixXd> B;
};

/// Anything the iterative game solver can linearize and roll out.
template <class D>
concept GameDynamics = requires(const D& d, double t, const VectorXd& x,
                                const VectorXd& u, double dt) {
  { d.layout() } -> std::convertible_to<const PlayerStateLayout&>;
  { d.integrate_step(x, u, dt) } -> std::convertible_to<VectorXd>;
  { d.linearize_discretize(t, x, u, dt) } -> std::convertible_to<LinearizedDynamics>;
  { d.state_admissible(x) } -> std::convertible_to<bool>;
};

/// Steering angles at or beyond this magnitude are rejected at linearization.
inline constexpr double kSteeringSingularityGuard = 1.3;  // rad

enum class ModelKind { kBicycle, kUnicycle };

inline std::string to_string(ModelKind k) {
  return k == ModelKind::kBicycle ? "bicycle" : "unicycle";
}

/// Augmented bicycle: state (p_x, p_y, theta, v, phi, a), control (omega, j).
/// Unicycle (pedestrian): state (p_x, p_y, theta, v), control (yaw rate,
/// acceleration).
struct PlayerModel {
  ModelKind kind = ModelKind::kBicycle;
  double wheelbase = 1.0;  // m, bicycle only

  static PlayerModel bicycle(double wheelbase) {
    if (!(wheelbase > 0.0) || !std::isfinite(wheelbase)) {
      throw ConfigError("bicycle wheelbase must be positive");
    }
    return {ModelKind::kBicycle, wheelbase};
  }
  static PlayerModel unicycle() { return {ModelKind::kUnicycle, 0.0}; }

  Eigen::Index state_dim() const { return kind == ModelKind::kBicycle ? 6 : 4; }
  Eigen::Index control_dim() const { return 2; }

  bool operator==(const PlayerModel&) const = default;
};

namespace bicycle_index {
inline constexpr Eigen::Index kPx = 0, kPy = 1, kTheta = 2, kV = 3, kPhi = 4,
                              kA = 5;
inline constexpr Eigen::Index kOmega = 0, kJerk = 1;
}  // namespace bicycle_index

/// Concatenation of per-player bicycle/unicycle models.
class VehicleDynamics {
 public:
  VehicleDynamics() = default;
  explicit VehicleDynamics(std::vector<PlayerModel> models)
      : models_(std::move(models)) {
    for (const auto& m : models_) {
      layout_.add_player(m.state_dim(), m.control_dim());
    }
  }

  const PlayerStateLayout& layout() const { return layout_; }
  const std::vector<PlayerModel>& models() const { return models_; }
  std::size_t num_players() const { return models_.size(); }

  /// Continuous-time state derivative. Time-invariant; t is accepted so the
  /// signature matches x' = f(t, x, u).
  VectorXd evaluate(double /*t*/, const VectorXd& x, const VectorXd& u) const {
    check_inputs(x, u);
    VectorXd xdot(x.size());
    for (std::size_t i = 0; i < models_.size(); ++i) {
      const auto& b = layout_.block(i);
      player_derivative(models_[i], x.segment(b.state_offset, b.state_dim),
                        u.segment(b.control_offset, b.control_dim),
                        xdot.segment(b.state_offset, b.state_dim));
    }
    return xdot;
  }

  /// Analytic Jacobians, discretized by forward Euler: A = I + dt df/dx,
  /// B_i = dt df/du_i.
  LinearizedDynamics linearize_discretize(double /*t*/, const VectorXd& x,
                                          const VectorXd& u, double dt) const {
    check_inputs(x, u);
    if (!(dt >= 0.0)) throw Error("linearize_discretize: dt must be >= 0");
    const Eigen::Index n = layout_.state_dim();
    LinearizedDynamics lin;
    lin.A = MatrixXd::Identity(n, n);
    lin.B.reserve(models_.size());
    for (std::size_t i = 0; i < models_.size(); ++i) {
      const auto& b = layout_.block(i);
      const auto xi = x.segment(b.state_offset, b.state_dim);
      MatrixXd Bi = MatrixXd::Zero(n, b.control_dim);
      auto Ablk = lin.A.block(b.state_offset, b.state_offset, b.state_dim,
                              b.state_dim);
      auto Bblk = Bi.block(b.state_offset, 0, b.state_dim, b.control_dim);

      const double theta = xi(2), v = xi(3);
      const double s = std::sin(theta), c = std::cos(theta);
      Ablk(0, 2) += dt * v * c;
      Ablk(0, 3) += dt * s;
      Ablk(1, 2) -= dt * v * s;
      Ablk(1, 3) += dt * c;

      if (models_[i].kind == ModelKind::kBicycle) {
        const double phi = xi(4);
        if (std::abs(phi) >= kSteeringSingularityGuard) {
          throw SingularLinearizationError(
              "steering angle " + std::to_string(phi) + " rad of player " +
              std::to_string(i) + " is too close to the tan() singularity");
        }
        const double L = models_[i].wheelbase;
        const double tp = std::tan(phi), cp = std::cos(phi);
        Ablk(2, 3) += dt * tp / L;
        Ablk(2, 4) += dt * v / (L * cp * cp);
        Ablk(3, 5) += dt;
        Bblk(4, 0) = dt;
        Bblk(5, 1) = dt;
      } else {
        Bblk(2, 0) = dt;
        Bblk(3, 1) = dt;
      }
      lin.B.push_back(std::move(Bi));
    }
    return lin;
  }

  /// Classical RK4 with the control held constant across the step.
  VectorXd integrate_step(const VectorXd& x, const VectorXd& u,
                          double dt) const {
    if (!(dt > 0.0)) throw Error("integrate_step: dt must be > 0");
    const VectorXd k1 = evaluate(0.0, x, u);
    const VectorXd k2 = evaluate(0.0, x + 0.5 * dt * k1, u);
    const VectorXd k3 = evaluate(0.0, x + 0.5 * dt * k2, u);
    const VectorXd k4 = evaluate(0.0, x + dt * k3, u);
    VectorXd next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) throw DivergenceError("integrate_step diverged");
    return next;
  }

  /// Finite and away from the steering singularity.
  bool state_admissible(const VectorXd& x) const {
    if (x.size() != layout_.state_dim() || !x.allFinite()) return false;
    for (std::size_t i = 0; i < models_.size(); ++i) {
      if (models_[i].kind != ModelKind::kBicycle) continue;
      if (std::abs(x(layout_.block(i).state_offset + 4)) >=
          kSteeringSingularityGuard) {
        return false;
      }
    }
    return true;
  }

  bool operator==(const VehicleDynamics& o) const {
    return models_ == o.models_;
  }

 private:
  void check_inputs(const VectorXd& x, const VectorXd& u) const {
    detail::require_dim(x.size(), layout_.state_dim(), "state");
    detail::require_dim(u.size(), layout_.control_dim(), "control");
    if (!x.allFinite() || !u.allFinite()) {
      throw NonFiniteError("dynamics evaluated at a non-finite input");
    }
  }

  template <class In, class Ctl, class Out>
  static void player_derivative(const PlayerModel& model, const In& xi,
                                const Ctl& ui, Out xdot) {
    const double theta = xi(2), v = xi(3);
    xdot(0) = v * std::sin(theta);
    xdot(1) = v * std::cos(theta);
    if (model.kind == ModelKind::kBicycle) {
      xdot(2) = (v / model.wheelbase) * std::tan(xi(4));
      xdot(3) = xi(5);
      xdot(4) = ui(0);
      xdot(5) = ui(1);
    } else {
      xdot(2) = ui(0);
      xdot(3) = ui(1);
    }
  }

  std::vector<PlayerModel> models_;
  PlayerStateLayout layout_;
};

static_assert(GameDynamics<VehicleDynamics>);

}  // namespace dgame

#endif  // DGAME_DYNAMICS_HPP_
