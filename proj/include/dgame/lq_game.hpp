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

#ifndef DGAME_LQ_GAME_HPP_
#define DGAME_LQ_GAME_HPP_

///////////////////////////////////////////////////////////////////////////////
//
// Feedback Nash equilibrium of a finite-horizon, discrete-time N-player
// linear-quadratic game:
//
//   x_{k+1} = A_k x_k + sum_j B_jk u_jk
//   J_i     = sum_k [ 1/2 x_k' Q_ik x_k + l_ik' x_k
//                     + sum_j (1/2 u_jk' R_ijk u_jk + r_ijk' u_jk) ]
//             + 1/2 x_K' Q_iK x_K + l_iK' x_K
//
// Strategies are affine, u_ik = -P_ik x_k - alpha_ik. At each step of the
// backward recursion all players' gains solve one stacked linear system
//
//   (R_ii + B_i' Z_i B_i) P_i + B_i' Z_i sum_{j!=i} B_j P_j = B_i' Z_i A
//
// (and the analogous system for alpha), after which the value function
// (Z_i, zeta_i) is propagated through F = A - sum_j B_j P_j.
//
///////////////////////////////////////////////////////////////////////////////

#include "dgame/common.hpp"
#include "dgame/costs.hpp"
#include "dgame/dynamics.hpp"

#include <string>
#include <vector>

namespace dgame {

struct LqGameStage {
  LinearizedDynamics dynamics;
  std::vector<QuadraticCostModel> costs;  // one per player
};

struct TerminalCost {
  MatrixXd Q;
  VectorXd l;
};

/// Time-indexed gains and feedforward terms of one player.
struct AffineStrategy {
  std::vector<MatrixXd> gains;         // P_k, m_i x n
  std::vector<VectorXd> feedforwards;  // alpha_k, m_i

  AffineStrategy() = default;
  AffineStrategy(std::size_t horizon, Eigen::Index n, Eigen::Index m_i)
      : gains(horizon, MatrixXd::Zero(m_i, n)),
        feedforwards(horizon, VectorXd::Zero(m_i)) {}

  std::size_t horizon() const { return gains.size(); }

  /// Control deviation at step k for state deviation dx.
  VectorXd control(std::size_t k, const VectorXd& dx) const {
    return -gains[k] * dx - feedforwards[k];
  }
};

/// Quadratic value function 1/2 x'Zx + zeta'x + c.
struct LqValue {
  MatrixXd Z;
  VectorXd zeta;
  double constant = 0.0;

  double operator()(const VectorXd& x) const {
    return 0.5 * x.dot(Z * x) + zeta.dot(x) + constant;
  }
};

inline constexpr double kMinReciprocalCondition = 1e-12;
inline constexpr double kCouplingTikhonov = 1e-8;

namespace detail {

inline void check_stage(const LqGameStage& stage, std::size_t num_players,
                        Eigen::Index n) {
  detail::require_dim(stage.dynamics.A.rows(), n, "A rows");
  detail::require_dim(stage.dynamics.A.cols(), n, "A cols");
  if (stage.dynamics.B.size() != num_players ||
      stage.costs.size() != num_players) {
    throw DimensionError("LQ stage has inconsistent player count");
  }
}

inline void require_positive_definite(const MatrixXd& R, std::size_t k,
                                      std::size_t i) {
  Eigen::LLT<MatrixXd> llt(R);
  if (llt.info() != Eigen::Success) {
    throw RegularizationError("R_ii of player " + std::to_string(i) +
                              " is not positive definite at step " +
                              std::to_string(k));
  }
}

inline MatrixXd symmetrized(const MatrixXd& M) {
  return 0.5 * (M + M.transpose());
}

}  // namespace detail

/// Coupled backward recursion. If `initial_values` is non-null it receives
/// each player's value function at step 0.
inline std::vector<AffineStrategy> solve_lq_game(
    const std::vector<LqGameStage>& stages,
    const std::vector<TerminalCost>& terminal,
    std::vector<LqValue>* initial_values = nullptr) {
  if (stages.empty()) throw DimensionError("solve_lq_game: no stages");
  const std::size_t N = terminal.size();
  const Eigen::Index n = stages.front().dynamics.A.rows();
  const std::size_t K = stages.size();

  std::vector<Eigen::Index> mdim(N), moff(N);
  Eigen::Index mtot = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (stages.front().dynamics.B.size() != N) {
      throw DimensionError("solve_lq_game: player count mismatch");
    }
    mdim[i] = stages.front().dynamics.B[i].cols();
    moff[i] = mtot;
    mtot += mdim[i];
  }

  std::vector<AffineStrategy> strategies;
  strategies.reserve(N);
  for (std::size_t i = 0; i < N; ++i) strategies.emplace_back(K, n, mdim[i]);

  std::vector<LqValue> V(N);
  for (std::size_t i = 0; i < N; ++i) {
    detail::require_dim(terminal[i].Q.rows(), n, "terminal Q");
    detail::require_dim(terminal[i].l.size(), n, "terminal l");
    V[i].Z = terminal[i].Q;
    V[i].zeta = terminal[i].l;
  }

  MatrixXd S(mtot, mtot);
  MatrixXd Y(mtot, n + 1);
  std::vector<MatrixXd> ZB(N);

  for (std::size_t kk = K; kk-- > 0;) {
    const LqGameStage& stage = stages[kk];
    detail::check_stage(stage, N, n);
    const MatrixXd& A = stage.dynamics.A;
    const auto& B = stage.dynamics.B;

    for (std::size_t i = 0; i < N; ++i) {
      detail::require_dim(B[i].cols(), mdim[i], "B_i cols");
      ZB[i] = V[i].Z * B[i];
    }
    for (std::size_t i = 0; i < N; ++i) {
      const MatrixXd& Rii = stage.costs[i].R[i];
      detail::require_positive_definite(Rii, kk, i);
      // Row block i is player i's first-order condition, so every block in
      // it is weighted by Z_i.
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        S.block(moff[i], moff[j], mdim[i], mdim[j]) = ZB[i].transpose() * B[j];
      }
      S.block(moff[i], moff[i], mdim[i], mdim[i]) =
          Rii + B[i].transpose() * ZB[i];
      Y.block(moff[i], 0, mdim[i], n) = ZB[i].transpose() * A;
      Y.block(moff[i], n, mdim[i], 1) =
          B[i].transpose() * V[i].zeta + stage.costs[i].r[i];
    }

    Eigen::PartialPivLU<MatrixXd> lu(S);
    if (!(lu.rcond() > kMinReciprocalCondition)) {
      lu.compute(S + kCouplingTikhonov * MatrixXd::Identity(mtot, mtot));
      if (!(lu.rcond() > kMinReciprocalCondition)) {
        throw IllConditionedGameError(
            "Nash coupling matrix is singular at step " + std::to_string(kk),
            kk);
      }
    }
    const MatrixXd X = lu.solve(Y);

    MatrixXd F = A;
    VectorXd beta = VectorXd::Zero(n);
    for (std::size_t i = 0; i < N; ++i) {
      strategies[i].gains[kk] = X.block(moff[i], 0, mdim[i], n);
      strategies[i].feedforwards[kk] = X.block(moff[i], n, mdim[i], 1);
      F.noalias() -= B[i] * strategies[i].gains[kk];
      beta.noalias() -= B[i] * strategies[i].feedforwards[kk];
    }

    for (std::size_t i = 0; i < N; ++i) {
      const QuadraticCostModel& c = stage.costs[i];
      LqValue& v = V[i];
      MatrixXd Z = F.transpose() * v.Z * F + c.Q;
      VectorXd zeta = F.transpose() * (v.zeta + v.Z * beta) + c.l;
      double constant =
          v.constant + 0.5 * beta.dot(v.Z * beta) + v.zeta.dot(beta);
      for (std::size_t j = 0; j < N; ++j) {
        const MatrixXd& P = strategies[j].gains[kk];
        const VectorXd& a = strategies[j].feedforwards[kk];
        Z.noalias() += P.transpose() * c.R[j] * P;
        zeta.noalias() += P.transpose() * (c.R[j] * a - c.r[j]);
        constant += 0.5 * a.dot(c.R[j] * a) - c.r[j].dot(a);
      }
      v.Z = detail::symmetrized(Z);
      v.zeta = std::move(zeta);
      v.constant = constant;
    }
  }

  if (initial_values) *initial_values = std::move(V);
  return strategies;
}

/// Player i's optimal affine strategy when every other player's strategy is
/// substituted into the dynamics. Used to check the Nash property.
inline AffineStrategy unilateral_best_response(
    const std::vector<LqGameStage>& stages,
    const std::vector<TerminalCost>& terminal,
    const std::vector<AffineStrategy>& strategies, PlayerIndex i,
    LqValue* initial_value = nullptr) {
  if (stages.empty()) throw DimensionError("unilateral_best_response: no stages");
  const std::size_t N = terminal.size();
  if (strategies.size() != N || i >= N) {
    throw DimensionError("unilateral_best_response: bad player index");
  }
  const std::size_t K = stages.size();
  const Eigen::Index n = stages.front().dynamics.A.rows();
  const Eigen::Index mi = stages.front().dynamics.B[i].cols();

  AffineStrategy out(K, n, mi);
  LqValue v{terminal[i].Q, terminal[i].l, 0.0};

  for (std::size_t kk = K; kk-- > 0;) {
    const LqGameStage& stage = stages[kk];
    detail::check_stage(stage, N, n);
    const auto& B = stage.dynamics.B;
    const QuadraticCostModel& c = stage.costs[i];

    // Closed loop of the other players: x+ = A' x + B_i u_i + drift.
    MatrixXd A = stage.dynamics.A;
    VectorXd drift = VectorXd::Zero(n);
    MatrixXd Q = c.Q;
    VectorXd l = c.l;
    double stage_constant = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i) continue;
      const MatrixXd& P = strategies[j].gains[kk];
      const VectorXd& a = strategies[j].feedforwards[kk];
      A.noalias() -= B[j] * P;
      drift.noalias() -= B[j] * a;
      Q.noalias() += P.transpose() * c.R[j] * P;
      l.noalias() += P.transpose() * (c.R[j] * a - c.r[j]);
      stage_constant += 0.5 * a.dot(c.R[j] * a) - c.r[j].dot(a);
    }

    const MatrixXd& Rii = c.R[i];
    detail::require_positive_definite(Rii, kk, i);
    const MatrixXd ZB = v.Z * B[i];
    const MatrixXd H = Rii + B[i].transpose() * ZB;
    Eigen::LLT<MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
      throw IllConditionedGameError(
          "best-response Hessian is not positive definite at step " +
              std::to_string(kk),
          kk);
    }
    const MatrixXd P = llt.solve(ZB.transpose() * A);
    const VectorXd alpha =
        llt.solve(B[i].transpose() * (v.Z * drift + v.zeta) + c.r[i]);
    out.gains[kk] = P;
    out.feedforwards[kk] = alpha;

    const MatrixXd F = A - B[i] * P;
    const VectorXd beta = drift - B[i] * alpha;
    MatrixXd Z = F.transpose() * v.Z * F + Q + P.transpose() * Rii * P;
    VectorXd zeta = F.transpose() * (v.zeta + v.Z * beta) + l +
                    P.transpose() * (Rii * alpha - c.r[i]);
    v.constant += stage_constant + 0.5 * beta.dot(v.Z * beta) +
                  v.zeta.dot(beta) + 0.5 * alpha.dot(Rii * alpha) -
                  c.r[i].dot(alpha);
    v.Z = detail::symmetrized(Z);
    v.zeta = std::move(zeta);
  }
  if (initial_value) *initial_value = std::move(v);
  return out;
}

/// State trajectory of the linear game under the given strategies.
inline std::vector<VectorXd> lq_rollout(
    const std::vector<LqGameStage>& stages,
    const std::vector<AffineStrategy>& strategies, const VectorXd& x0) {
  std::vector<VectorXd> xs{x0};
  xs.reserve(stages.size() + 1);
  for (std::size_t k = 0; k < stages.size(); ++k) {
    VectorXd next = stages[k].dynamics.A * xs.back();
    for (std::size_t j = 0; j < strategies.size(); ++j) {
      next += stages[k].dynamics.B[j] * strategies[j].control(k, xs.back());
    }
    xs.push_back(std::move(next));
  }
  return xs;
}

/// Every player's quadratic cost along the rollout from x0.
inline std::vector<double> lq_costs(const std::vector<LqGameStage>& stages,
                                    const std::vector<TerminalCost>& terminal,
                                    const std::vector<AffineStrategy>& strategies,
                                    const VectorXd& x0) {
  const auto xs = lq_rollout(stages, strategies, x0);
  std::vector<double> J(terminal.size(), 0.0);
  for (std::size_t k = 0; k < stages.size(); ++k) {
    std::vector<VectorXd> us;
    for (const auto& s : strategies) us.push_back(s.control(k, xs[k]));
    for (std::size_t i = 0; i < J.size(); ++i) {
      const auto& c = stages[k].costs[i];
      J[i] += 0.5 * xs[k].dot(c.Q * xs[k]) + c.l.dot(xs[k]);
      for (std::size_t j = 0; j < us.size(); ++j) {
        J[i] += 0.5 * us[j].dot(c.R[j] * us[j]) + c.r[j].dot(us[j]);
      }
    }
  }
  for (std::size_t i = 0; i < J.size(); ++i) {
    J[i] += 0.5 * xs.back().dot(terminal[i].Q * xs.back()) +
            terminal[i].l.dot(xs.back());
  }
  return J;
}

}  // namespace dgame

#endif  // DGAME_LQ_GAME_HPP_
