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

#ifndef DGAME_ILQ_SOLVER_HPP_
#define DGAME_ILQ_SOLVER_HPP_

// Iterative LQ game solver with augmented-Lagrangian constraint handling.
//
// Inner loop: roll out the current strategies, linearize the dynamics and
// quadraticize every player's cost (plus its constraint penalties) along the
// resulting operating point, solve the LQ game, and take a damped step in the
// feedforward terms. Outer loop: update multipliers and penalty.

#include "dgame/common.hpp"
#include "dgame/constraints.hpp"
#include "dgame/costs.hpp"
#include "dgame/dynamics.hpp"
#include "dgame/lq_game.hpp"
#include "dgame/trajectory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace dgame {

/// A full game instance: dynamics, one split-horizon cost per player,
/// constraints, initial state and the time grid.
template <GameDynamics D = VehicleDynamics>
struct GameProblem {
  D dynamics;
  VectorXd initial_state;
  std::vector<SplitHorizonCost> costs;
  std::vector<Constraint> constraints;
  double horizon = 15.0;  // s
  double dt = 0.1;        // s
  double t_adv = 0.0;     // s

  const PlayerStateLayout& layout() const { return dynamics.layout(); }
  std::size_t num_players() const { return layout().num_players(); }
  std::size_t num_steps() const {
    return static_cast<std::size_t>(std::llround(horizon / dt));
  }
  std::size_t switch_step() const { return switch_index(t_adv, dt).index; }

  /// Throws on structural problems.
  void validate() const {
    if (!(dt > 0.0) || !(horizon > 0.0)) {
      throw ConfigError("horizon and dt must be positive");
    }
    if (std::abs(horizon / dt - std::round(horizon / dt)) > 1e-9 * horizon / dt) {
      throw ConfigError("dt must divide the horizon");
    }
    if (t_adv < 0.0 || t_adv > horizon) {
      throw ConfigError("T_adv must lie in [0, T]");
    }
    detail::require_dim(initial_state.size(), layout().state_dim(),
                        "initial state");
    if (!initial_state.allFinite()) {
      throw ConfigError("initial state must be finite");
    }
    if (costs.size() != num_players()) {
      throw ConfigError("need exactly one cost per player");
    }
    for (std::size_t i = 0; i < costs.size(); ++i) {
      if (costs[i].player != i) throw ConfigError("cost/player order mismatch");
      for (Phase ph : {Phase::kAdversarial, Phase::kCooperative}) {
        for (const auto& term : costs[i].terms(ph)) {
          if (term.player >= num_players() || term.other >= num_players()) {
            throw ConfigError("cost term references an unknown player");
          }
        }
      }
    }
    for (const auto& c : constraints) {
      if (c.owner >= num_players() || c.other >= num_players()) {
        throw ConfigError("constraint references an unknown player");
      }
      if (c.kind == ConstraintKind::kProximity && c.owner != 0) {
        throw ConfigError("proximity constraints belong to the ego");
      }
    }
  }

  bool operator==(const GameProblem& o) const {
    return dynamics == o.dynamics && initial_state.size() == o.initial_state.size() &&
           initial_state == o.initial_state && costs == o.costs &&
           constraints == o.constraints && horizon == o.horizon && dt == o.dt &&
           t_adv == o.t_adv;
  }
};

/// One inner iteration, reported to SolverConfig::log when set.
struct IterationRecord {
  std::size_t outer = 0;
  std::size_t inner = 0;
  double step_size = 0.0;
  double state_change = 0.0;
  double max_violation = 0.0;
  double penalty = 0.0;
  std::vector<double> costs;
};

struct SolverConfig {
  std::size_t max_inner_iterations = 100;
  std::size_t max_outer_iterations = 10;
  double convergence_tolerance = 1e-3;   // max state change between iterates
  double constraint_tolerance = 1e-2;    // native units
  double initial_step = 1.0;
  double step_decay = 0.5;
  double min_step = 1.0 / 64.0;
  double trust_region = 5.0;             // max state change accepted per step
  bool adaptive_step = true;
  std::size_t growth_streak = 2;         // steady iterations before the cap grows
  double regularization = kDefaultCostRegularization;
  double initial_penalty = kInitialPenalty;
  double penalty_growth = kPenaltyGrowth;
  double max_penalty = kMaxPenalty;
  std::function<void(const IterationRecord&)> log;
};

struct GameSolution {
  OperatingPoint trajectory;
  std::vector<AffineStrategy> strategies;
  std::vector<double> costs;        // J_i on `trajectory`
  double max_violation = 0.0;
  bool converged = false;           // last inner loop met its tolerance
  bool feasible = false;            // max_violation within tolerance
  std::size_t inner_iterations = 0;
  std::size_t outer_iterations = 0;
  double solve_time = 0.0;          // s, wall clock
  MultiplierState multipliers;
  std::vector<double> violation_history;  // max violation per outer iteration
};

/// Previous solution shifted forward in time for warm starts.
struct WarmStart {
  OperatingPoint reference;
  std::vector<AffineStrategy> strategies;
};

/// Time-shifts a solution by `steps`, padding the tail with zero controls,
/// zero gains and the last state.
inline WarmStart shift_solution(const GameSolution& sol, std::size_t steps) {
  WarmStart ws;
  const std::size_t K = sol.trajectory.num_steps();
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t src = std::min(k + steps, K);
    ws.reference.states.push_back(sol.trajectory.states[src]);
    ws.reference.controls.push_back(
        k + steps < K ? sol.trajectory.controls[k + steps]
                      : VectorXd::Zero(sol.trajectory.controls.front().size()));
  }
  ws.reference.states.push_back(sol.trajectory.states.back());
  for (const auto& s : sol.strategies) {
    AffineStrategy shifted(K, s.gains.front().cols(), s.gains.front().rows());
    for (std::size_t k = 0; k + steps < K; ++k) {
      shifted.gains[k] = s.gains[k + steps];
      shifted.feedforwards[k] = s.feedforwards[k + steps];
    }
    ws.strategies.push_back(std::move(shifted));
  }
  return ws;
}

/// Joint control of the strategies at step k and state x:
/// u_i = u_i_ref - P_i (x - x_ref) - eta alpha_i.
inline VectorXd strategy_control(const PlayerStateLayout& layout,
                                 const std::vector<AffineStrategy>& strategies,
                                 const OperatingPoint& reference, std::size_t k,
                                 const VectorXd& x, double eta) {
  VectorXd u = reference.controls[k];
  const VectorXd dx = x - reference.states[k];
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    const auto& b = layout.block(i);
    u.segment(b.control_offset, b.control_dim).noalias() -=
        strategies[i].gains[k] * dx + eta * strategies[i].feedforwards[k];
  }
  return u;
}

/// Simulates the strategies about `reference` from its initial state.
/// Throws DivergenceError on a non-finite or inadmissible state.
template <GameDynamics D>
OperatingPoint rollout(const D& dynamics,
                       const std::vector<AffineStrategy>& strategies,
                       const OperatingPoint& reference, double eta,
                       double dt) {
  const std::size_t K = reference.num_steps();
  OperatingPoint out;
  out.states.reserve(K + 1);
  out.controls.reserve(K);
  out.states.push_back(reference.states.front());
  for (std::size_t k = 0; k < K; ++k) {
    VectorXd u = strategy_control(dynamics.layout(), strategies, reference, k,
                                  out.states.back(), eta);
    if (!u.allFinite()) throw DivergenceError("rollout produced a non-finite control");
    VectorXd next = dynamics.integrate_step(out.states.back(), u, dt);
    if (!dynamics.state_admissible(next)) {
      throw DivergenceError("rollout left the admissible state set");
    }
    out.controls.push_back(std::move(u));
    out.states.push_back(std::move(next));
  }
  return out;
}

/// Open-loop rollout of a fixed control sequence.
template <GameDynamics D>
OperatingPoint simulate_controls(const D& dynamics, const VectorXd& x0,
                                 const std::vector<VectorXd>& controls,
                                 double dt) {
  OperatingPoint out;
  out.states.push_back(x0);
  for (const auto& u : controls) {
    out.states.push_back(dynamics.integrate_step(out.states.back(), u, dt));
    out.controls.push_back(u);
  }
  return out;
}

/// Largest state change between two trajectories (infinity norm per step).
inline double max_state_change(const OperatingPoint& a, const OperatingPoint& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    worst = std::max(worst, (a.states[k] - b.states[k]).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

/// g for every constraint at every grid point, [constraint][k].
template <GameDynamics D>
std::vector<std::vector<double>> constraint_violations(
    const GameProblem<D>& problem, const OperatingPoint& traj) {
  std::vector<std::vector<double>> g(problem.constraints.size());
  for (std::size_t c = 0; c < problem.constraints.size(); ++c) {
    g[c].reserve(traj.states.size());
    for (const auto& x : traj.states) {
      g[c].push_back(violation(problem.constraints[c], problem.layout(), x));
    }
  }
  return g;
}

template <GameDynamics D>
std::vector<double> total_costs(const GameProblem<D>& problem,
                                const OperatingPoint& traj) {
  std::vector<double> J;
  for (const auto& c : problem.costs) {
    J.push_back(total_cost(c, problem.layout(), traj, problem.dt));
  }
  return J;
}

namespace detail {

inline void add_penalty(const Constraint& c, const PlayerStateLayout& layout,
                        const VectorXd& x, double lambda, double mu,
                        QuadraticCostModel& model) {
  const ViolationDerivative g = violation_derivative(c, layout, x);
  const PenaltyTerms p = al_penalty(lambda, mu, g.value);
  if (p.d_dg == 0.0 && p.d2_dg2 == 0.0) return;
  model.l.noalias() += p.d_dg * g.gradient;
  model.Q.noalias() += p.d2_dg2 * g.gradient * g.gradient.transpose();
}

/// Augmented-Lagrangian penalty total of one player along a trajectory.
template <GameDynamics D>
double penalty_total(const GameProblem<D>& problem,
                     const MultiplierState& mult, PlayerIndex i,
                     const OperatingPoint& traj) {
  double total = 0.0;
  for (std::size_t c = 0; c < problem.constraints.size(); ++c) {
    const Constraint& con = problem.constraints[c];
    if (con.owner != i) continue;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      total += al_penalty(mult.lambda[c][k], mult.mu,
                          violation(con, problem.layout(), traj.states[k]))
                   .value;
    }
  }
  return total;
}

/// Quadratic model of player i's augmented cost at grid point k. k == K is
/// the terminal point (penalties only).
template <GameDynamics D>
QuadraticCostModel player_model(const GameProblem<D>& problem,
                                const MultiplierState& mult, PlayerIndex i,
                                std::size_t k, const VectorXd& x,
                                const VectorXd* u, double eps) {
  const auto& layout = problem.layout();
  QuadraticCostModel model = QuadraticCostModel::zero(layout);
  bool psd = true;
  if (u) {
    const SplitHorizonCost& cost = problem.costs[i];
    psd = accumulate_phase(cost,
                           phase_at_step(k, switch_index(cost.t_adv, problem.dt).index),
                           layout, x, *u, problem.dt, model);
  }
  for (std::size_t c = 0; c < problem.constraints.size(); ++c) {
    if (problem.constraints[c].owner != i) continue;
    add_penalty(problem.constraints[c], layout, x, mult.lambda[c][k], mult.mu,
                model);
  }
  finalize_quadratic_model(model, !psd, eps);
  return model;
}

template <GameDynamics D>
void build_lq_game(const GameProblem<D>& problem, const MultiplierState& mult,
                   const OperatingPoint& op, double eps,
                   std::vector<LqGameStage>& stages,
                   std::vector<TerminalCost>& terminal) {
  const std::size_t K = op.num_steps();
  const std::size_t N = problem.num_players();
  stages.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double t = static_cast<double>(k) * problem.dt;
    stages[k].dynamics = problem.dynamics.linearize_discretize(
        t, op.states[k], op.controls[k], problem.dt);
    stages[k].costs.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      stages[k].costs[i] =
          player_model(problem, mult, i, k, op.states[k], &op.controls[k], eps);
    }
  }
  terminal.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    QuadraticCostModel m =
        player_model<D>(problem, mult, i, K, op.states[K], nullptr, eps);
    terminal[i] = {std::move(m.Q), std::move(m.l)};
  }
}

inline std::vector<AffineStrategy> zero_strategies(const PlayerStateLayout& layout,
                                                   std::size_t K) {
  std::vector<AffineStrategy> s;
  for (std::size_t i = 0; i < layout.num_players(); ++i) {
    s.emplace_back(K, layout.state_dim(), layout.block(i).control_dim);
  }
  return s;
}

}  // namespace detail

/// Approximate local feedback Nash equilibrium of `problem`.
///
/// Infeasibility is reported through GameSolution::feasible rather than an
/// exception; the best iterate is still returned. Divergence of the rollout
/// at the smallest step size throws DivergenceError.
template <GameDynamics D>
GameSolution solve(const GameProblem<D>& problem,
                   const SolverConfig& config = {},
                   const std::optional<WarmStart>& warm_start = std::nullopt) {
  const auto t_start = std::chrono::steady_clock::now();
  problem.validate();
  const auto& layout = problem.layout();
  const std::size_t K = problem.num_steps();

  OperatingPoint op;
  std::vector<AffineStrategy> strategies;
  if (warm_start) {
    if (warm_start->reference.num_steps() != K) {
      throw DimensionError("warm start has the wrong horizon");
    }
    OperatingPoint ref = warm_start->reference;
    ref.states.front() = problem.initial_state;
    op = rollout(problem.dynamics, warm_start->strategies, ref, 0.0, problem.dt);
    strategies = warm_start->strategies;
  } else {
    op = simulate_controls(problem.dynamics, problem.initial_state,
                           std::vector<VectorXd>(K, VectorXd::Zero(layout.control_dim())),
                           problem.dt);
    strategies = detail::zero_strategies(layout, K);
  }

  GameSolution sol;
  MultiplierState mult = MultiplierState::zeros(problem.constraints.size(),
                                                K + 1, config.initial_penalty);
  std::vector<LqGameStage> stages;
  std::vector<TerminalCost> terminal;

  for (std::size_t outer = 0; outer < config.max_outer_iterations; ++outer) {
    sol.converged = false;
    // Step cap shrinks whenever an iteration fails to contract the previous
    // one and recovers after a run of contractions; undamped iterations tend
    // to cycle.
    double step_cap = config.initial_step;
    double previous_change = std::numeric_limits<double>::infinity();
    std::size_t decreasing_streak = 0;
    for (std::size_t inner = 0; inner < config.max_inner_iterations; ++inner) {
      detail::build_lq_game(problem, mult, op, config.regularization, stages,
                            terminal);
      strategies = solve_lq_game(stages, terminal);
      ++sol.inner_iterations;

      double eta = step_cap;
      std::optional<OperatingPoint> accepted;
      double change = 0.0;
      while (true) {
        std::optional<OperatingPoint> candidate;
        try {
          candidate = rollout(problem.dynamics, strategies, op, eta, problem.dt);
        } catch (const DivergenceError&) {
        }
        if (candidate) {
          change = max_state_change(*candidate, op);
          if (change <= config.trust_region || eta * config.step_decay < config.min_step) {
            accepted = std::move(candidate);
            break;
          }
        } else if (eta * config.step_decay < config.min_step) {
          throw DivergenceError("inner iteration diverged at the smallest step size");
        }
        eta *= config.step_decay;
      }

      const bool done = change < config.convergence_tolerance;
      op = std::move(*accepted);
      // Compare full-step equivalents so a smaller eta is not mistaken for
      // contraction.
      const double full_change = change / eta;
      if (!config.adaptive_step || eta < step_cap) {
        // The trust region already limited this step.
      } else if (full_change > previous_change) {
        step_cap = std::max(step_cap * config.step_decay, config.min_step);
        decreasing_streak = 0;
      } else if (++decreasing_streak >= config.growth_streak) {
        step_cap = std::min(step_cap / config.step_decay, config.initial_step);
        decreasing_streak = 0;
      }
      previous_change = full_change;
      if (config.log) {
        IterationRecord rec;
        rec.outer = outer;
        rec.inner = inner;
        rec.step_size = eta;
        rec.state_change = change;
        rec.max_violation = max_positive(constraint_violations(problem, op));
        rec.penalty = mult.mu;
        rec.costs = total_costs(problem, op);
        config.log(rec);
      }
      if (done) {
        sol.converged = true;
        break;
      }
    }
    ++sol.outer_iterations;

    const auto g = constraint_violations(problem, op);
    sol.max_violation = max_positive(g);
    sol.violation_history.push_back(sol.max_violation);
    if (sol.max_violation <= config.constraint_tolerance) break;
    if (outer + 1 == config.max_outer_iterations) break;
    mult = update_multipliers(mult, g, config.penalty_growth, config.max_penalty);
  }

  sol.trajectory = std::move(op);
  sol.strategies = std::move(strategies);
  sol.costs = total_costs(problem, sol.trajectory);
  sol.feasible = sol.max_violation <= config.constraint_tolerance;
  sol.multipliers = std::move(mult);
  sol.solve_time = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t_start)
                       .count();
  return sol;
}

/// Player i's control from the solution's feedback law at step k, state x.
inline VectorXd feedback_control(const PlayerStateLayout& layout,
                                 const GameSolution& sol, PlayerIndex i,
                                 std::size_t k, const VectorXd& x) {
  const auto& b = layout.block(i);
  return sol.trajectory.controls[k].segment(b.control_offset, b.control_dim) -
         sol.strategies[i].gains[k] * (x - sol.trajectory.states[k]);
}

/// Player i's augmented cost (running cost plus its constraint penalties
/// under the solution's final multipliers) along a trajectory.
template <GameDynamics D>
double augmented_cost(const GameProblem<D>& problem, const MultiplierState& mult,
                      PlayerIndex i, const OperatingPoint& traj) {
  return total_cost(problem.costs[i], problem.layout(), traj, problem.dt) +
         detail::penalty_total(problem, mult, i, traj);
}

struct BestResponseResult {
  OperatingPoint trajectory;
  double cost = 0.0;  // augmented cost of the best response
  std::size_t iterations = 0;
};

/// Single-player iterative LQR for player i while every other player follows
/// its feedback law from `sol`. Starts from the solution trajectory and only
/// accepts steps that lower player i's augmented cost.
template <GameDynamics D>
BestResponseResult best_response(const GameProblem<D>& problem,
                                 const GameSolution& sol, PlayerIndex i,
                                 const SolverConfig& config = {}) {
  const auto& layout = problem.layout();
  const auto& bi = layout.block(i);
  const std::size_t K = sol.trajectory.num_steps();
  const std::size_t N = problem.num_players();

  auto simulate = [&](const OperatingPoint& ref, const AffineStrategy& mine,
                      double eta) {
    OperatingPoint out;
    out.states.push_back(ref.states.front());
    for (std::size_t k = 0; k < K; ++k) {
      const VectorXd& x = out.states.back();
      VectorXd u(layout.control_dim());
      for (std::size_t j = 0; j < N; ++j) {
        const auto& bj = layout.block(j);
        u.segment(bj.control_offset, bj.control_dim) =
            j == i ? VectorXd(ref.controls[k].segment(bi.control_offset, bi.control_dim) -
                              mine.gains[k] * (x - ref.states[k]) -
                              eta * mine.feedforwards[k])
                   : feedback_control(layout, sol, j, k, x);
      }
      VectorXd next = problem.dynamics.integrate_step(x, u, problem.dt);
      if (!problem.dynamics.state_admissible(next)) {
        throw DivergenceError("best response left the admissible state set");
      }
      out.controls.push_back(std::move(u));
      out.states.push_back(std::move(next));
    }
    return out;
  };

  BestResponseResult best;
  best.trajectory = sol.trajectory;
  best.cost = augmented_cost(problem, sol.multipliers, i, best.trajectory);

  for (std::size_t it = 0; it < config.max_inner_iterations; ++it) {
    const OperatingPoint& op = best.trajectory;
    std::vector<LqGameStage> stages(K);
    for (std::size_t k = 0; k < K; ++k) {
      const double t = static_cast<double>(k) * problem.dt;
      LinearizedDynamics lin = problem.dynamics.linearize_discretize(
          t, op.states[k], op.controls[k], problem.dt);
      QuadraticCostModel full = detail::player_model(
          problem, sol.multipliers, i, k, op.states[k], &op.controls[k],
          config.regularization);
      LqGameStage& st = stages[k];
      st.dynamics.A = lin.A;
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        const MatrixXd& P = sol.strategies[j].gains[k];
        st.dynamics.A.noalias() -= lin.B[j] * P;
        full.Q.noalias() += P.transpose() * full.R[j] * P;
        full.l.noalias() -= P.transpose() * full.r[j];
      }
      st.dynamics.B = {lin.B[i]};
      QuadraticCostModel reduced;
      reduced.Q = std::move(full.Q);
      reduced.l = std::move(full.l);
      reduced.R = {full.R[i]};
      reduced.r = {full.r[i]};
      st.costs = {std::move(reduced)};
    }
    QuadraticCostModel tm = detail::player_model<D>(
        problem, sol.multipliers, i, K, op.states[K], nullptr,
        config.regularization);
    std::vector<TerminalCost> terminal{{std::move(tm.Q), std::move(tm.l)}};
    const AffineStrategy mine = solve_lq_game(stages, terminal).front();
    ++best.iterations;

    bool improved = false;
    for (double eta = 1.0; eta >= 1.0 / 1024.0; eta *= 0.5) {
      OperatingPoint cand;
      try {
        cand = simulate(op, mine, eta);
      } catch (const DivergenceError&) {
        continue;
      }
      const double J = augmented_cost(problem, sol.multipliers, i, cand);
      if (J < best.cost) {
        const double gain = best.cost - J;
        const double change = max_state_change(cand, op);
        best.cost = J;
        best.trajectory = std::move(cand);
        improved = change >= config.convergence_tolerance * 1e-3 &&
                   gain > 1e-12 * std::max(1.0, std::abs(J));
        break;
      }
    }
    if (!improved) break;
  }
  return best;
}

/// Local-Nash gap per player: augmented cost at the solution minus the
/// augmented cost of a best response against the others' feedback laws.
template <GameDynamics D>
std::vector<double> nash_residual(const GameProblem<D>& problem,
                                  const GameSolution& sol,
                                  const SolverConfig& config = {}) {
  std::vector<double> gap;
  for (std::size_t i = 0; i < problem.num_players(); ++i) {
    const double here = augmented_cost(problem, sol.multipliers, i, sol.trajectory);
    gap.push_back(here - best_response(problem, sol, i, config).cost);
  }
  return gap;
}

}  // namespace dgame

#endif  // DGAME_ILQ_SOLVER_HPP_
