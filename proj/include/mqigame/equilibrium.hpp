#pragma once

// End-to-end equilibrium computation and verification.
//
// The feedforward Nash pair is mapped to feedback form through g. Feedback
// best responses fold the opponent's feedback strategy into a modified plant
// and solve a convex structured problem in the team's own feedforward
// parameter, which is valid whenever the team's pattern is quadratically
// invariant under the modified plant.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mqigame/core.hpp"
#include "mqigame/lifting.hpp"
#include "mqigame/model.hpp"
#include "mqigame/static_game.hpp"
#include "mqigame/strategy_maps.hpp"
#include "mqigame/structure.hpp"

namespace mqi {

/// A validated instance together with its lifted data and patterns.
struct Game {
  ProblemInstance instance;
  LiftedGame lifted;
  Pattern s1, s2;

  const Pattern& pattern(Team t) const { return t == Team::one ? s1 : s2; }
};

inline Game make_game(const ProblemInstance& p) {
  Game game{p, lift(p), instance_pattern(p, Team::one),
            instance_pattern(p, Team::two)};
  for (Team t : {Team::one, Team::two}) {
    const auto causal = is_causal(game.pattern(t));
    if (!causal.causal)
      throw StructuralError(
          "structure" + std::to_string(team_index(t) + 1) +
          " is not causal: entry (" +
          std::to_string(causal.first_violation->first) + "," +
          std::to_string(causal.first_violation->second) + ")");
  }
  return game;
}

struct EquilibriumResult {
  FeedforwardPair Q;
  std::optional<FeedbackPair> K;
  double J1 = 0.0, J2 = 0.0;        // feedforward evaluation
  double J1_fb = 0.0, J2_fb = 0.0;  // feedback evaluation (when K is set)
  double residual_max = 0.0;
  double condition_estimate = 0.0;
  CheckReport assumption1;
  std::optional<CheckReport> assumption1_zerosum;
  QiReport mqi;
  std::vector<std::string> warnings;

  double J(Team t) const { return t == Team::one ? J1 : J2; }
};

struct SolveOptions {
  bool feedback = true;  // also produce K̄ = g(Q̄); requires MQI
};

inline std::string mqi_failure_message(const Game& game, const QiReport& r) {
  std::string msg =
      "information structures are not mutually quadratically invariant (" +
      std::to_string(r.total_violations) + " violations";
  if (!r.violations.empty())
    msg += ", e.g. " + describe(r.violations.front(), game.instance.n,
                                game.instance.m1, game.instance.m2,
                                game.instance.N);
  return msg + ")";
}

inline EquilibriumResult solve_game(const Game& game,
                                    const SolveOptions& opts = {}) {
  const LiftedGame& g = game.lifted;
  EquilibriumResult res;
  res.mqi = is_mqi(game.s1, game.s2, g.plant);
  if (opts.feedback && !res.mqi.invariant)
    throw StructuralError(mqi_failure_message(game, res.mqi));

  res.assumption1 = assumption1_static(g);
  if (!res.assumption1.pass())
    res.warnings.push_back(
        "joint definiteness condition fails; equilibrium may not be unique");
  if (game.instance.zero_sum) {
    res.assumption1_zerosum = assumption1_zerosum(g);
    if (!res.assumption1_zerosum->pass())
      res.warnings.push_back("zero-sum saddle condition fails");
  }

  const NashSolution nash = solve_nash_ff(g, game.s1, game.s2);
  res.Q = nash.Q;
  res.residual_max = nash.residual_max;
  res.condition_estimate = nash.condition_estimate;
  res.J1 = cost_ff(g, res.Q, Team::one);
  res.J2 = cost_ff(g, res.Q, Team::two);
  if (opts.feedback) {
    res.K = to_feedback(g, res.Q, game.s1, game.s2);
    res.J1_fb = cost_fb(g, *res.K, Team::one);
    res.J2_fb = cost_fb(g, *res.K, Team::two);
  }
  return res;
}

inline EquilibriumResult solve_game(const ProblemInstance& p,
                                    const SolveOptions& opts = {}) {
  return solve_game(make_game(p), opts);
}

// ---------------------------------------------------------------------------
// Feedback best response through the modified plant
// ---------------------------------------------------------------------------

/// The responder's view of the game once the opponent's feedback strategy is
/// folded into the dynamics: x = P̃11 w + P̃ u_team.
struct ModifiedPlant {
  Matrix P11;           // (I - P_opp K_opp)^{-1} P11
  Matrix plant;         // (I - P_opp K_opp)^{-1} P_team
  Matrix state_weight;  // M_team + K_oppᵀ U K_opp
  Matrix input_weight;  // the team's own input weight
  Matrix W;             // P̃11 ΣW P̃11ᵀ
  BoolMatrix plant_support;
};

inline ModifiedPlant modified_plant(const LiftedGame& g,
                                    const FeedbackPair& k, Team team) {
  detail::check_pair_shape(g, k.K1, k.K2, "feedback pair");
  const Team opp = other(team);
  const Matrix& k_opp = k.of(opp);
  const Matrix loop = -(g.plant_of(opp) * k_opp);
  const bool nilpotent = detail::strictly_causal_loop(
      loop, [&](Index i) { return static_cast<int>(i / g.n); });
  const auto lu =
      detail::factor_identity_plus(loop, nilpotent, "modified plant");

  ModifiedPlant mp;
  mp.P11 = lu.solve(g.P11);
  mp.plant = lu.solve(g.plant_of(team));
  const Matrix& opp_weight = detail::input_weight(g, team, opp);
  mp.state_weight = detail::symmetrized(
      g.M(team) + k_opp.transpose() * opp_weight * k_opp);
  mp.input_weight = detail::input_weight(g, team, team);
  mp.W = detail::symmetrized(mp.P11 * g.SigmaW * mp.P11.transpose());

  // Structural support: closure of the opponent loop applied to P_team.
  const BoolMatrix& opp_plant =
      opp == Team::one ? g.plant.u : g.plant.v;
  const BoolMatrix& own_plant =
      team == Team::one ? g.plant.u : g.plant.v;
  const BoolMatrix step = detail::bool_product(opp_plant, detail::support(k_opp));
  BoolMatrix closure = BoolMatrix::Identity(g.states(), g.states());
  BoolMatrix power = closure;
  for (int i = 0; i <= g.N; ++i) {
    power = detail::bool_product(power, step);
    closure = closure.array() || power.array();
  }
  mp.plant_support = detail::bool_product(closure, own_plant);
  return mp;
}

struct FeedbackBestResponse {
  Matrix strategy;     // K*
  Matrix feedforward;  // Q̃ on the modified plant
  double cost = 0.0;          // responder's cost with K*
  double reduced_cost = 0.0;  // same cost evaluated on the modified plant
  double min_curvature = 0.0;
};

/// Structured best response of `team` in feedback form against the
/// opponent's feedback strategy in `k`.
inline FeedbackBestResponse best_response_fb(const LiftedGame& g,
                                             const Pattern& s,
                                             const FeedbackPair& k,
                                             Team team) {
  detail::check_pattern_shape(g, s, team);
  const ModifiedPlant mp = modified_plant(g, k, team);
  const QiReport qi = quadratic_invariance(s.mask, mp.plant_support);
  if (!qi.invariant)
    throw StructuralError(
        "structure" + std::to_string(team_index(team) + 1) +
        " is not quadratically invariant under the modified plant; the "
        "feedback best response cannot be computed by this reduction (" +
        std::to_string(qi.total_violations) + " violations)");

  SingleTeamProblem prob;
  prob.plant = mp.plant;
  prob.state_weight = mp.state_weight;
  prob.input_weight = mp.input_weight;
  prob.offset = Matrix::Identity(g.states(), g.states());
  prob.W = mp.W;
  const SingleTeamSolution sol = solve_single_team(prob, s.mask);

  const Matrix loop = sol.X * mp.plant;
  const bool nilpotent = detail::strictly_causal_loop(
      loop, [&](Index i) { return static_cast<int>(i / (team == Team::one ? g.m1 : g.m2)); });
  Matrix k_star =
      detail::factor_identity_plus(loop, nilpotent, "best response").solve(sol.X);
  const double scale = detail::max_abs(k_star);
  if (detail::max_off_support(k_star, s.mask) > 1e-12 * std::max(scale, 1.0))
    throw StructuralError("feedback best response leaves the structure");
  k_star = detail::masked(k_star, s.mask);

  FeedbackBestResponse br;
  br.strategy = k_star;
  br.feedforward = sol.X;
  br.reduced_cost = sol.cost;
  br.min_curvature = sol.min_curvature;
  FeedbackPair full = k;
  full.of(team) = k_star;
  br.cost = cost_fb(g, full, team);
  return br;
}

// ---------------------------------------------------------------------------
// Nash verification
// ---------------------------------------------------------------------------

enum class StrategySpace { feedforward, feedback };

inline const char* to_string(StrategySpace s) {
  return s == StrategySpace::feedforward ? "feedforward" : "feedback";
}

struct NashVerification {
  StrategySpace space = StrategySpace::feedforward;
  bool is_nash = false;
  std::array<double, 2> cost{};           // responder's cost at the pair
  std::array<double, 2> response_cost{};  // responder's cost at best response
  std::array<double, 2> delta{};          // improvement, >= -tol
  std::array<double, 2> tolerance{};
  std::array<Matrix, 2> best_response;
  double relative_tolerance = 1e-6;
};

inline NashVerification verify_nash(const Game& game, const StrategyPair& pair,
                                    StrategySpace space,
                                    double relative_tolerance = 1e-6) {
  const LiftedGame& g = game.lifted;
  NashVerification v;
  v.space = space;
  v.relative_tolerance = relative_tolerance;
  if (space == StrategySpace::feedforward) {
    const FeedforwardPair q =
        std::holds_alternative<FeedforwardPair>(pair)
            ? std::get<FeedforwardPair>(pair)
            : to_feedforward(g, std::get<FeedbackPair>(pair));
    for (Team t : {Team::one, Team::two}) {
      const int i = team_index(t);
      const BestResponse br = best_response_ff(g, game.pattern(t), q, t);
      v.cost[i] = cost_ff(g, q, t);
      v.response_cost[i] = br.cost;
      v.best_response[i] = br.strategy;
    }
  } else {
    const FeedbackPair k = std::holds_alternative<FeedbackPair>(pair)
                               ? std::get<FeedbackPair>(pair)
                               : to_feedback(g, std::get<FeedforwardPair>(pair));
    for (Team t : {Team::one, Team::two}) {
      const int i = team_index(t);
      const FeedbackBestResponse br = best_response_fb(g, game.pattern(t), k, t);
      v.cost[i] = cost_fb(g, k, t);
      v.response_cost[i] = br.cost;
      v.best_response[i] = br.strategy;
    }
  }
  v.is_nash = true;
  for (int i = 0; i < 2; ++i) {
    v.delta[i] = v.cost[i] - v.response_cost[i];
    v.tolerance[i] = relative_tolerance * (1.0 + std::abs(v.cost[i]));
    if (v.delta[i] > v.tolerance[i]) v.is_nash = false;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Stationarity in both parametrizations
// ---------------------------------------------------------------------------

struct StationarityComparison {
  double feedforward_residual = 0.0;  // max |Π_S ∂J_i/∂Q_i| at g⁻¹(K)
  double feedback_derivative = 0.0;   // max |d/dK_i J_i(g⁻¹(K))| on S
  double step = 0.0;
};

/// Evaluates both teams' support-projected stationarity of J_i in Q at
/// g⁻¹(K), and central finite-difference derivatives of J_i ∘ g⁻¹ in K
/// along every supported unit direction.
inline StationarityComparison check_lemma1(const Game& game,
                                           const FeedbackPair& k,
                                           double step = 1e-5) {
  const LiftedGame& g = game.lifted;
  StationarityComparison out;
  out.step = step;
  const FeedforwardPair q = to_feedforward(g, k);
  out.feedforward_residual = projected_residual(g, q, game.s1, game.s2);
  for (Team t : {Team::one, Team::two}) {
    const Pattern& s = game.pattern(t);
    for (Index r = 0; r < s.rows(); ++r)
      for (Index c = 0; c < s.cols(); ++c) {
        if (!s(r, c)) continue;
        const double h = step * (1.0 + std::abs(k.of(t)(r, c)));
        FeedbackPair plus = k, minus = k;
        plus.of(t)(r, c) += h;
        minus.of(t)(r, c) -= h;
        const double d =
            (cost_fb(g, plus, t) - cost_fb(g, minus, t)) / (2.0 * h);
        out.feedback_derivative = std::max(out.feedback_derivative, std::abs(d));
      }
  }
  return out;
}

}  // namespace mqi
