#pragma once

// Structured linear Nash equilibria in disturbance-feedforward form.
//
// Strategies act on the free-response trajectory: u = Q1 (P11 w),
// v = Q2 (P11 w). With T = I + P12 Q1 + P13 Q2 and W = P11 ΣW P11ᵀ,
//
//   J_i(Q) = tr(M_i T W Tᵀ) + tr(R_i Q1 W Q1ᵀ) + tr(V_i Q2 W Q2ᵀ).

#include <string>
#include <vector>

#include "mqigame/core.hpp"
#include "mqigame/lifting.hpp"
#include "mqigame/structure.hpp"

namespace mqi {

struct FeedforwardPair {
  Matrix Q1;  // m1 N x n(N+1)
  Matrix Q2;  // m2 N x n(N+1)

  const Matrix& of(Team t) const { return t == Team::one ? Q1 : Q2; }
  Matrix& of(Team t) { return t == Team::one ? Q1 : Q2; }

  Matrix stacked() const {
    Matrix out(Q1.rows() + Q2.rows(), Q1.cols());
    out << Q1, Q2;
    return out;
  }
  static FeedforwardPair split(const Matrix& q, Index rows1) {
    return {q.topRows(rows1), q.bottomRows(q.rows() - rows1)};
  }
  static FeedforwardPair zero(const LiftedGame& g) {
    return {Matrix::Zero(g.inputs(Team::one), g.states()),
            Matrix::Zero(g.inputs(Team::two), g.states())};
  }
};

namespace detail {

inline void check_pair_shape(const LiftedGame& g, const Matrix& a,
                             const Matrix& b, const char* what) {
  if (a.rows() != g.inputs(Team::one) || a.cols() != g.states() ||
      b.rows() != g.inputs(Team::two) || b.cols() != g.states())
    throw ValidationError(std::string("shape mismatch: ") + what + " is (" +
                          shape_str(a) + ", " + shape_str(b) +
                          ") but the game needs (" +
                          std::to_string(g.inputs(Team::one)) + "x" +
                          std::to_string(g.states()) + ", " +
                          std::to_string(g.inputs(Team::two)) + "x" +
                          std::to_string(g.states()) + ")");
}

inline Matrix closed_loop_map(const LiftedGame& g, const FeedforwardPair& q) {
  Matrix t = g.P12 * q.Q1 + g.P13 * q.Q2;
  t.diagonal().array() += 1.0;
  return t;
}

// tr(A X Aᵀ B) for symmetric X: sum((B A) ∘ (A X)).
inline double weighted_trace(const Matrix& weight, const Matrix& a,
                             const Matrix& x) {
  return (weight * a).cwiseProduct(a * x).sum();
}

inline const Matrix& input_weight(const LiftedGame& g, Team cost_of, Team wrt) {
  return wrt == Team::one ? g.R(cost_of) : g.V(cost_of);
}

}  // namespace detail

/// Expected cost of team `team` under feedforward strategies.
inline double cost_ff(const LiftedGame& g, const FeedforwardPair& q, Team team) {
  detail::check_pair_shape(g, q.Q1, q.Q2, "feedforward pair");
  const Matrix t = detail::closed_loop_map(g, q);
  return detail::weighted_trace(g.M(team), t, g.W) +
         detail::weighted_trace(g.R(team), q.Q1, g.W) +
         detail::weighted_trace(g.V(team), q.Q2, g.W);
}

/// ∂J_{cost_of}/∂Q_{wrt}. For a team's own variable this is its stationarity
/// residual before projection onto the structure.
inline Matrix cost_gradient(const LiftedGame& g, const FeedforwardPair& q,
                            Team cost_of, Team wrt) {
  detail::check_pair_shape(g, q.Q1, q.Q2, "feedforward pair");
  const Matrix t = detail::closed_loop_map(g, q);
  return 2.0 *
         (detail::input_weight(g, cost_of, wrt) * q.of(wrt) +
          g.plant_of(wrt).transpose() * g.M(cost_of) * t) *
         g.W;
}

inline Matrix stationarity_residual(const LiftedGame& g,
                                    const FeedforwardPair& q, Team team) {
  return cost_gradient(g, q, team, team);
}

// ---------------------------------------------------------------------------
// Nash stationarity system
// ---------------------------------------------------------------------------

struct Unknown {
  Team team;
  Index row;
  Index col;
};

/// Square linear system over the supported entries of (Q1, Q2).
struct StationaritySystem {
  Matrix coefficients;
  Vector rhs;
  std::vector<Unknown> unknowns;
  double condition_estimate = 0.0;
};

struct NashSolution {
  FeedforwardPair Q;
  double residual_max = 0.0;
  double condition_estimate = 0.0;
  Index unknowns = 0;
};

namespace detail {

inline std::vector<Unknown> support_unknowns(const Pattern& s1,
                                             const Pattern& s2) {
  std::vector<Unknown> out;
  for (Team t : {Team::one, Team::two}) {
    const Pattern& s = t == Team::one ? s1 : s2;
    for (Index r = 0; r < s.rows(); ++r)
      for (Index c = 0; c < s.cols(); ++c)
        if (s(r, c)) out.push_back({t, r, c});
  }
  return out;
}

// Linear part of the stacked residual operator (affine offset removed).
inline FeedforwardPair residual_linear_part(const LiftedGame& g,
                                            const FeedforwardPair& q) {
  const Matrix drive = g.P12 * q.Q1 + g.P13 * q.Q2;
  return {2.0 * (g.R(Team::one) * q.Q1 +
                 g.P12.transpose() * g.M(Team::one) * drive) * g.W,
          2.0 * (g.V(Team::two) * q.Q2 +
                 g.P13.transpose() * g.M(Team::two) * drive) * g.W};
}

inline Vector gather(const FeedforwardPair& r, const std::vector<Unknown>& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k)
    out(static_cast<Index>(k)) = r.of(idx[k].team)(idx[k].row, idx[k].col);
  return out;
}

inline FeedforwardPair scatter(const LiftedGame& g, const Vector& x,
                               const std::vector<Unknown>& idx) {
  FeedforwardPair q = FeedforwardPair::zero(g);
  for (std::size_t k = 0; k < idx.size(); ++k)
    q.of(idx[k].team)(idx[k].row, idx[k].col) = x(static_cast<Index>(k));
  return q;
}

inline void check_pattern_shape(const LiftedGame& g, const Pattern& s,
                                Team t) {
  if (s.rows() != g.inputs(t) || s.cols() != g.states())
    throw ValidationError("structure" + std::to_string(team_index(t) + 1) +
                          " has shape " + std::to_string(s.rows()) + "x" +
                          std::to_string(s.cols()) + ", expected " +
                          std::to_string(g.inputs(t)) + "x" +
                          std::to_string(g.states()));
}

}  // namespace detail

/// Assembles the structured stationarity system by applying the residual
/// operator to each unit basis strategy (one column per unknown).
inline StationaritySystem assemble_stationarity(const LiftedGame& g,
                                                const Pattern& s1,
                                                const Pattern& s2) {
  detail::check_pattern_shape(g, s1, Team::one);
  detail::check_pattern_shape(g, s2, Team::two);
  StationaritySystem sys;
  sys.unknowns = detail::support_unknowns(s1, s2);
  const auto count = static_cast<Index>(sys.unknowns.size());
  const FeedforwardPair zero = FeedforwardPair::zero(g);
  const FeedforwardPair offset{stationarity_residual(g, zero, Team::one),
                               stationarity_residual(g, zero, Team::two)};
  sys.rhs = -detail::gather(offset, sys.unknowns);
  sys.coefficients.resize(count, count);
  for (Index k = 0; k < count; ++k) {
    FeedforwardPair basis = zero;
    const Unknown& u = sys.unknowns[static_cast<std::size_t>(k)];
    basis.of(u.team)(u.row, u.col) = 1.0;
    sys.coefficients.col(k) =
        detail::gather(detail::residual_linear_part(g, basis), sys.unknowns);
  }
  return sys;
}

/// Max over supported entries of both teams' stationarity residuals.
inline double projected_residual(const LiftedGame& g, const FeedforwardPair& q,
                                 const Pattern& s1, const Pattern& s2) {
  return std::max(
      detail::max_abs(detail::masked(stationarity_residual(g, q, Team::one),
                                     s1.mask)),
      detail::max_abs(detail::masked(stationarity_residual(g, q, Team::two),
                                     s2.mask)));
}

/// Unique structured linear Nash equilibrium in feedforward form.
inline NashSolution solve_nash_ff(const LiftedGame& g, const Pattern& s1,
                                  const Pattern& s2) {
  const StationaritySystem sys = assemble_stationarity(g, s1, s2);
  NashSolution sol;
  sol.unknowns = static_cast<Index>(sys.unknowns.size());
  if (sol.unknowns == 0) {
    sol.Q = FeedforwardPair::zero(g);
    sol.condition_estimate = 1.0;
    return sol;
  }
  Eigen::PartialPivLU<Matrix> lu(sys.coefficients);
  const double rcond = lu.rcond();
  sol.condition_estimate = rcond > 0.0 ? 1.0 / rcond : INFINITY;
  if (!(rcond > 1e-14))
    throw NumericalError(
        "singular stationarity system: equilibrium nonexistent or non-unique "
        "under the given structure (reciprocal condition " +
        std::to_string(rcond) + ")");
  const Vector x = lu.solve(sys.rhs);
  sol.Q = detail::scatter(g, x, sys.unknowns);
  sol.residual_max = projected_residual(g, sol.Q, s1, s2);
  const double scale = 1.0 + (sys.rhs.size() ? sys.rhs.cwiseAbs().maxCoeff() : 0.0);
  if (!(sol.residual_max <= 1e-6 * scale))
    throw NumericalError("ill-conditioned stationarity system: residual " +
                         std::to_string(sol.residual_max) +
                         " after solve, condition estimate " +
                         std::to_string(sol.condition_estimate));
  return sol;
}

// ---------------------------------------------------------------------------
// Single-team structured problem (best responses)
// ---------------------------------------------------------------------------

/// min over X in S of tr(M (T0 + P X) W (T0 + P X)ᵀ) + tr(U X W Xᵀ).
struct SingleTeamProblem {
  Matrix plant;         // P: states x inputs
  Matrix state_weight;  // M
  Matrix input_weight;  // U
  Matrix offset;        // T0: states x states
  Matrix W;             // symmetric second moment

  double cost(const Matrix& x) const {
    const Matrix t = offset + plant * x;
    return detail::weighted_trace(state_weight, t, W) +
           detail::weighted_trace(input_weight, x, W);
  }
  Matrix gradient(const Matrix& x) const {
    return 2.0 *
           (input_weight * x +
            plant.transpose() * state_weight * (offset + plant * x)) *
           W;
  }
};

struct SingleTeamSolution {
  Matrix X;
  double cost = 0.0;
  double min_curvature = 0.0;
};

inline SingleTeamSolution solve_single_team(const SingleTeamProblem& prob,
                                            const BoolMatrix& support) {
  std::vector<std::pair<Index, Index>> idx;
  for (Index r = 0; r < support.rows(); ++r)
    for (Index c = 0; c < support.cols(); ++c)
      if (support(r, c)) idx.emplace_back(r, c);
  const auto count = static_cast<Index>(idx.size());
  SingleTeamSolution sol;
  sol.X = Matrix::Zero(support.rows(), support.cols());
  if (count == 0) {
    sol.cost = prob.cost(sol.X);
    return sol;
  }

  // <E_a, 2 H E_b W> = 2 H(r_a, r_b) W(c_b, c_a), H = U + PᵀMP.
  const Matrix h = prob.input_weight +
                   prob.plant.transpose() * prob.state_weight * prob.plant;
  const Matrix g0 = prob.gradient(sol.X);
  Matrix a(count, count);
  Vector b(count);
  for (Index i = 0; i < count; ++i) {
    const auto [ri, ci] = idx[static_cast<std::size_t>(i)];
    b(i) = -g0(ri, ci);
    for (Index k = 0; k < count; ++k) {
      const auto [rk, ck] = idx[static_cast<std::size_t>(k)];
      a(i, k) = 2.0 * h(ri, rk) * prob.W(ck, ci);
    }
  }
  a = detail::symmetrized(a);
  sol.min_curvature = detail::min_eigenvalue(a);
  const double tol = 1e-10 * (1.0 + detail::max_abs(a));
  if (!(sol.min_curvature > tol))
    throw NumericalError(
        "best response unbounded below: curvature on the structure is not "
        "positive definite (min eigenvalue " +
        std::to_string(sol.min_curvature) + ")");
  const Vector x = a.llt().solve(b);
  for (Index i = 0; i < count; ++i) {
    const auto [r, c] = idx[static_cast<std::size_t>(i)];
    sol.X(r, c) = x(i);
  }
  sol.cost = prob.cost(sol.X);
  return sol;
}

struct BestResponse {
  Matrix strategy;
  double cost = 0.0;
  double min_curvature = 0.0;
};

/// Structured best response of `team` in feedforward form with the
/// opponent's strategy in `q` held fixed (the team's own entry is ignored).
inline BestResponse best_response_ff(const LiftedGame& g, const Pattern& s,
                                     const FeedforwardPair& q, Team team) {
  detail::check_pair_shape(g, q.Q1, q.Q2, "feedforward pair");
  detail::check_pattern_shape(g, s, team);
  const Team opp = other(team);
  SingleTeamProblem prob;
  prob.plant = g.plant_of(team);
  prob.state_weight = g.M(team);
  prob.input_weight = detail::input_weight(g, team, team);
  prob.offset = g.plant_of(opp) * q.of(opp);
  prob.offset.diagonal().array() += 1.0;
  prob.W = g.W;
  const SingleTeamSolution sol = solve_single_team(prob, s.mask);

  FeedforwardPair full = q;
  full.of(team) = sol.X;
  return {sol.X, cost_ff(g, full, team), sol.min_curvature};
}

}  // namespace mqi
