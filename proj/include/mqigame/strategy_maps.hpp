#pragma once

// Bijection between disturbance-feedforward and state-feedback strategy
// pairs. With P = [P12 P13] and stacked strategies Q = [Q1; Q2], K = [K1; K2]:
//
//   K = (I + Q P)^{-1} Q,        Q = K (I - P K)^{-1}.

#include <string>
#include <variant>

#include "mqigame/core.hpp"
#include "mqigame/lifting.hpp"
#include "mqigame/model.hpp"
#include "mqigame/static_game.hpp"
#include "mqigame/structure.hpp"

namespace mqi {

struct FeedbackPair {
  Matrix K1;  // m1 N x n(N+1)
  Matrix K2;  // m2 N x n(N+1)

  const Matrix& of(Team t) const { return t == Team::one ? K1 : K2; }
  Matrix& of(Team t) { return t == Team::one ? K1 : K2; }

  Matrix stacked() const {
    Matrix out(K1.rows() + K2.rows(), K1.cols());
    out << K1, K2;
    return out;
  }
  static FeedbackPair split(const Matrix& k, Index rows1) {
    return {k.topRows(rows1), k.bottomRows(k.rows() - rows1)};
  }
  static FeedbackPair zero(const LiftedGame& g) {
    return {Matrix::Zero(g.inputs(Team::one), g.states()),
            Matrix::Zero(g.inputs(Team::two), g.states())};
  }
};

namespace detail {

inline int stacked_input_stage(const LiftedGame& g, Index i) {
  const Index u = g.inputs(Team::one);
  return static_cast<int>(i < u ? i / g.m1 : (i - u) / g.m2);
}

// True when every entry coupling index b into index a with stage(b) >=
// stage(a) vanishes, i.e. the square loop map is nilpotent.
template <typename StageFn>
bool strictly_causal_loop(const Matrix& loop, StageFn stage) {
  for (Index a = 0; a < loop.rows(); ++a)
    for (Index b = 0; b < loop.cols(); ++b)
      if (stage(b) >= stage(a) && loop(a, b) != 0.0) return false;
  return true;
}

// Factorizes I + loop. A strictly causal loop proves invertibility; any
// other loop is checked for rank deficiency first.
inline Eigen::PartialPivLU<Matrix> factor_identity_plus(const Matrix& loop,
                                                        bool nilpotent,
                                                        const char* what) {
  Matrix op = loop;
  op.diagonal().array() += 1.0;
  if (!nilpotent) {
    Eigen::FullPivLU<Matrix> full(op);
    if (!full.isInvertible())
      throw NumericalError(std::string(what) + ": loop operator is singular (rank " +
                           std::to_string(full.rank()) + " of " +
                           std::to_string(op.rows()) +
                           "); the strategy is not causal");
  }
  return Eigen::PartialPivLU<Matrix>(op);
}

}  // namespace detail

/// g: feedforward pair to the equivalent feedback pair (no structure handling).
inline FeedbackPair to_feedback(const LiftedGame& g, const FeedforwardPair& q) {
  detail::check_pair_shape(g, q.Q1, q.Q2, "feedforward pair");
  const Matrix qs = q.stacked();
  const Matrix loop = qs * g.stacked_plant();
  const bool nilpotent = detail::strictly_causal_loop(
      loop, [&](Index i) { return detail::stacked_input_stage(g, i); });
  const auto lu = detail::factor_identity_plus(loop, nilpotent, "to_feedback");
  return FeedbackPair::split(lu.solve(qs), q.Q1.rows());
}

/// g⁻¹: feedback pair to the equivalent feedforward pair.
inline FeedforwardPair to_feedforward(const LiftedGame& g,
                                      const FeedbackPair& k) {
  detail::check_pair_shape(g, k.K1, k.K2, "feedback pair");
  const Matrix ks = k.stacked();
  const Matrix loop = -(g.stacked_plant() * ks);
  const bool nilpotent = detail::strictly_causal_loop(
      loop, [&](Index i) { return static_cast<int>(i / g.n); });
  // Q = K (I - P K)^{-1}  <=>  (I - P K)ᵀ Qᵀ = Kᵀ
  const auto lu = detail::factor_identity_plus(loop.transpose(), nilpotent,
                                               "to_feedforward");
  const Matrix q = lu.solve(ks.transpose()).transpose();
  return FeedforwardPair::split(q, k.K1.rows());
}

struct OffSupport {
  double magnitude = 0.0;
  Team team = Team::one;
  Index row = -1;
  Index col = -1;
};

namespace detail {

inline OffSupport largest_off_support(const Matrix& a, const Matrix& b,
                                      const Pattern& s1, const Pattern& s2) {
  OffSupport worst;
  for (Team t : {Team::one, Team::two}) {
    const Matrix& m = t == Team::one ? a : b;
    const Pattern& s = t == Team::one ? s1 : s2;
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j)
        if (!s(i, j) && std::abs(m(i, j)) > worst.magnitude)
          worst = {std::abs(m(i, j)), t, i, j};
  }
  return worst;
}

}  // namespace detail

/// g with structure enforcement. Off-support entries below 1e-12·‖K‖∞ are
/// snapped to zero once mutual quadratic invariance has been confirmed;
/// anything larger is reported as a structure violation.
inline FeedbackPair to_feedback(const LiftedGame& g, const FeedforwardPair& q,
                                const Pattern& s1, const Pattern& s2) {
  FeedbackPair k = to_feedback(g, q);
  const double scale = std::max(detail::max_abs(k.K1), detail::max_abs(k.K2));
  const OffSupport worst = detail::largest_off_support(k.K1, k.K2, s1, s2);
  if (worst.magnitude > 1e-12 * scale)
    throw StructuralError(
        "feedback strategy leaves the information structure: K" +
        std::to_string(team_index(worst.team) + 1) + "(" +
        std::to_string(worst.row) + "," + std::to_string(worst.col) +
        ") = " + std::to_string(worst.magnitude));
  if (is_mqi(s1, s2, g.plant).invariant) {
    k.K1 = detail::masked(k.K1, s1.mask);
    k.K2 = detail::masked(k.K2, s2.mask);
  }
  return k;
}

inline double cost_fb(const LiftedGame& g, const FeedbackPair& k, Team team) {
  return cost_ff(g, to_feedforward(g, k), team);
}

/// Maps the pair through g (feedforward input) or g⁻¹ (feedback input) and
/// reports the largest off-support magnitude of the image.
inline OffSupport check_structure_preservation(const LiftedGame& g,
                                               const Pattern& s1,
                                               const Pattern& s2,
                                               const FeedforwardPair& q) {
  const FeedbackPair k = to_feedback(g, q);
  return detail::largest_off_support(k.K1, k.K2, s1, s2);
}

inline OffSupport check_structure_preservation(const LiftedGame& g,
                                               const Pattern& s1,
                                               const Pattern& s2,
                                               const FeedbackPair& k) {
  const FeedforwardPair q = to_feedforward(g, k);
  return detail::largest_off_support(q.Q1, q.Q2, s1, s2);
}

// ---------------------------------------------------------------------------
// Strategy JSON
// ---------------------------------------------------------------------------

using StrategyPair = std::variant<FeedforwardPair, FeedbackPair>;

inline json strategy_to_json(const FeedforwardPair& q) {
  json j = json::object();
  j["form"] = "feedforward";
  j["Q1"] = detail::matrix_to_json(q.Q1);
  j["Q2"] = detail::matrix_to_json(q.Q2);
  return j;
}

inline json strategy_to_json(const FeedbackPair& k) {
  json j = json::object();
  j["form"] = "feedback";
  j["K1"] = detail::matrix_to_json(k.K1);
  j["K2"] = detail::matrix_to_json(k.K2);
  return j;
}

inline StrategyPair strategy_from_json(const json& j) {
  if (!j.is_object() || !j.contains("form"))
    throw ValidationError("schema violation: strategy needs a 'form' field");
  const std::string form = j.at("form").get<std::string>();
  if (form == "feedforward") {
    detail::reject_unknown(j, {"form", "Q1", "Q2"}, "strategy");
    return FeedforwardPair{
        detail::matrix_from_json(detail::require(j, "Q1", "strategy"), "Q1"),
        detail::matrix_from_json(detail::require(j, "Q2", "strategy"), "Q2")};
  }
  if (form == "feedback") {
    detail::reject_unknown(j, {"form", "K1", "K2"}, "strategy");
    return FeedbackPair{
        detail::matrix_from_json(detail::require(j, "K1", "strategy"), "K1"),
        detail::matrix_from_json(detail::require(j, "K2", "strategy"), "K2")};
  }
  throw ValidationError("schema violation: unknown strategy form '" + form +
                        "'");
}

}  // namespace mqi
