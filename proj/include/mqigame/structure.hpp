#pragma once

// Information structures as boolean matrices over (input, state) pairs and
// the structural quadratic invariance tests.
//
// A pattern for a team with m inputs has shape (m*N) x (n*(N+1)). Row j is
// input coordinate j % m at stage j / m; column k is state coordinate k % n
// at stage k / n.

#include <optional>
#include <string>
#include <vector>

#include "mqigame/core.hpp"
#include "mqigame/model.hpp"

namespace mqi {

struct Pattern {
  BoolMatrix mask;
  int n = 0;
  int m = 0;
  int N = 0;

  Pattern() = default;
  Pattern(int n_, int m_, int N_)
      : mask(BoolMatrix::Constant(Index(m_) * N_, Index(n_) * (N_ + 1), false)),
        n(n_), m(m_), N(N_) {}
  Pattern(BoolMatrix mask_, int n_, int m_, int N_)
      : mask(std::move(mask_)), n(n_), m(m_), N(N_) {}

  Index rows() const { return mask.rows(); }
  Index cols() const { return mask.cols(); }
  int input_stage(Index j) const { return static_cast<int>(j / m); }
  int state_stage(Index k) const { return static_cast<int>(k / n); }
  int state_coord(Index k) const { return static_cast<int>(k % n); }
  Index count() const { return mask.count(); }

  bool operator()(Index j, Index k) const { return mask(j, k); }
};

/// Causal controllers with full information: u(t) sees x(0..t).
inline Pattern build_fi(int n, int m, int N) {
  Pattern p(n, m, N);
  for (Index j = 0; j < p.rows(); ++j)
    for (Index k = 0; k < p.cols(); ++k)
      p.mask(j, k) = p.state_stage(k) <= p.input_stage(j);
  return p;
}

/// One-step delay information sharing: full information up to t-1, and only
/// the coordinates in `own` at the current stage.
inline Pattern build_delayed_sharing(int n, int m, int N,
                                     const std::vector<int>& own) {
  if (own.empty())
    throw ValidationError(
        "delayed sharing structure needs at least one own coordinate");
  Pattern p = build_fi(n, m, N);
  std::vector<bool> mine(static_cast<std::size_t>(n), false);
  for (int c : own) mine.at(static_cast<std::size_t>(c)) = true;
  for (Index j = 0; j < p.rows(); ++j)
    for (Index k = 0; k < p.cols(); ++k)
      if (p.state_stage(k) == p.input_stage(j) &&
          !mine[static_cast<std::size_t>(p.state_coord(k))])
        p.mask(j, k) = false;
  return p;
}

/// Decentralized: causal access to the coordinates in `own` only.
inline Pattern build_decentralized(int n, int m, int N,
                                   const std::vector<int>& own) {
  if (own.empty())
    throw ValidationError(
        "decentralized structure needs at least one own coordinate");
  Pattern p = build_fi(n, m, N);
  std::vector<bool> mine(static_cast<std::size_t>(n), false);
  for (int c : own) mine.at(static_cast<std::size_t>(c)) = true;
  for (Index k = 0; k < p.cols(); ++k)
    if (!mine[static_cast<std::size_t>(p.state_coord(k))])
      p.mask.col(k).setConstant(false);
  return p;
}

inline Pattern build_pattern(const StructureSpec& spec, int n, int m, int N) {
  switch (spec.kind) {
    case StructureKind::full_information:
      return build_fi(n, m, N);
    case StructureKind::delayed_sharing:
      return build_delayed_sharing(n, m, N, spec.own);
    case StructureKind::decentralized:
      return build_decentralized(n, m, N, spec.own);
    case StructureKind::explicit_mask:
      if (spec.mask.rows() != Index(m) * N ||
          spec.mask.cols() != Index(n) * (N + 1))
        throw ValidationError("explicit mask has wrong shape");
      return Pattern(spec.mask, n, m, N);
  }
  throw ValidationError("unknown structure kind");
}

inline Pattern instance_pattern(const ProblemInstance& p, Team team) {
  return build_pattern(p.structure(team), p.n, p.inputs(team), p.N);
}

struct CausalityReport {
  bool causal = true;
  std::optional<std::pair<Index, Index>> first_violation;  // (row, col)
};

inline CausalityReport is_causal(const Pattern& p) {
  for (Index j = 0; j < p.rows(); ++j)
    for (Index k = 0; k < p.cols(); ++k)
      if (p.mask(j, k) && p.state_stage(k) > p.input_stage(j))
        return {false, std::make_pair(j, k)};
  return {};
}

/// Worst-case supports of P12 and P13 over the boolean semiring.
struct PlantPattern {
  BoolMatrix u;  // n(N+1) x m1 N
  BoolMatrix v;  // n(N+1) x m2 N

  BoolMatrix stacked() const {
    BoolMatrix out(u.rows(), u.cols() + v.cols());
    out << u, v;
    return out;
  }
};

namespace detail {

inline BoolMatrix lifted_input_support(const BoolMatrix& b, int n, int N) {
  const Index m = b.cols();
  BoolMatrix out = BoolMatrix::Constant(Index(n) * (N + 1), m * N, false);
  for (int t = 0; t < N; ++t) out.block(Index(t) * n, t * m, n, m) = b;
  return out;
}

inline BoolMatrix shift_support(int n, int N) {
  const Index size = Index(n) * (N + 1);
  BoolMatrix z = BoolMatrix::Constant(size, size, false);
  for (int t = 0; t < N; ++t)
    z.block(Index(t + 1) * n, Index(t) * n, n, n) =
        BoolMatrix::Identity(n, n);
  return z;
}

}  // namespace detail

/// Supports of P12, P13 from the supports of A, B1, B2 (no cancellation).
inline PlantPattern structural_plant(const BoolMatrix& a, const BoolMatrix& b1,
                                     const BoolMatrix& b2, int N) {
  const int n = static_cast<int>(a.rows());
  const Index size = Index(n) * (N + 1);
  BoolMatrix a_lift = BoolMatrix::Constant(size, size, false);
  for (int t = 0; t <= N; ++t) a_lift.block(Index(t) * n, Index(t) * n, n, n) = a;
  const BoolMatrix z = detail::shift_support(n, N);
  const BoolMatrix za = detail::bool_product(z, a_lift);

  BoolMatrix closure = BoolMatrix::Identity(size, size);
  BoolMatrix power = BoolMatrix::Identity(size, size);
  for (int k = 1; k <= N; ++k) {
    power = detail::bool_product(power, za);
    closure = closure.array() || power.array();
  }
  const BoolMatrix cz = detail::bool_product(closure, z);
  return {detail::bool_product(cz, detail::lifted_input_support(b1, n, N)),
          detail::bool_product(cz, detail::lifted_input_support(b2, n, N))};
}

inline PlantPattern structural_plant(const ProblemInstance& p) {
  return structural_plant(detail::support(p.A), detail::support(p.B1),
                          detail::support(p.B2), p.N);
}

// ---------------------------------------------------------------------------
// Quadratic invariance
// ---------------------------------------------------------------------------

/// Entry (row, col) of S*P*S outside S, reached through
/// input `row` <- state `via_state` <- input `via_input` <- state `col`.
struct QiViolation {
  Index row;
  Index col;
  Index via_state;
  Index via_input;
};

struct QiReport {
  bool invariant = true;
  std::vector<QiViolation> violations;  // at most kMaxViolations
  Index total_violations = 0;

  static constexpr std::size_t kMaxViolations = 20;
};

/// Structural QI of `s` ((rows) x (states)) under plant `p` ((states) x (rows)).
inline QiReport quadratic_invariance(const BoolMatrix& s, const BoolMatrix& p) {
  if (p.rows() != s.cols() || p.cols() != s.rows())
    throw ValidationError("quadratic invariance: pattern is " +
                          std::to_string(s.rows()) + "x" +
                          std::to_string(s.cols()) + " but plant is " +
                          std::to_string(p.rows()) + "x" +
                          std::to_string(p.cols()));
  const BoolMatrix sp = detail::bool_product(s, p);
  const BoolMatrix t = detail::bool_product(sp, s);
  const auto witness = [&](Index i, Index j) -> QiViolation {
    for (Index k = 0; k < s.rows(); ++k) {
      if (!sp(i, k) || !s(k, j)) continue;
      for (Index l = 0; l < s.cols(); ++l)
        if (s(i, l) && p(l, k)) return {i, j, l, k};
    }
    return {i, j, -1, -1};  // unreachable when t(i, j) is set
  };
  QiReport report;
  for (Index i = 0; i < t.rows(); ++i)
    for (Index j = 0; j < t.cols(); ++j) {
      if (!t(i, j) || s(i, j)) continue;
      report.invariant = false;
      ++report.total_violations;
      if (report.violations.size() < QiReport::kMaxViolations)
        report.violations.push_back(witness(i, j));
    }
  return report;
}

inline BoolMatrix stack_rows(const BoolMatrix& top, const BoolMatrix& bottom) {
  BoolMatrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

/// Mutual quadratic invariance: S1 x S2 is QI under [P12 P13].
inline QiReport is_mqi(const Pattern& s1, const Pattern& s2,
                       const PlantPattern& plant) {
  if (s1.cols() != s2.cols())
    throw ValidationError("is_mqi: patterns have different state dimensions");
  if (plant.u.cols() != s1.rows() || plant.v.cols() != s2.rows())
    throw ValidationError("is_mqi: plant input dimensions do not match patterns");
  return quadratic_invariance(stack_rows(s1.mask, s2.mask), plant.stacked());
}

/// Label helpers for reports: "u(1)", "v2(0)", "x1(3)".
inline std::string input_label(Index stacked_row, int m1, int m2, int N) {
  const bool first = stacked_row < Index(m1) * N;
  const int m = first ? m1 : m2;
  const Index j = first ? stacked_row : stacked_row - Index(m1) * N;
  std::string name = first ? "u" : "v";
  if (m > 1) name += std::to_string(j % m + 1);
  return name + "(" + std::to_string(j / m) + ")";
}

inline std::string state_label(Index k, int n) {
  std::string name = "x";
  if (n > 1) name += std::to_string(k % n + 1);
  return name + "(" + std::to_string(k / n) + ")";
}

inline std::string describe(const QiViolation& v, int n, int m1, int m2,
                            int N) {
  return input_label(v.row, m1, m2, N) + "<-" + state_label(v.via_state, n) +
         "<-" + input_label(v.via_input, m1, m2, N) + "<-" +
         state_label(v.col, n);
}

/// Star/zero grid, one row per input.
inline std::string to_grid(const BoolMatrix& mask) {
  std::string out;
  for (Index j = 0; j < mask.rows(); ++j) {
    for (Index k = 0; k < mask.cols(); ++k) {
      if (k) out += ' ';
      out += mask(j, k) ? '*' : '0';
    }
    out += '\n';
  }
  return out;
}

}  // namespace mqi
