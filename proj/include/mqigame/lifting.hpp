#pragma once

// Stacked-trajectory representation of the finite-horizon game:
//
//   x = P11 w + P12 u + P13 v,   P11 = (I - Z A)^{-1},
//
// with x = (x(0..N)), w = (x(0), w(0..N-1)), u = (u(0..N-1)), v = (v(0..N-1)).

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <utility>
#include <vector>

#include "mqigame/core.hpp"
#include "mqigame/model.hpp"
#include "mqigame/structure.hpp"

namespace mqi {

struct LiftedGame {
  int n = 0, m1 = 0, m2 = 0, N = 0;
  Matrix P11, P12, P13;
  std::array<Matrix, 2> Mcal, Rcal, Vcal;  // indexed by team
  Matrix SigmaW;                           // blockdiag(Σ0, Σ_w(0..N-1))
  Matrix W;                                // P11 SigmaW P11ᵀ
  PlantPattern plant;                      // structural supports of P12, P13

  Index states() const { return Index(n) * (N + 1); }
  Index inputs(Team t) const { return Index(t == Team::one ? m1 : m2) * N; }
  const Matrix& M(Team t) const { return Mcal[team_index(t)]; }
  const Matrix& R(Team t) const { return Rcal[team_index(t)]; }
  const Matrix& V(Team t) const { return Vcal[team_index(t)]; }
  const Matrix& plant_of(Team t) const { return t == Team::one ? P12 : P13; }

  /// [P12 P13]
  Matrix stacked_plant() const {
    Matrix out(states(), P12.cols() + P13.cols());
    out << P12, P13;
    return out;
  }
};

/// Shift matrix Z: identity blocks on the first block subdiagonal.
inline Matrix shift_matrix(int n, int N) {
  const Index size = Index(n) * (N + 1);
  Matrix z = Matrix::Zero(size, size);
  for (int t = 0; t < N; ++t)
    z.block(Index(t + 1) * n, Index(t) * n, n, n).setIdentity();
  return z;
}

inline Matrix lifted_dynamics(const Matrix& a, int N) {
  return detail::block_diag(std::vector<Matrix>(N + 1, a));
}

/// blockdiag(B, ..., B) with a trailing zero block row: n(N+1) x mN.
inline Matrix lifted_input(const Matrix& b, int N) {
  const Index n = b.rows(), m = b.cols();
  Matrix out = Matrix::Zero(n * (N + 1), m * N);
  for (int t = 0; t < N; ++t) out.block(t * n, t * m, n, m) = b;
  return out;
}

inline LiftedGame lift(const ProblemInstance& p) {
  const auto report = validate(p);
  if (!report.ok()) throw ValidationError(report.joined());

  LiftedGame g;
  g.n = p.n;
  g.m1 = p.m1;
  g.m2 = p.m2;
  g.N = p.N;
  const Index size = g.states();

  const Matrix z = shift_matrix(p.n, p.N);
  const Matrix za = z * lifted_dynamics(p.A, p.N);
  // Z A is nilpotent of index N+1, so the Neumann sum is exact.
  g.P11 = Matrix::Identity(size, size);
  Matrix power = Matrix::Identity(size, size);
  for (int k = 1; k <= p.N; ++k) {
    power = power * za;
    g.P11 += power;
  }
  const Matrix p11z = g.P11 * z;
  g.P12 = p11z * lifted_input(p.B1, p.N);
  g.P13 = p11z * lifted_input(p.B2, p.N);

  for (Team t : {Team::one, Team::two}) {
    const StageCost& c = p.cost(t);
    std::vector<Matrix> m_blocks{c.M0 ? *c.M0 : Matrix::Zero(p.n, p.n)};
    m_blocks.insert(m_blocks.end(), c.M.begin(), c.M.end());
    g.Mcal[team_index(t)] = detail::block_diag(m_blocks);
    g.Rcal[team_index(t)] = detail::block_diag(c.R);
    g.Vcal[team_index(t)] = detail::block_diag(c.V);
  }

  std::vector<Matrix> noise{p.Sigma0};
  noise.insert(noise.end(), p.SigmaT.begin(), p.SigmaT.end());
  g.SigmaW = detail::block_diag(noise);
  g.W = detail::symmetrized(g.P11 * g.SigmaW * g.P11.transpose());
  g.plant = structural_plant(p);
  return g;
}

/// Full cost Hessians over (w, u, v), one per team, explicitly symmetrized.
inline std::pair<Matrix, Matrix> hessians(const LiftedGame& g) {
  const Index nw = g.states(), nu = g.inputs(Team::one),
              nv = g.inputs(Team::two);
  Matrix p(nw, nw + nu + nv);
  p << g.P11, g.P12, g.P13;
  const auto build = [&](Team t) {
    Matrix h = p.transpose() * g.M(t) * p;
    h.block(nw, nw, nu, nu) += g.R(t);
    h.block(nw + nu, nw + nu, nv, nv) += g.V(t);
    return detail::symmetrized(h);
  };
  return {build(Team::one), build(Team::two)};
}

// ---------------------------------------------------------------------------
// Definiteness conditions for existence and uniqueness of the equilibrium
// ---------------------------------------------------------------------------

struct DefinitenessCheck {
  std::string name;
  double min_eigenvalue = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct CheckReport {
  std::vector<DefinitenessCheck> checks;
  bool pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const auto& c) { return c.pass; });
  }
};

namespace detail {

inline DefinitenessCheck definiteness(std::string name, const Matrix& m) {
  const Matrix s = symmetrized(m);
  DefinitenessCheck c;
  c.name = std::move(name);
  c.min_eigenvalue = min_eigenvalue(s);
  c.tolerance = 1e-10 * (1.0 + max_abs(s));
  c.pass = c.min_eigenvalue > c.tolerance;
  return c;
}

inline Matrix two_by_two(const Matrix& a, const Matrix& b, const Matrix& d) {
  Matrix out(a.rows() + d.rows(), a.cols() + d.cols());
  out << a, b, b.transpose(), d;
  return out;
}

}  // namespace detail

/// Joint definiteness of the input blocks of the two Hessians. `nu` is the
/// size of the u block; the w block is H.rows() - nu - nv.
inline CheckReport assumption1_static(const Matrix& h1, const Matrix& h2,
                                      Index nu, Index nv) {
  const Index nw = h1.rows() - nu - nv;
  const auto uu = [&](const Matrix& h) { return h.block(nw, nw, nu, nu); };
  const auto uv = [&](const Matrix& h) { return h.block(nw, nw + nu, nu, nv); };
  const auto vv = [&](const Matrix& h) {
    return h.block(nw + nu, nw + nu, nv, nv);
  };
  CheckReport r;
  r.checks.push_back(detail::definiteness(
      "[H1_uu H1_uv; H1_uv' H2_vv]",
      detail::two_by_two(uu(h1), uv(h1), vv(h2))));
  r.checks.push_back(detail::definiteness(
      "[H1_uu H2_uv; H2_uv' H2_vv]",
      detail::two_by_two(uu(h1), uv(h2), vv(h2))));
  return r;
}

inline CheckReport assumption1_static(const LiftedGame& g) {
  const auto [h1, h2] = hessians(g);
  return assumption1_static(h1, h2, g.inputs(Team::one), g.inputs(Team::two));
}

/// Saddle-point condition for zero-sum games, using team 1's lifted costs.
inline CheckReport assumption1_zerosum(const LiftedGame& g) {
  const Matrix& m = g.M(Team::one);
  const Matrix uu = g.P12.transpose() * m * g.P12 + g.R(Team::one);
  const Matrix uv = g.P12.transpose() * m * g.P13;
  const Matrix vv = -(g.P13.transpose() * m * g.P13 + g.V(Team::one));
  CheckReport r;
  r.checks.push_back(detail::definiteness(
      "[P12'MP12+R P12'MP13; P13'MP12 -(P13'MP13+V)]",
      detail::two_by_two(uu, uv, vv)));
  return r;
}

// ---------------------------------------------------------------------------
// CSV dump
// ---------------------------------------------------------------------------

inline void write_csv(const Matrix& m, std::ostream& os) {
  os << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
}

/// One CSV file per lifted matrix, row-major, 17 significant digits.
inline std::vector<std::filesystem::path> write_lifted_csv(
    const LiftedGame& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::vector<std::pair<std::string, const Matrix*>> items = {
      {"P11", &g.P11},        {"P12", &g.P12},         {"P13", &g.P13},
      {"Mcal1", &g.Mcal[0]},  {"Mcal2", &g.Mcal[1]},   {"Rcal1", &g.Rcal[0]},
      {"Rcal2", &g.Rcal[1]},  {"Vcal1", &g.Vcal[0]},   {"Vcal2", &g.Vcal[1]},
      {"SigmaW", &g.SigmaW},  {"W", &g.W}};
  std::vector<std::filesystem::path> written;
  for (const auto& [name, m] : items) {
    const auto path = dir / (name + ".csv");
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    write_csv(*m, out);
    written.push_back(path);
  }
  return written;
}

}  // namespace mqi
