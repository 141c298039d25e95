#pragma once

// Random generators and independent reference computations shared by the
// unit tests and the acceptance binary.

#include <random>
#include <vector>

#include "mqigame/mqigame.hpp"

namespace mqi::testkit {

using Rng = std::mt19937_64;

inline Matrix gaussian(Rng& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

inline Matrix random_spd(Rng& rng, Index n, double floor = 0.5) {
  const Matrix l = gaussian(rng, n, n, 0.7);
  return l * l.transpose() + floor * Matrix::Identity(n, n);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline StageCost random_cost(Rng& rng, int n, int m1, int m2, int N,
                             double v_sign) {
  StageCost c;
  for (int t = 0; t < N; ++t) {
    c.M.push_back(random_spd(rng, n, 0.1));
    c.R.push_back(random_spd(rng, m1, 1.0));
    c.V.push_back(v_sign * random_spd(rng, m2, 1.0));
  }
  return c;
}

inline StructureSpec random_structure(Rng& rng, int n, int m, int N) {
  std::vector<int> own;
  for (int i = 0; i < n; ++i)
    if (uniform_int(rng, 0, 1)) own.push_back(i);
  if (own.empty()) own.push_back(uniform_int(rng, 0, n - 1));
  switch (uniform_int(rng, 0, 3)) {
    case 0: return StructureSpec::full_information();
    case 1: return StructureSpec::delayed_sharing(own);
    case 2: return StructureSpec::decentralized(own);
    default: {
      BoolMatrix mask(Index(m) * N, Index(n) * (N + 1));
      for (Index r = 0; r < mask.rows(); ++r)
        for (Index c = 0; c < mask.cols(); ++c)
          mask(r, c) = c / n <= r / m && uniform_int(rng, 0, 2) > 0;
      return StructureSpec::explicit_mask(mask);
    }
  }
}

struct InstanceShape {
  int max_n = 3, max_m = 3, max_N = 4;
};

/// Random general-sum instance with full information unless `structured`.
inline ProblemInstance random_instance(Rng& rng, bool structured = false,
                                       InstanceShape shape = {}) {
  ProblemInstance p;
  p.n = uniform_int(rng, 1, shape.max_n);
  p.m1 = uniform_int(rng, 1, shape.max_m);
  p.m2 = uniform_int(rng, 1, shape.max_m);
  p.N = uniform_int(rng, 1, shape.max_N);
  p.A = gaussian(rng, p.n, p.n, 0.6);
  p.B1 = gaussian(rng, p.n, p.m1);
  p.B2 = gaussian(rng, p.n, p.m2);
  p.Sigma0 = random_spd(rng, p.n);
  for (int t = 0; t < p.N; ++t) p.SigmaT.push_back(random_spd(rng, p.n));
  p.cost1 = random_cost(rng, p.n, p.m1, p.m2, p.N, 1.0);
  p.cost2 = random_cost(rng, p.n, p.m2, p.m1, p.N, 1.0);
  std::swap(p.cost2.R, p.cost2.V);  // R is always m1 x m1, V m2 x m2
  if (structured) {
    p.structure1 = random_structure(rng, p.n, p.m1, p.N);
    p.structure2 = random_structure(rng, p.n, p.m2, p.N);
  }
  return p;
}

/// Fills the support of `s` with Gaussian entries.
inline Matrix random_on(Rng& rng, const BoolMatrix& s, double scale = 0.5) {
  Matrix m = gaussian(rng, s.rows(), s.cols(), scale);
  return detail::masked(m, s);
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Cost by explicit closed-loop covariance of (w, u, v): builds the input map
/// from w directly and evaluates E[x'Mx + u'Ru + v'Vv] without the cost_ff
/// formula.
inline double reference_cost(const LiftedGame& g, const FeedforwardPair& q,
                             Team team) {
  const Matrix u_of_w = q.Q1 * g.P11;
  const Matrix v_of_w = q.Q2 * g.P11;
  const Matrix x_of_w = g.P11 + g.P12 * u_of_w + g.P13 * v_of_w;
  const auto quad = [&](const Matrix& map, const Matrix& weight) {
    return (map.transpose() * weight * map * g.SigmaW).trace();
  };
  return quad(x_of_w, g.M(team)) + quad(u_of_w, g.R(team)) +
         quad(v_of_w, g.V(team));
}

/// Central finite-difference gradient of J_team with respect to Q_wrt.
inline Matrix fd_gradient(const LiftedGame& g, const FeedforwardPair& q,
                          Team team, Team wrt, double h = 1e-5) {
  const Matrix& base = q.of(wrt);
  Matrix grad(base.rows(), base.cols());
  for (Index i = 0; i < base.rows(); ++i)
    for (Index j = 0; j < base.cols(); ++j) {
      FeedforwardPair plus = q, minus = q;
      plus.of(wrt)(i, j) += h;
      minus.of(wrt)(i, j) -= h;
      grad(i, j) =
          (cost_ff(g, plus, team) - cost_ff(g, minus, team)) / (2.0 * h);
    }
  return grad;
}

/// QI by random numeric sampling: S ⊆ pattern and K P K stays inside S for
/// generic K supported on S, with P drawn generically on its support.
inline bool numeric_qi(Rng& rng, const BoolMatrix& s, const BoolMatrix& p,
                       int trials = 3) {
  for (int t = 0; t < trials; ++t) {
    const Matrix k = random_on(rng, s, 1.0);
    Matrix pn = gaussian(rng, p.rows(), p.cols());
    pn = detail::masked(pn, p);
    const Matrix kpk = k * pn * k;
    for (Index i = 0; i < kpk.rows(); ++i)
      for (Index j = 0; j < kpk.cols(); ++j)
        if (!s(i, j) && std::abs(kpk(i, j)) > 1e-9) return false;
  }
  return true;
}

/// Random plant data on random supports; real entries keep cancellation
/// non-generic so numeric and structural supports coincide.
struct RandomPlant {
  Matrix A, B1, B2;
};

inline RandomPlant random_sparse_plant(Rng& rng, int n, int m1, int m2,
                                       double density = 0.5) {
  std::bernoulli_distribution keep(density);
  const auto sparse = [&](Index r, Index c) {
    Matrix m = gaussian(rng, r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j)
        if (!keep(rng)) m(i, j) = 0.0;
    return m;
  };
  return {sparse(n, n), sparse(n, m1), sparse(n, m2)};
}

/// Numeric lifted [P12 P13] built by forward simulation of unit inputs,
/// independent of the library's lifting code.
inline Matrix simulated_plant(const RandomPlant& pl, int N) {
  const Index n = pl.A.rows(), m1 = pl.B1.cols(), m2 = pl.B2.cols();
  Matrix out = Matrix::Zero(n * (N + 1), (m1 + m2) * N);
  for (Index col = 0; col < out.cols(); ++col) {
    const bool first = col < m1 * N;
    const Index local = first ? col : col - m1 * N;
    const Index m = first ? m1 : m2;
    const Index t0 = local / m;
    Vector x = Vector::Zero(n);
    for (Index t = 0; t < N; ++t) {
      Vector drive = Vector::Zero(n);
      if (t == t0) drive = (first ? pl.B1 : pl.B2).col(local % m);
      x = pl.A * x + drive;
      out.block(n * (t + 1), col, n, 1) = x;
    }
  }
  return out;
}

/// MQI by sampling: K with entries in {±1, ±2} on the stacked pattern, and
/// the numeric support of K P K must stay inside it.
inline bool brute_force_mqi(Rng& rng, const BoolMatrix& stacked,
                            const Matrix& plant, int trials = 50) {
  std::uniform_int_distribution<int> pick(0, 3);
  const double values[] = {-2.0, -1.0, 1.0, 2.0};
  for (int t = 0; t < trials; ++t) {
    Matrix k = Matrix::Zero(stacked.rows(), stacked.cols());
    for (Index i = 0; i < k.rows(); ++i)
      for (Index j = 0; j < k.cols(); ++j)
        if (stacked(i, j)) k(i, j) = values[pick(rng)];
    const Matrix kpk = k * plant * k;
    const double scale = 1.0 + kpk.cwiseAbs().maxCoeff();
    for (Index i = 0; i < kpk.rows(); ++i)
      for (Index j = 0; j < kpk.cols(); ++j)
        if (!stacked(i, j) && std::abs(kpk(i, j)) > 1e-9 * scale) return false;
  }
  return true;
}

}  // namespace mqi::testkit
