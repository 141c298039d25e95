#pragma once

// Monte Carlo rollouts of the closed loop and an exact covariance-propagation
// oracle for the same per-term expected costs.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mqigame/core.hpp"
#include "mqigame/model.hpp"
#include "mqigame/static_game.hpp"
#include "mqigame/strategy_maps.hpp"

namespace mqi {

/// Per-term expected cost of one team: one state term per coordinate
/// (row i of the quadratic form x' M x), then the u and v input terms.
struct CostBreakdown {
  std::vector<std::string> labels;
  Vector values;

  double total() const { return values.sum(); }
};

inline std::vector<std::string> breakdown_labels(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i)
    out.push_back(n == 1 ? "x" : "x" + std::to_string(i + 1));
  out.push_back("u");
  out.push_back("v");
  return out;
}

struct SimulationReport {
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> labels;
  std::array<double, 2> mean{};
  std::array<double, 2> standard_error{};
  std::array<Vector, 2> term_mean;
  std::array<Vector, 2> term_standard_error;
  std::array<double, 2> analytic{};
};

namespace detail {

inline const Matrix state_weight(const StageCost& c, int t, int n) {
  if (t == 0) return c.M0 ? *c.M0 : Matrix::Zero(n, n);
  return c.M[static_cast<std::size_t>(t - 1)];
}

/// Symmetric square root with negative eigenvalues clipped at zero.
inline Matrix covariance_root(const Matrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(sigma));
  const Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent substream for one sample: keyed by (seed, sample id) only, so
// results do not depend on how samples are split across workers.
inline std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t id) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(~id)));
}

// Rounding residue from g is tolerated; it is never read by the rollout.
inline void require_causal(const Matrix& k, int n, int m, const char* name) {
  const double floor = 1e-12 * max_abs(k);
  for (Index r = 0; r < k.rows(); ++r)
    for (Index c = 0; c < k.cols(); ++c)
      if (c / n > r / m && std::abs(k(r, c)) > floor)
        throw StructuralError(std::string("non-causal strategy: ") + name +
                              "(" + std::to_string(r) + "," +
                              std::to_string(c) + ") couples a future state");
}

// Per-term costs of one realized trajectory for team `c`.
inline void accumulate_terms(const ProblemInstance& p, const StageCost& c,
                             const Matrix& x, const Matrix& u, const Matrix& v,
                             double* out) {
  const int n = p.n;
  for (int i = 0; i < n + 2; ++i) out[i] = 0.0;
  for (int t = 0; t <= p.N; ++t) {
    if (t > 0 || c.M0) {
      const Vector mx = state_weight(c, t, n) * x.col(t);
      for (int i = 0; i < n; ++i) out[i] += x(i, t) * mx(i);
    }
    if (t < p.N) {
      out[n] += u.col(t).dot(c.R[static_cast<std::size_t>(t)] * u.col(t));
      out[n + 1] += v.col(t).dot(c.V[static_cast<std::size_t>(t)] * v.col(t));
    }
  }
}

}  // namespace detail

/// Closed-loop rollouts with x(0) ~ N(0, Σ0), w(t) ~ N(0, Σ_t).
///
/// Feedback pairs act on realized states; feedforward pairs act on the
/// free-response trajectory. `workers` only affects speed: every sample uses
/// its own substream and the reduction runs in sample order.
inline SimulationReport rollout_cost(const ProblemInstance& p,
                                     const StrategyPair& pair,
                                     std::uint64_t samples, std::uint64_t seed,
                                     unsigned workers = 0) {
  if (samples < 1) throw ValidationError("samples must be >= 1");
  const auto report = validate(p);
  if (!report.ok()) throw ValidationError(report.joined());

  const bool feedback = std::holds_alternative<FeedbackPair>(pair);
  const Matrix& s1 = feedback ? std::get<FeedbackPair>(pair).K1
                              : std::get<FeedforwardPair>(pair).Q1;
  const Matrix& s2 = feedback ? std::get<FeedbackPair>(pair).K2
                              : std::get<FeedforwardPair>(pair).Q2;
  const Index cols = Index(p.n) * (p.N + 1);
  if (s1.rows() != Index(p.m1) * p.N || s1.cols() != cols ||
      s2.rows() != Index(p.m2) * p.N || s2.cols() != cols)
    throw ValidationError("strategy pair has the wrong shape for the instance");
  detail::require_causal(s1, p.n, p.m1, feedback ? "K1" : "Q1");
  detail::require_causal(s2, p.n, p.m2, feedback ? "K2" : "Q2");

  std::vector<Matrix> roots{detail::covariance_root(p.Sigma0)};
  for (const auto& s : p.SigmaT) roots.push_back(detail::covariance_root(s));

  const int terms = p.n + 2;
  const int stride = 2 * terms;
  std::vector<double> per_sample(static_cast<std::size_t>(samples) * stride);

  const auto run_range = [&](std::uint64_t begin, std::uint64_t end) {
    Matrix x(p.n, p.N + 1), xf(p.n, p.N + 1), u(p.m1, p.N), v(p.m2, p.N);
    Vector z(p.n);
    std::normal_distribution<double> normal;
    for (std::uint64_t id = begin; id < end; ++id) {
      auto gen = detail::sample_stream(seed, id);
      normal.reset();
      const auto draw = [&](const Matrix& root) {
        for (Index i = 0; i < z.size(); ++i) z(i) = normal(gen);
        return Vector(root * z);
      };
      x.col(0) = draw(roots[0]);
      xf.col(0) = x.col(0);
      for (int t = 0; t < p.N; ++t) {
        const Index seen = Index(p.n) * (t + 1);
        const Matrix& info = feedback ? x : xf;
        const Eigen::Map<const Vector> hist(info.data(), seen);
        u.col(t) = s1.block(Index(t) * p.m1, 0, p.m1, seen) * hist;
        v.col(t) = s2.block(Index(t) * p.m2, 0, p.m2, seen) * hist;
        const Vector w = draw(roots[static_cast<std::size_t>(t + 1)]);
        x.col(t + 1) = p.A * x.col(t) + p.B1 * u.col(t) + p.B2 * v.col(t) + w;
        xf.col(t + 1) = p.A * xf.col(t) + w;
      }
      double* out = per_sample.data() + id * stride;
      detail::accumulate_terms(p, p.cost1, x, u, v, out);
      detail::accumulate_terms(p, p.cost2, x, u, v, out + terms);
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers <= 1 || samples < 2 * workers) {
    run_range(0, samples);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (samples + workers - 1) / workers;
    for (std::uint64_t b = 0; b < samples; b += chunk)
      pool.emplace_back(run_range, b, std::min(samples, b + chunk));
    for (auto& th : pool) th.join();
  }

  SimulationReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.labels = breakdown_labels(p.n);
  const double count = static_cast<double>(samples);
  for (int team = 0; team < 2; ++team) {
    Vector sum = Vector::Zero(terms), sq = Vector::Zero(terms);
    double total = 0.0, total_sq = 0.0;
    for (std::uint64_t id = 0; id < samples; ++id) {
      const Eigen::Map<const Vector> row(
          per_sample.data() + id * stride + team * terms, terms);
      sum += row;
      sq += row.cwiseProduct(row);
      const double s = row.sum();
      total += s;
      total_sq += s * s;
    }
    const auto stderr_of = [&](double s, double s2) {
      if (samples < 2) return 0.0;
      const double mean = s / count;
      const double var = std::max(0.0, (s2 - count * mean * mean) / (count - 1));
      return std::sqrt(var / count);
    };
    rep.mean[team] = total / count;
    rep.standard_error[team] = stderr_of(total, total_sq);
    rep.term_mean[team] = sum / count;
    rep.term_standard_error[team].resize(terms);
    for (int i = 0; i < terms; ++i)
      rep.term_standard_error[team](i) = stderr_of(sum(i), sq(i));
  }
  return rep;
}

/// Exact per-term expected costs of a feedback pair, by propagating the
/// covariance of the state history x(0..t) stage by stage.
inline std::array<CostBreakdown, 2> covariance_propagate(
    const ProblemInstance& p, const FeedbackPair& k) {
  const auto report = validate(p);
  if (!report.ok()) throw ValidationError(report.joined());
  const Index cols = Index(p.n) * (p.N + 1);
  if (k.K1.rows() != Index(p.m1) * p.N || k.K1.cols() != cols ||
      k.K2.rows() != Index(p.m2) * p.N || k.K2.cols() != cols)
    throw ValidationError("feedback pair has the wrong shape for the instance");
  detail::require_causal(k.K1, p.n, p.m1, "K1");
  detail::require_causal(k.K2, p.n, p.m2, "K2");

  const int n = p.n;
  std::array<CostBreakdown, 2> out;
  for (auto& b : out) {
    b.labels = breakdown_labels(n);
    b.values = Vector::Zero(n + 2);
  }
  const auto add_state = [&](const Matrix& cov_t, int t) {
    for (int team = 0; team < 2; ++team) {
      const StageCost& c = team == 0 ? p.cost1 : p.cost2;
      if (t == 0 && !c.M0) continue;
      const Matrix prod = detail::state_weight(c, t, n) * cov_t;
      for (int i = 0; i < n; ++i) out[team].values(i) += prod(i, i);
    }
  };

  Matrix hist = p.Sigma0;  // covariance of x(0..t)
  add_state(hist, 0);
  for (int t = 0; t < p.N; ++t) {
    const Index seen = Index(n) * (t + 1);
    const Matrix k1 = k.K1.block(Index(t) * p.m1, 0, p.m1, seen);
    const Matrix k2 = k.K2.block(Index(t) * p.m2, 0, p.m2, seen);
    const Matrix cov_u = k1 * hist * k1.transpose();
    const Matrix cov_v = k2 * hist * k2.transpose();
    for (int team = 0; team < 2; ++team) {
      const StageCost& c = team == 0 ? p.cost1 : p.cost2;
      out[team].values(n) +=
          (c.R[static_cast<std::size_t>(t)] * cov_u).trace();
      out[team].values(n + 1) +=
          (c.V[static_cast<std::size_t>(t)] * cov_v).trace();
    }
    // x(t+1) = G h_t + w(t)
    Matrix gmap = p.B1 * k1 + p.B2 * k2;
    gmap.rightCols(n) += p.A;
    const Matrix cross = gmap * hist;  // Cov(x(t+1), h_t)
    Matrix next(seen + n, seen + n);
    next.topLeftCorner(seen, seen) = hist;
    next.bottomLeftCorner(n, seen) = cross;
    next.topRightCorner(seen, n) = cross.transpose();
    next.bottomRightCorner(n, n) = detail::symmetrized(
        cross * gmap.transpose() + p.SigmaT[static_cast<std::size_t>(t)]);
    hist = std::move(next);
    add_state(hist.bottomRightCorner(n, n), t + 1);
  }
  return out;
}

}  // namespace mqi
