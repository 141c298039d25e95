#pragma once

// Built-in instances: the scalar counterexample and the two-node zero-sum
// network game with its three information structures.

#include <string>
#include <vector>

#include "mqigame/model.hpp"

namespace mqi::instances {

namespace detail {

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

inline StageCost uniform_cost(const Matrix& m, const Matrix& r,
                              const Matrix& v, int N) {
  return {std::vector<Matrix>(N, m), std::vector<Matrix>(N, r),
          std::vector<Matrix>(N, v), std::nullopt};
}

}  // namespace detail

/// Scalar game with N = 2 where the feedforward Nash equilibrium does not
/// carry over to state feedback. The state weight applies at every stage,
/// including t = 0.
inline ProblemInstance counterexample() {
  using detail::scalar;
  ProblemInstance p;
  p.n = p.m1 = p.m2 = 1;
  p.N = 2;
  p.A = scalar(2.0);
  p.B1 = scalar(0.4);
  p.B2 = scalar(0.1);
  p.Sigma0 = scalar(1.0);
  p.SigmaT.assign(2, scalar(1.0));
  p.cost1 = detail::uniform_cost(scalar(1.0), scalar(1.0), scalar(1.0), p.N);
  p.cost1.M0 = scalar(1.0);
  p.cost2 = detail::uniform_cost(scalar(70.0), scalar(1.0), scalar(1.0), p.N);
  p.cost2.M0 = scalar(70.0);
  return p;
}

enum class NetworkStructure { fi, sdis, dp1 };

inline std::string to_string(NetworkStructure s) {
  switch (s) {
    case NetworkStructure::fi: return "FI";
    case NetworkStructure::sdis: return "1SDIS";
    case NetworkStructure::dp1: return "DP1";
  }
  return "?";
}

inline const std::vector<NetworkStructure>& network_structures() {
  static const std::vector<NetworkStructure> all = {
      NetworkStructure::fi, NetworkStructure::sdis, NetworkStructure::dp1};
  return all;
}

/// Two coupled nodes, N = 10. Team 1 drives both nodes, team 2 only the
/// second; team 1 pays for node 1 and gains from node 2.
inline ProblemInstance zero_sum(NetworkStructure s = NetworkStructure::fi) {
  ProblemInstance p;
  p.n = 2;
  p.m1 = p.m2 = 1;
  p.N = 10;
  p.A = Matrix::Identity(2, 2);
  p.B1 = (Matrix(2, 1) << -1.0, 1.0).finished();
  p.B2 = (Matrix(2, 1) << 0.0, -1.0).finished();
  p.Sigma0 = Matrix::Identity(2, 2);
  p.SigmaT.assign(p.N, Matrix::Identity(2, 2));
  const Matrix m = Eigen::Vector2d(2.0, -1.0).asDiagonal();
  p.cost1 = detail::uniform_cost(m, detail::scalar(1.0), detail::scalar(-2.0),
                                 p.N);
  p.cost2 = p.cost1.negated();
  p.zero_sum = true;
  switch (s) {
    case NetworkStructure::fi:
      break;
    case NetworkStructure::sdis:
      p.structure1 = StructureSpec::delayed_sharing({0});
      p.structure2 = StructureSpec::delayed_sharing({1});
      break;
    case NetworkStructure::dp1:
      p.structure1 = StructureSpec::decentralized({0});
      break;
  }
  return p;
}

}  // namespace mqi::instances
