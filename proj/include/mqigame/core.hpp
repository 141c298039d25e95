#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mqi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

// Error categories map one-to-one onto CLI exit codes (1, 2, 3).
enum class ErrorKind { validation, numerical, structural };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

struct StructuralError : Error {
  explicit StructuralError(const std::string& what)
      : Error(ErrorKind::structural, what) {}
};

enum class Team { one = 1, two = 2 };

inline int team_index(Team t) { return t == Team::one ? 0 : 1; }
inline Team other(Team t) { return t == Team::one ? Team::two : Team::one; }

namespace detail {

inline Matrix symmetrized(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline Matrix block_diag(const std::vector<Matrix>& blocks) {
  Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

// Boolean semiring product: (a*b)[i,j] = OR_k a[i,k] AND b[k,j].
inline BoolMatrix bool_product(const BoolMatrix& a, const BoolMatrix& b) {
  const Eigen::MatrixXi prod = a.cast<int>() * b.cast<int>();
  return prod.array() > 0;
}

inline BoolMatrix support(const Matrix& m, double threshold = 0.0) {
  return m.cwiseAbs().array() > threshold;
}

// Largest |m[i,j]| over positions where mask is false.
inline double max_off_support(const Matrix& m, const BoolMatrix& mask) {
  double worst = 0.0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (!mask(i, j)) worst = std::max(worst, std::abs(m(i, j)));
  return worst;
}

inline bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

inline bool same(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                    [](const Matrix& x, const Matrix& y) { return same(x, y); });
}

inline Matrix masked(const Matrix& m, const BoolMatrix& mask) {
  return mask.select(m, Matrix::Zero(m.rows(), m.cols()));
}

}  // namespace detail
}  // namespace mqi
