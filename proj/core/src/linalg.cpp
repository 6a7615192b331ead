#include "gibbsq/linalg.hpp"

#include "gibbsq/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gibbsq {

double condition_number(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix cholesky_lower(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InvalidArgument("cholesky_lower: matrix must be square and non-empty");
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("cholesky_lower: matrix is not positive definite");
  }
  return llt.matrixL();
}

Matrix spd_inverse(const Matrix& a, double max_cond) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InvalidArgument("spd_inverse: matrix must be square and non-empty");
  }
  if (!a.allFinite()) throw SingularMatrixError("spd_inverse: non-finite entries");
  const Matrix sym = 0.5 * (a + a.transpose());
  const double cond = condition_number(sym);
  if (!(cond <= max_cond)) {
    throw SingularMatrixError("spd_inverse: matrix is numerically singular (condition number " +
                              std::to_string(cond) + ")");
  }
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("spd_inverse: Cholesky factorization failed");
  }
  Matrix inv = llt.solve(Matrix::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose());
}

Matrix symmetric_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (a + a.transpose()));
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw SingularMatrixError("symmetric_sqrt: matrix is not positive definite");
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

Vector row_mean(const RowMatrix& x) {
  return x.colwise().mean().transpose();
}

Matrix row_covariance(const RowMatrix& x) {
  if (x.rows() < 2) throw InvalidArgument("row_covariance: need at least two rows");
  const Vector mean = row_mean(x);
  const Matrix centered = x.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

}  // namespace gibbsq
