#ifndef GIBBSQ_LINALG_HPP_
#define GIBBSQ_LINALG_HPP_

#include "gibbsq/types.hpp"

namespace gibbsq {

inline constexpr double kMaxConditionNumber = 1e12;

/// lambda_max / lambda_min of a symmetric matrix; +inf if lambda_min <= 0.
double condition_number(const Matrix& symmetric);

/// Inverse of a symmetric positive-definite matrix via Cholesky.
/// Throws SingularMatrixError when the matrix is not SPD or its condition
/// number exceeds `max_cond`.
Matrix spd_inverse(const Matrix& a, double max_cond = kMaxConditionNumber);

/// Lower Cholesky factor; throws SingularMatrixError if `a` is not SPD.
Matrix cholesky_lower(const Matrix& a);

/// Symmetric square root A^{1/2} of an SPD matrix.
Matrix symmetric_sqrt(const Matrix& a);

bool is_symmetric(const Matrix& a, double tol = 1e-12);

/// Column means of the rows of `x`.
Vector row_mean(const RowMatrix& x);
/// Unbiased (divide by M - 1) covariance of the rows of `x`.
Matrix row_covariance(const RowMatrix& x);

}  // namespace gibbsq

#endif  // GIBBSQ_LINALG_HPP_
