#ifndef GIBBSQ_TYPES_HPP_
#define GIBBSQ_TYPES_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace gibbsq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n x d observation matrix, one observation per row.
///
/// Invariants: n >= 1, d >= 1, every entry finite. Storage is row-major so a
/// single observation is contiguous.
class Dataset {
 public:
  explicit Dataset(RowMatrix rows);
  explicit Dataset(const Matrix& rows) : Dataset(RowMatrix(rows)) {}

  std::size_t n() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(rows_.cols()); }

  const RowMatrix& rows() const { return rows_; }
  Eigen::Map<const Vector> row(std::size_t i) const {
    return Eigen::Map<const Vector>(rows_.data() + i * d(), static_cast<Eigen::Index>(d()));
  }
  const double* data() const { return rows_.data(); }

  /// Rows `first` .. `first + count - 1` as a new dataset.
  Dataset slice(std::size_t first, std::size_t count) const;
  /// Every row shifted by `shift`.
  Dataset translated(const Vector& shift) const;
  Dataset scaled(double factor) const;

  /// FNV-1a hash of dimensions and raw bytes; used for draw provenance.
  std::uint64_t hash() const;

 private:
  RowMatrix rows_;
};

/// Probability weights over the rows of a Dataset.
///
/// Invariants: entries nonnegative and finite, sum equal to 1 within 1e-12.
class WeightVector {
 public:
  explicit WeightVector(Vector w);
  static WeightVector uniform(std::size_t n);
  /// Normalizes nonnegative masses to sum to one.
  static WeightVector from_masses(const Vector& masses);

  std::size_t size() const { return static_cast<std::size_t>(w_.size()); }
  double operator[](std::size_t i) const { return w_[static_cast<Eigen::Index>(i)]; }
  const Vector& values() const { return w_; }

 private:
  Vector w_;
};

}  // namespace gibbsq

#endif  // GIBBSQ_TYPES_HPP_
