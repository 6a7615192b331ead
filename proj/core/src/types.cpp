#include "gibbsq/types.hpp"

#include "gibbsq/errors.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace gibbsq {

Dataset::Dataset(RowMatrix rows) : rows_(std::move(rows)) {
  if (rows_.rows() < 1) throw InvalidArgument("Dataset: need at least one observation");
  if (rows_.cols() < 1) throw InvalidArgument("Dataset: dimension must be positive");
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows_.cols(); ++j) {
      if (!std::isfinite(rows_(i, j))) {
        throw InvalidArgument("Dataset: non-finite value at row " + std::to_string(i) +
                              ", column " + std::to_string(j));
      }
    }
  }
}

Dataset Dataset::slice(std::size_t first, std::size_t count) const {
  if (first + count > n() || count == 0) throw InvalidArgument("Dataset::slice: out of range");
  return Dataset(RowMatrix(rows_.middleRows(static_cast<Eigen::Index>(first),
                                            static_cast<Eigen::Index>(count))));
}

Dataset Dataset::translated(const Vector& shift) const {
  if (static_cast<std::size_t>(shift.size()) != d()) {
    throw InvalidArgument("Dataset::translated: dimension mismatch");
  }
  RowMatrix moved = rows_.rowwise() + shift.transpose();
  return Dataset(std::move(moved));
}

Dataset Dataset::scaled(double factor) const {
  return Dataset(RowMatrix(rows_ * factor));
}

std::uint64_t Dataset::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const std::uint64_t dims[2] = {n(), d()};
  mix(dims, sizeof(dims));
  mix(rows_.data(), sizeof(double) * n() * d());
  return h;
}

WeightVector::WeightVector(Vector w) : w_(std::move(w)) {
  if (w_.size() == 0) throw InvalidArgument("WeightVector: empty");
  for (Eigen::Index i = 0; i < w_.size(); ++i) {
    if (!std::isfinite(w_[i]) || w_[i] < 0.0) {
      throw InvalidArgument("WeightVector: weights must be finite and nonnegative");
    }
  }
  if (std::abs(w_.sum() - 1.0) > 1e-12) {
    throw InvalidArgument("WeightVector: weights must sum to 1");
  }
}

WeightVector WeightVector::uniform(std::size_t n) {
  if (n == 0) throw InvalidArgument("WeightVector::uniform: n must be positive");
  return WeightVector(Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

WeightVector WeightVector::from_masses(const Vector& masses) {
  if (masses.size() == 0) throw InvalidArgument("WeightVector::from_masses: empty");
  if (!masses.allFinite() || masses.minCoeff() < 0.0) {
    throw InvalidArgument("WeightVector::from_masses: masses must be finite and nonnegative");
  }
  const double total = masses.sum();
  if (!(total > 0.0)) throw InvalidArgument("WeightVector::from_masses: total mass is zero");
  Vector w = masses / total;
  // Rounding can leave |sum - 1| around 1e-16 * n; fold the residual into the largest entry.
  Eigen::Index imax = 0;
  w.maxCoeff(&imax);
  w[imax] += 1.0 - w.sum();
  if (w[imax] < 0.0) w[imax] = 0.0;
  return WeightVector(std::move(w));
}

}  // namespace gibbsq
