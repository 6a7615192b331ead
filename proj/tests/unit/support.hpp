#ifndef GIBBSQ_TESTS_SUPPORT_HPP_
#define GIBBSQ_TESTS_SUPPORT_HPP_

#include "gibbsq/loss.hpp"
#include "gibbsq/rng.hpp"
#include "gibbsq/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace gibbsq::testing {

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vector random_vector(Rng& rng, Eigen::Index d, double lo = -3.0, double hi = 3.0) {
  Vector v(d);
  for (Eigen::Index j = 0; j < d; ++j) v[j] = uniform(rng, lo, hi);
  return v;
}

/// r drawn from {1.5, 2, 3}; u scaled so that its dual norm is below 0.8.
inline LossSpec random_spec(Rng& rng, Eigen::Index d) {
  static const double rs[] = {1.5, 2.0, 3.0};
  const double r = rs[std::uniform_int_distribution<int>(0, 2)(rng)];
  Vector u = random_vector(rng, d, -1.0, 1.0);
  const double q = r / (r - 1.0);
  double dual = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) dual += std::pow(std::abs(u[j]), q);
  dual = std::pow(dual, 1.0 / q);
  if (dual > 0.0) u *= uniform(rng, 0.0, 0.8) / dual;
  return LossSpec(u, r);
}

inline Dataset random_dataset(Rng& rng, std::size_t n, Eigen::Index d) {
  std::normal_distribution<double> normal;
  RowMatrix m(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = normal(rng) * (1.0 + j);
  }
  return Dataset(std::move(m));
}

/// Central differences of a scalar function.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& at, double h) {
  Vector g(at.size());
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    Vector a = at, b = at;
    a[j] += h;
    b[j] -= h;
    g[j] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

/// Central differences of a vector function; column j holds d/d at_j.
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& at, double h) {
  Matrix jac(at.size(), at.size());
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    Vector a = at, b = at;
    a[j] += h;
    b[j] -= h;
    jac.col(j) = (f(a) - f(b)) / (2.0 * h);
  }
  return jac;
}

/// Asymptotic Kolmogorov p-value P(K > sqrt(n) D) with the usual small-sample
/// correction sqrt(n) + 0.12 + 0.11 / sqrt(n).
inline double ks_pvalue(double d_stat, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d_stat;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// One-sample KS statistic sup |F_n - F|.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

inline std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

inline std::vector<double> column(const RowMatrix& m, Eigen::Index j) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, j);
  return out;
}

/// Batch-means Monte Carlo standard error of the mean of a correlated series.
inline double batch_means_se(const std::vector<double>& x, int batches = 25) {
  const std::size_t len = x.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += x[b * len + i];
    means.push_back(s / static_cast<double>(len));
  }
  const double m = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double v = 0.0;
  for (double mb : means) v += (mb - m) * (mb - m);
  v /= (batches - 1);
  return std::sqrt(v / batches);
}

inline double rel_frobenius(const Matrix& a, const Matrix& ref) { return (a - ref).norm() / ref.norm(); }

}  // namespace gibbsq::testing

#endif  // GIBBSQ_TESTS_SUPPORT_HPP_
