#include "gibbsq/loss.hpp"

#include "gibbsq/errors.hpp"
#include "gibbsq/linalg.hpp"

#include <cmath>
#include <vector>
#include <sstream>

namespace gibbsq {
namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite input");
}

void require_dim(const LossSpec& spec, const Vector& v, const char* what) {
  if (static_cast<std::size_t>(v.size()) != spec.d()) {
    throw InvalidArgument(std::string(what) + ": expected dimension " + std::to_string(spec.d()) +
                          ", got " + std::to_string(v.size()));
  }
}

void require_data_dim(const LossSpec& spec, const Dataset& data, const char* what) {
  if (data.d() != spec.d()) {
    throw InvalidArgument(std::string(what) + ": dataset has dimension " +
                          std::to_string(data.d()) + ", loss expects " + std::to_string(spec.d()));
  }
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

bool coincident(const Vector& z) { return z.cwiseAbs().maxCoeff() < kKinkTolerance; }

}  // namespace

LossSpec::LossSpec(Vector u, double r) : u_(std::move(u)), r_(r) {
  if (u_.size() < 1) throw InvalidArgument("LossSpec: dimension must be positive");
  if (!std::isfinite(r_) || !(r_ > 1.0)) {
    throw InvalidArgument("LossSpec: norm exponent r must be finite and > 1");
  }
  require_finite(u_, "LossSpec");
  if (!(dual_norm(u_) < 1.0)) {
    throw InvalidArgument("LossSpec: quantile index u must lie in the open dual unit ball");
  }
  euclidean_ = (r_ == 2.0);
}

LossSpec LossSpec::median(std::size_t d, double r) {
  return LossSpec(Vector::Zero(static_cast<Eigen::Index>(d)), r);
}

double LossSpec::norm(const double* t) const {
  const std::size_t dim = d();
  if (euclidean_) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s += t[j] * t[j];
    return std::sqrt(s);
  }
  double m = 0.0;
  for (std::size_t j = 0; j < dim; ++j) m = std::max(m, std::abs(t[j]));
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < dim; ++j) s += std::pow(std::abs(t[j]) / m, r_);
  return m * std::pow(s, 1.0 / r_);
}

double LossSpec::dual_norm(const Vector& v) const {
  const double qq = r_ / (r_ - 1.0);
  const double m = v.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) s += std::pow(std::abs(v[j]) / m, qq);
  return m * std::pow(s, 1.0 / qq);
}

std::string LossSpec::describe() const {
  std::ostringstream os;
  os << "d=" << d() << " r=" << r_ << " u=(";
  for (Eigen::Index j = 0; j < u_.size(); ++j) os << (j ? "," : "") << u_[j];
  os << ")";
  return os.str();
}

double phi(const LossSpec& spec, const Vector& t) {
  require_dim(spec, t, "phi");
  require_finite(t, "phi");
  return spec.norm(t) + spec.u().dot(t);
}

double loss(const LossSpec& spec, const Vector& x, const Vector& theta) {
  require_dim(spec, x, "loss");
  require_dim(spec, theta, "loss");
  return phi(spec, x - theta);
}

TotalLoss::TotalLoss(const LossSpec& spec, const Dataset& data)
    : spec_(spec), data_(data), xsum_(data.rows().colwise().sum().transpose()) {
  require_data_dim(spec, data, "TotalLoss");
  u_dot_xsum_ = spec.u().dot(xsum_);
}

double TotalLoss::operator()(const Vector& theta) const {
  const std::size_t n = data_.n();
  const std::size_t d = data_.d();
  const double* x = data_.data();
  const double* th = theta.data();

  double sum = 0.0;
  if (spec_.euclidean() && d == 2) {
    const double t0 = th[0], t1 = th[1];
    for (std::size_t i = 0; i < n; ++i) {
      const double z0 = x[2 * i] - t0;
      const double z1 = x[2 * i + 1] - t1;
      sum += std::sqrt(z0 * z0 + z1 * z1);
    }
  } else {
    double z[16];
    std::vector<double> heap;
    double* zp = z;
    if (d > 16) {
      heap.resize(d);
      zp = heap.data();
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) zp[j] = x[i * d + j] - th[j];
      sum += spec_.norm(zp);
    }
  }
  // The linear term sums to <u, sum_i X_i - n theta>.
  return sum + u_dot_xsum_ - static_cast<double>(n) * spec_.u().dot(theta);
}

double total_loss(const LossSpec& spec, const Dataset& data, const Vector& theta) {
  require_dim(spec, theta, "total_loss");
  return TotalLoss(spec, data)(theta);
}

double empirical_risk(const LossSpec& spec, const Dataset& data, const Vector& theta) {
  return total_loss(spec, data, theta) / static_cast<double>(data.n());
}

double empirical_risk(const LossSpec& spec, const Dataset& data, const Vector& theta,
                      const WeightVector& w) {
  require_data_dim(spec, data, "empirical_risk");
  require_dim(spec, theta, "empirical_risk");
  if (w.size() != data.n()) throw InvalidArgument("empirical_risk: weight/data size mismatch");
  const std::size_t d = data.d();
  std::vector<double> z(d);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double wi = w[i];
    if (wi == 0.0) continue;
    const double* xi = data.data() + i * d;
    double lin = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      z[j] = xi[j] - theta[static_cast<Eigen::Index>(j)];
      lin += spec.u()[static_cast<Eigen::Index>(j)] * z[j];
    }
    sum += wi * (spec.norm(z.data()) + lin);
  }
  return sum;
}

Vector loss_gradient(const LossSpec& spec, const Vector& x, const Vector& theta) {
  require_dim(spec, x, "loss_gradient");
  require_dim(spec, theta, "loss_gradient");
  const Vector z = x - theta;
  require_finite(z, "loss_gradient");
  if (coincident(z)) throw SingularityError("loss_gradient: x coincides with theta");
  const double nz = spec.norm(z);
  const double r = spec.r();
  Vector g(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double a = std::abs(z[j]) / nz;
    const double s = spec.euclidean() ? a : std::pow(a, r - 1.0);
    g[j] = -s * sign(z[j]) - spec.u()[j];
  }
  return g;
}

Matrix hessian_integrand(const LossSpec& spec, const Vector& x, const Vector& theta) {
  require_dim(spec, x, "hessian_integrand");
  require_dim(spec, theta, "hessian_integrand");
  const Vector z = x - theta;
  require_finite(z, "hessian_integrand");
  if (coincident(z)) throw SingularityError("hessian_integrand: x coincides with theta");
  const double r = spec.r();
  if (r < 2.0 && z.cwiseAbs().minCoeff() < kKinkTolerance) {
    throw SingularityError("hessian_integrand: coordinate tie with r < 2");
  }
  const double nz = spec.norm(z);
  const Eigen::Index d = z.size();
  Vector diag(d), s(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double a = std::abs(z[j]) / nz;
    diag[j] = (r == 2.0) ? 1.0 : std::pow(a, r - 2.0);
    s[j] = ((r == 2.0) ? a : std::pow(a, r - 1.0)) * sign(z[j]);
  }
  Matrix h = Matrix(diag.asDiagonal()) - s * s.transpose();
  h *= (r - 1.0) / nz;
  return 0.5 * (h + h.transpose());
}

RiskGradient risk_gradient(const LossSpec& spec, const Dataset& data, const Vector& theta,
                           const WeightVector& w) {
  require_data_dim(spec, data, "risk_gradient");
  require_dim(spec, theta, "risk_gradient");
  if (w.size() != data.n()) throw InvalidArgument("risk_gradient: weight/data size mismatch");
  RiskGradient out{Vector::Zero(theta.size()), 0};
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double wi = w[i];
    if (wi == 0.0) continue;
    const Vector xi = data.row(i);
    if (coincident(xi - theta)) {
      ++out.skipped;
      continue;
    }
    out.gradient += wi * loss_gradient(spec, xi, theta);
  }
  return out;
}

PluginEstimate plugin_V(const LossSpec& spec, const Dataset& data, const Vector& theta,
                        const WeightVector& w) {
  require_data_dim(spec, data, "plugin_V");
  require_dim(spec, theta, "plugin_V");
  if (w.size() != data.n()) throw InvalidArgument("plugin_V: weight/data size mismatch");
  const auto d = static_cast<Eigen::Index>(spec.d());
  PluginEstimate out{Matrix::Zero(d, d), 0};
  const bool coordinate_ties_matter = spec.r() < 2.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (w[i] == 0.0) continue;
    const Vector z = data.row(i) - theta;
    if (coincident(z) || (coordinate_ties_matter && z.cwiseAbs().minCoeff() < kKinkTolerance)) {
      ++out.skipped;
      continue;
    }
    out.value += w[i] * hessian_integrand(spec, data.row(i), theta);
  }
  return out;
}

PluginEstimate plugin_V(const LossSpec& spec, const Dataset& data, const Vector& theta) {
  return plugin_V(spec, data, theta, WeightVector::uniform(data.n()));
}

PluginEstimate plugin_J(const LossSpec& spec, const Dataset& data, const Vector& theta,
                        const WeightVector& w) {
  require_data_dim(spec, data, "plugin_J");
  require_dim(spec, theta, "plugin_J");
  if (w.size() != data.n()) throw InvalidArgument("plugin_J: weight/data size mismatch");
  const auto d = static_cast<Eigen::Index>(spec.d());
  PluginEstimate out{Matrix::Zero(d, d), 0};
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (w[i] == 0.0) continue;
    if (coincident(data.row(i) - theta)) {
      ++out.skipped;
      continue;
    }
    const Vector g = loss_gradient(spec, data.row(i), theta);
    out.value += w[i] * (g * g.transpose());
  }
  return out;
}

PluginEstimate plugin_J(const LossSpec& spec, const Dataset& data, const Vector& theta) {
  return plugin_J(spec, data, theta, WeightVector::uniform(data.n()));
}

SandwichEstimate sandwich_cov(const LossSpec& spec, const Dataset& data, const Vector& theta) {
  const PluginEstimate v = plugin_V(spec, data, theta);
  const PluginEstimate j = plugin_J(spec, data, theta);
  const Matrix v_inv = spd_inverse(v.value);
  Matrix gamma = v_inv * j.value * v_inv;
  gamma = 0.5 * (gamma + gamma.transpose());
  return SandwichEstimate{v.value, j.value, std::move(gamma), v.skipped, j.skipped};
}

}  // namespace gibbsq
