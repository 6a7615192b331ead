#ifndef GIBBSQ_LOSS_HPP_
#define GIBBSQ_LOSS_HPP_

#include "gibbsq/types.hpp"

#include <cstddef>
#include <string>

namespace gibbsq {

/// Tolerance (l-infinity) under which x and theta are treated as coincident.
inline constexpr double kKinkTolerance = 1e-12;

/// The geometric-quantile loss family Phi_r(u, t) = ||t||_r + <u, t>.
///
/// Invariants: r > 1 and finite, u finite with ||u||_q < 1 where q = r/(r-1).
/// u = 0 gives the l1-median (the spatial median when r = 2).
class LossSpec {
 public:
  LossSpec(Vector u, double r = 2.0);
  static LossSpec median(std::size_t d, double r = 2.0);

  std::size_t d() const { return static_cast<std::size_t>(u_.size()); }
  double r() const { return r_; }
  /// Hoelder conjugate of r.
  double q() const { return r_ / (r_ - 1.0); }
  const Vector& u() const { return u_; }
  bool euclidean() const { return euclidean_; }

  /// ||t||_r over `d()` contiguous doubles.
  double norm(const double* t) const;
  double norm(const Vector& t) const { return norm(t.data()); }
  /// ||v||_q, the dual norm.
  double dual_norm(const Vector& v) const;

  std::string describe() const;

 private:
  Vector u_;
  double r_;
  bool euclidean_;
};

double phi(const LossSpec& spec, const Vector& t);

/// l_theta(x) = Phi_r(u, x - theta).
double loss(const LossSpec& spec, const Vector& x, const Vector& theta);

/// R_n(theta) = sum_i w_i l_theta(X_i); uniform weights when none are given.
double empirical_risk(const LossSpec& spec, const Dataset& data, const Vector& theta);
double empirical_risk(const LossSpec& spec, const Dataset& data, const Vector& theta,
                      const WeightVector& w);

/// n * R_n(theta) with uniform weights, i.e. the plain sum of losses. This is
/// the quantity in the Gibbs exponent and the hot path of the samplers.
double total_loss(const LossSpec& spec, const Dataset& data, const Vector& theta);

/// Precomputed evaluator of total_loss for repeated calls on one dataset
/// (sum_i X_i is cached). Holds references; the spec and data must outlive it.
class TotalLoss {
 public:
  TotalLoss(const LossSpec& spec, const Dataset& data);
  double operator()(const Vector& theta) const;

 private:
  const LossSpec& spec_;
  const Dataset& data_;
  Vector xsum_;
  double u_dot_xsum_;
};

/// Gradient of theta -> l_theta(x):
///   -(|x_j - theta_j| / ||x - theta||_r)^(r-1) sign(x_j - theta_j) - u_j.
/// Throws SingularityError when x and theta coincide within kKinkTolerance.
Vector loss_gradient(const LossSpec& spec, const Vector& x, const Vector& theta);

/// Second derivative of theta -> l_theta(x):
///   (r-1)/N [ diag((|z_j|/N)^(r-2)) - s s^T ],  z = x - theta, N = ||z||_r,
///   s_j = (|z_j|/N)^(r-1) sign(z_j).
/// Symmetric PSD. Throws SingularityError at x == theta, and for r < 2 at any
/// coordinate tie |z_j| < kKinkTolerance.
Matrix hessian_integrand(const LossSpec& spec, const Vector& x, const Vector& theta);

/// Gradient of the (weighted) empirical risk, skipping rows at the kink.
struct RiskGradient {
  Vector gradient;
  std::size_t skipped = 0;
};
RiskGradient risk_gradient(const LossSpec& spec, const Dataset& data, const Vector& theta,
                           const WeightVector& w);

/// A plug-in matrix estimate and the number of rows skipped as singular.
struct PluginEstimate {
  Matrix value;
  std::size_t skipped = 0;
};

/// V-hat = P_n v_theta (empirical Hessian of the risk).
PluginEstimate plugin_V(const LossSpec& spec, const Dataset& data, const Vector& theta);
PluginEstimate plugin_V(const LossSpec& spec, const Dataset& data, const Vector& theta,
                        const WeightVector& w);
/// J-hat = P_n (grad l)(grad l)^T.
PluginEstimate plugin_J(const LossSpec& spec, const Dataset& data, const Vector& theta);
PluginEstimate plugin_J(const LossSpec& spec, const Dataset& data, const Vector& theta,
                        const WeightVector& w);

struct SandwichEstimate {
  Matrix V;
  Matrix J;
  Matrix gamma;  ///< V^-1 J V^-1
  std::size_t skipped_V = 0;
  std::size_t skipped_J = 0;
};

/// Gamma-hat = V-hat^-1 J-hat V-hat^-1, the plug-in asymptotic covariance of
/// sqrt(n)(theta_hat - theta*). Throws SingularMatrixError if V-hat has
/// condition number above 1e12.
SandwichEstimate sandwich_cov(const LossSpec& spec, const Dataset& data, const Vector& theta);

}  // namespace gibbsq

#endif  // GIBBSQ_LOSS_HPP_
