#ifndef GIBBSQ_QUANTILE_SOLVER_HPP_
#define GIBBSQ_QUANTILE_SOLVER_HPP_

#include "gibbsq/loss.hpp"
#include "gibbsq/types.hpp"

#include <vector>

namespace gibbsq {

enum class SolverInit { CoordinateMedian, Mean, UserSupplied };

struct SolverConfig {
  double grad_tol = 1e-8;
  int max_iters = 10000;
  /// Backtracking factor in (0, 1).
  double step_shrink = 0.5;
  SolverInit init = SolverInit::CoordinateMedian;
  /// Starting point when init == UserSupplied.
  Vector initial;
  /// Keep the risk value of every iterate in QuantileEstimate::risk_history.
  bool record_history = false;

  void validate(std::size_t d) const;
};

struct QuantileEstimate {
  Vector theta_hat;
  double risk_value = 0.0;
  /// ||grad R_n||_2 at theta_hat, or the subgradient-certificate residual
  /// max(0, ||G||_q - w_at) when theta_hat is a data point.
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// theta_hat coincides with an observation and was certified through the
  /// subgradient condition.
  bool at_data_point = false;
  std::vector<double> risk_history;
};

/// Minimizer of the (weighted) empirical risk, i.e. the sample geometric quantile.
///
/// Descent with backtracking: damped Newton steps on the plug-in Hessian,
/// falling back to Weiszfeld (MM) steps when r = 2 and to steepest descent
/// otherwise. Iterates that reach an observation are checked against the
/// subgradient optimality certificate
///   || sum_{i not at theta} w_i grad l(X_i) - w_at u ||_q <= w_at.
/// Non-convergence is reported through `converged`, never thrown.
QuantileEstimate solve(const LossSpec& spec, const Dataset& data, const SolverConfig& cfg = {});
QuantileEstimate solve(const LossSpec& spec, const Dataset& data, const SolverConfig& cfg,
                       const WeightVector& w);

/// Quantile of the atomic measure sum_i w_i delta_{atoms_i}.
QuantileEstimate solve_weighted_atoms(const LossSpec& spec, const Dataset& atoms,
                                      const WeightVector& w, const SolverConfig& cfg = {});

/// Residual of the subgradient certificate at `point` (<= 0 means optimal).
/// Returns +inf if no observation sits at `point`.
double data_point_certificate(const LossSpec& spec, const Dataset& data, const WeightVector& w,
                              const Vector& point);

}  // namespace gibbsq

#endif  // GIBBSQ_QUANTILE_SOLVER_HPP_
