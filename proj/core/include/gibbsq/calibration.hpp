#ifndef GIBBSQ_CALIBRATION_HPP_
#define GIBBSQ_CALIBRATION_HPP_

#include "gibbsq/gibbs.hpp"
#include "gibbsq/loss.hpp"
#include "gibbsq/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace gibbsq {

/// Inner-chain defaults for calibration: 2000 retained draws after 1000 burn-in.
inline GibbsConfig default_calibration_mcmc() {
  GibbsConfig g;
  g.n_draws = 2000;
  g.burn_in = 1000;
  return g;
}

struct CalibrationConfig {
  double alpha = 0.05;
  /// Bootstrap resamples per step.
  int B = 200;
  /// Stop once |c_hat - (1 - alpha)| < epsilon.
  double epsilon = 0.01;
  double omega0 = 1.0;
  int max_steps = 50;
  /// Step size kappa_t = (t + 1)^(-kappa_exponent).
  double kappa_exponent = 0.51;
  std::uint64_t seed = 0;
  /// Template for the inner chains; omega and seed are overwritten per run.
  GibbsConfig mcmc = default_calibration_mcmc();
  /// Workers for the B inner chains; 0 = hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

struct CalibrationStep {
  int t = 0;
  double omega = 0.0;
  double c_hat = 0.0;
};

struct CalibrationState {
  std::vector<CalibrationStep> trajectory;
  double final_omega = 0.0;
  bool converged = false;
  int steps_used = 0;
  /// Inner chains whose ellipse could not be built (scored as misses).
  std::size_t failed_inner = 0;
};

/// One Robbins-Monro step
///   omega + (t + 1)^(-kappa_exponent) (c_hat - (1 - alpha)),
/// projected to omega / 2 when the step would leave (0, inf).
double robbins_monro_update(double omega, int t, double c_hat, double alpha,
                            double kappa_exponent = 0.51);

struct CoverageEstimate {
  double c_hat = 0.0;
  std::size_t failures = 0;
};

/// Fraction of B with-replacement resamples whose Gibbs credible ellipse at
/// learning rate omega contains theta_hat. Resample b draws its indices and
/// chain seed from derive_seed(stream_seed, b).
CoverageEstimate bootstrap_coverage_detail(const LossSpec& spec, const Dataset& data,
                                           const PriorSpec& prior, double omega,
                                           const CalibrationConfig& cfg, const Vector& theta_hat,
                                           std::uint64_t stream_seed);

/// As above with theta_hat computed from `data` and stream seed cfg.seed.
double bootstrap_coverage(const LossSpec& spec, const Dataset& data, const PriorSpec& prior,
                          double omega, const CalibrationConfig& cfg);

/// Coverage map c(omega) evaluated at step t.
using CoverageFunction = std::function<double(double omega, int t)>;

/// Stochastic-approximation loop over an arbitrary coverage map. Stops when
/// |c - (1 - alpha)| < epsilon (converged) or after max_steps updates.
CalibrationState calibrate_with(const CoverageFunction& coverage, const CalibrationConfig& cfg);

/// Learning-rate calibration on data: fresh bootstrap resamples each step,
/// step t seeded by derive_seed(cfg.seed, t).
CalibrationState calibrate(const LossSpec& spec, const Dataset& data, const PriorSpec& prior,
                           const CalibrationConfig& cfg);

}  // namespace gibbsq

#endif  // GIBBSQ_CALIBRATION_HPP_
