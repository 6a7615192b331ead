#include "gibbsq/calibration.hpp"

#include "gibbsq/credible.hpp"
#include "gibbsq/errors.hpp"
#include "gibbsq/parallel.hpp"
#include "gibbsq/quantile_solver.hpp"
#include "gibbsq/rng.hpp"

#include <cmath>

namespace gibbsq {

void CalibrationConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("CalibrationConfig: alpha outside (0,1)");
  if (B < 1) throw InvalidArgument("CalibrationConfig: B must be >= 1");
  if (!(epsilon > 0.0)) throw InvalidArgument("CalibrationConfig: epsilon must be positive");
  if (!(omega0 > 0.0) || !std::isfinite(omega0)) {
    throw InvalidArgument("CalibrationConfig: omega0 must be positive");
  }
  if (max_steps < 0) throw InvalidArgument("CalibrationConfig: max_steps must be >= 0");
  if (!(kappa_exponent > 0.5 && kappa_exponent <= 1.0)) {
    throw InvalidArgument("CalibrationConfig: kappa_exponent must be in (0.5, 1]");
  }
}

double robbins_monro_update(double omega, int t, double c_hat, double alpha, double kappa_exponent) {
  const double kappa = std::pow(static_cast<double>(t) + 1.0, -kappa_exponent);
  const double next = omega + kappa * (c_hat - (1.0 - alpha));
  if (!(next > 0.0)) return 0.5 * omega;
  return next;
}

CoverageEstimate bootstrap_coverage_detail(const LossSpec& spec, const Dataset& data,
                                           const PriorSpec& prior, double omega,
                                           const CalibrationConfig& cfg, const Vector& theta_hat,
                                           std::uint64_t stream_seed) {
  cfg.validate();
  const std::size_t n = data.n();
  const auto d = static_cast<Eigen::Index>(data.d());
  const auto B = static_cast<std::size_t>(cfg.B);

  std::vector<char> hit(B, 0);
  std::vector<char> failed(B, 0);
  parallel_for(B, cfg.threads, [&](std::size_t b) {
    const std::uint64_t seed_b = derive_seed(stream_seed, b);
    Rng rng = make_rng(seed_b);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    RowMatrix rows(static_cast<Eigen::Index>(n), d);
    for (std::size_t i = 0; i < n; ++i) {
      rows.row(static_cast<Eigen::Index>(i)) = data.rows().row(static_cast<Eigen::Index>(pick(rng)));
    }
    const Dataset resample(std::move(rows));
    GibbsConfig chain = cfg.mcmc;
    chain.omega = omega;
    chain.seed = derive_seed(seed_b, 1);
    try {
      const PosteriorDraws draws = sample(spec, resample, prior, chain);
      const CredibleEllipse e = ellipse_from_draws(draws, cfg.alpha);
      hit[b] = contains(e, theta_hat) ? 1 : 0;
    } catch (const NumericalError&) {
      failed[b] = 1;
    }
  });

  CoverageEstimate out;
  std::size_t hits = 0;
  for (std::size_t b = 0; b < B; ++b) {
    hits += static_cast<std::size_t>(hit[b]);
    out.failures += static_cast<std::size_t>(failed[b]);
  }
  out.c_hat = static_cast<double>(hits) / static_cast<double>(B);
  return out;
}

double bootstrap_coverage(const LossSpec& spec, const Dataset& data, const PriorSpec& prior,
                          double omega, const CalibrationConfig& cfg) {
  const Vector theta_hat = solve(spec, data).theta_hat;
  return bootstrap_coverage_detail(spec, data, prior, omega, cfg, theta_hat, cfg.seed).c_hat;
}

CalibrationState calibrate_with(const CoverageFunction& coverage, const CalibrationConfig& cfg) {
  cfg.validate();
  CalibrationState state;
  double omega = cfg.omega0;
  for (int t = 0;; ++t) {
    const double c_hat = coverage(omega, t);
    state.trajectory.push_back({t, omega, c_hat});
    state.final_omega = omega;
    if (std::abs(c_hat - (1.0 - cfg.alpha)) < cfg.epsilon) {
      state.converged = true;
      break;
    }
    if (t >= cfg.max_steps) break;
    omega = robbins_monro_update(omega, t, c_hat, cfg.alpha, cfg.kappa_exponent);
    ++state.steps_used;
  }
  return state;
}

CalibrationState calibrate(const LossSpec& spec, const Dataset& data, const PriorSpec& prior,
                           const CalibrationConfig& cfg) {
  cfg.validate();
  prior.validate(spec.d());
  const Vector theta_hat = solve(spec, data).theta_hat;
  std::size_t failures = 0;
  CalibrationState state = calibrate_with(
      [&](double omega, int t) {
        const CoverageEstimate est = bootstrap_coverage_detail(
            spec, data, prior, omega, cfg, theta_hat,
            derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        failures += est.failures;
        return est.c_hat;
      },
      cfg);
  state.failed_inner = failures;
  return state;
}

}  // namespace gibbsq
