#ifndef GIBBSQ_BASELINES_HPP_
#define GIBBSQ_BASELINES_HPP_

#include "gibbsq/draws.hpp"
#include "gibbsq/loss.hpp"
#include "gibbsq/quantile_solver.hpp"
#include "gibbsq/rng.hpp"
#include "gibbsq/types.hpp"

#include <cstdint>
#include <optional>

namespace gibbsq {

// Conjugate isotropic normal model:
//   X_i | theta, sigma^2 ~ N_d(theta, sigma^2 I),
//   theta ~ N_d(prior_mean, prior_cov),  sigma^-2 ~ Gamma(shape, rate).
struct ParametricBayesConfig {
  Vector prior_mean;  ///< empty means zero
  Matrix prior_cov;   ///< empty means 10 I
  double gamma_shape = 1.0;
  double gamma_rate = 1.0;
  /// Hold sigma^2 at this value instead of updating it.
  std::optional<double> fixed_sigma2;
  int n_draws = 5000;
  int burn_in = 1000;
  std::uint64_t seed = 0;

  void validate(std::size_t d) const;
};

/// Two-block Gibbs sampler for the model above; returns the theta draws.
PosteriorDraws parametric_bayes_sample(const Dataset& data, const ParametricBayesConfig& cfg);

/// Full conditional of theta given sigma^2: N(mean, cov).
struct NormalConditional {
  Vector mean;
  Matrix cov;
};
NormalConditional pbayes_theta_conditional(const Dataset& data, const ParametricBayesConfig& cfg,
                                           double sigma2);
/// Full conditional of the precision sigma^-2 given theta: Gamma(shape, rate).
struct GammaConditional {
  double shape;
  double rate;
};
GammaConditional pbayes_precision_conditional(const Dataset& data, const ParametricBayesConfig& cfg,
                                              const Vector& theta);

// Dirichlet-process posterior DP(base_mass * N(base_mean, base_cov) + sum_i delta_{X_i}),
// approximated by m fresh base atoms of mass base_mass/m each plus the n data
// atoms of mass 1 each, with Dirichlet weights over all m + n atoms.
struct DPConfig {
  double base_mass = 2.0;
  Vector base_mean;  ///< empty means zero
  Matrix base_cov;   ///< empty means I
  int prior_atoms = 50;
  int n_posterior_draws = 5000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  SolverConfig solver;

  void validate(std::size_t d) const;
};

/// Atoms and Dirichlet weights of one approximate posterior draw of P.
struct WeightedAtoms {
  RowMatrix atoms;
  Vector weights;
};
WeightedAtoms dp_posterior_measure(const Dataset& data, const DPConfig& cfg, Rng& rng);

struct DPQuantileDraw {
  Vector theta;
  bool converged = true;
};
/// One draw of theta(P) for P from the DP posterior.
DPQuantileDraw dp_posterior_quantile_draw(const LossSpec& spec, const Dataset& data,
                                          const DPConfig& cfg, Rng& rng);

/// cfg.n_posterior_draws independent draws; draw k uses derive_seed(cfg.seed, k).
PosteriorDraws dp_posterior_sample(const LossSpec& spec, const Dataset& data, const DPConfig& cfg);

// Conjugate normal-inverse-Wishart model X_i ~ N_d(theta, Sigma):
//   Sigma ~ IW(scale, dof),  theta | Sigma ~ N(prior_mean, Sigma / kappa0).
struct NIWConfig {
  Vector prior_mean;  ///< empty means zero
  double kappa0 = 0.01;
  /// Degrees of freedom; <= 0 means d + 2.
  double dof = 0.0;
  Matrix scale;  ///< empty means I
  int n_draws = 5000;
  std::uint64_t seed = 0;

  void validate(std::size_t d) const;
};

struct NIWPosterior {
  Vector mean;
  double kappa;
  double dof;
  Matrix scale;
  /// E[cov(theta | data)] = scale / ((dof - d - 1) kappa).
  Matrix theta_covariance() const;
};
NIWPosterior niw_posterior(const Dataset& data, const NIWConfig& cfg);

/// Exact iid draws of theta from the NIW posterior. Requires n > d.
PosteriorDraws parametric_bayes_wishart_sample(const Dataset& data, const NIWConfig& cfg);

}  // namespace gibbsq

#endif  // GIBBSQ_BASELINES_HPP_
