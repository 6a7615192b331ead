#ifndef GIBBSQ_GIBBS_HPP_
#define GIBBSQ_GIBBS_HPP_

#include "gibbsq/draws.hpp"
#include "gibbsq/loss.hpp"
#include "gibbsq/types.hpp"

#include <cstdint>
#include <optional>

namespace gibbsq {

/// Gaussian prior N(mean, covariance) on theta.
struct PriorSpec {
  Vector mean;
  Matrix covariance;

  /// N(0, variance * I_d); the simulation default is variance = 10.
  static PriorSpec isotropic(std::size_t d, double variance = 10.0);
  void validate(std::size_t d) const;
};

/// Log prior density up to its normalizing constant, with the precision
/// matrix factored once.
class GaussianLogDensity {
 public:
  explicit GaussianLogDensity(const PriorSpec& prior);
  double operator()(const Vector& theta) const;

 private:
  Vector mean_;
  Matrix precision_;
};

struct GibbsConfig {
  double omega = 1.0;
  int n_draws = 5000;
  int burn_in = 2000;
  int thin = 1;
  /// Proposal covariance is proposal_scale * I_d.
  double proposal_scale = 0.01;
  /// Tune proposal_scale towards 25-40% acceptance during burn-in only.
  bool adapt_proposal = false;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t retained() const { return static_cast<std::size_t>(n_draws / thin); }
};

/// -omega * n * R_n(theta) + log pi(theta), dropping the prior's normalizing
/// constant. omega = 0 gives the prior alone.
double log_unnormalized_posterior(const LossSpec& spec, const Dataset& data,
                                  const PriorSpec& prior, double omega, const Vector& theta);

/// min(1, exp(log_proposed - log_current)) for a symmetric proposal.
double mh_acceptance_probability(double log_current, double log_proposed);

/// Random-walk Metropolis-Hastings draws from the Gibbs posterior
///   pi_n(theta) ~ exp(-omega n R_n(theta)) pi(theta).
///
/// The chain starts at the M-estimate (or `start` when given), runs burn_in
/// steps, then keeps every thin-th of n_draws steps. Deterministic given
/// cfg.seed. Acceptance rates outside [0.1, 0.6] are reported in warnings.
PosteriorDraws sample(const LossSpec& spec, const Dataset& data, const PriorSpec& prior,
                      const GibbsConfig& cfg, const std::optional<Vector>& start = std::nullopt);

}  // namespace gibbsq

#endif  // GIBBSQ_GIBBS_HPP_
