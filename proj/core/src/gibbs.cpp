#include "gibbsq/gibbs.hpp"

#include "gibbsq/errors.hpp"
#include "gibbsq/linalg.hpp"
#include "gibbsq/quantile_solver.hpp"
#include "gibbsq/rng.hpp"

#include <cmath>
#include <sstream>

namespace gibbsq {

PriorSpec PriorSpec::isotropic(std::size_t d, double variance) {
  const auto dim = static_cast<Eigen::Index>(d);
  return PriorSpec{Vector::Zero(dim), variance * Matrix::Identity(dim, dim)};
}

void PriorSpec::validate(std::size_t d) const {
  const auto dim = static_cast<Eigen::Index>(d);
  if (mean.size() != dim || covariance.rows() != dim || covariance.cols() != dim) {
    throw InvalidArgument("PriorSpec: dimension mismatch");
  }
  if (!mean.allFinite() || !covariance.allFinite()) {
    throw InvalidArgument("PriorSpec: non-finite entries");
  }
  if (!is_symmetric(covariance, 1e-10)) throw InvalidArgument("PriorSpec: covariance not symmetric");
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument("PriorSpec: covariance not positive definite");
  }
}

GaussianLogDensity::GaussianLogDensity(const PriorSpec& prior) : mean_(prior.mean) {
  prior.validate(static_cast<std::size_t>(prior.mean.size()));
  // Very flat priors (covariance ~1e12 I) are legitimate; skip the
  // condition-number guard and invert through the Cholesky factor directly.
  Eigen::LLT<Matrix> llt(prior.covariance);
  precision_ = llt.solve(Matrix::Identity(prior.covariance.rows(), prior.covariance.cols()));
  precision_ = 0.5 * (precision_ + precision_.transpose());
}

double GaussianLogDensity::operator()(const Vector& theta) const {
  const Vector c = theta - mean_;
  return -0.5 * c.dot(precision_ * c);
}

void GibbsConfig::validate() const {
  if (!std::isfinite(omega) || !(omega > 0.0)) {
    throw InvalidArgument("GibbsConfig: learning rate omega must be positive");
  }
  if (n_draws < 1) throw InvalidArgument("GibbsConfig: n_draws must be >= 1");
  if (burn_in < 0) throw InvalidArgument("GibbsConfig: burn_in must be >= 0");
  if (thin < 1) throw InvalidArgument("GibbsConfig: thin must be >= 1");
  if (n_draws / thin < 1) throw InvalidArgument("GibbsConfig: n_draws / thin must be >= 1");
  if (!std::isfinite(proposal_scale) || !(proposal_scale > 0.0)) {
    throw InvalidArgument("GibbsConfig: proposal_scale must be positive");
  }
}

double log_unnormalized_posterior(const LossSpec& spec, const Dataset& data,
                                  const PriorSpec& prior, double omega, const Vector& theta) {
  if (!std::isfinite(omega) || omega < 0.0) {
    throw InvalidArgument("log_unnormalized_posterior: omega must be >= 0");
  }
  if (static_cast<std::size_t>(theta.size()) != spec.d() || !theta.allFinite()) {
    throw InvalidArgument("log_unnormalized_posterior: theta has wrong dimension or is non-finite");
  }
  prior.validate(spec.d());
  return -omega * total_loss(spec, data, theta) + GaussianLogDensity(prior)(theta);
}

double mh_acceptance_probability(double log_current, double log_proposed) {
  const double delta = log_proposed - log_current;
  if (delta >= 0.0) return 1.0;
  return std::exp(delta);
}

PosteriorDraws sample(const LossSpec& spec, const Dataset& data, const PriorSpec& prior,
                      const GibbsConfig& cfg, const std::optional<Vector>& start) {
  cfg.validate();
  prior.validate(spec.d());
  if (data.d() != spec.d()) throw InvalidArgument("sample: dataset/loss dimension mismatch");

  const TotalLoss total(spec, data);
  const GaussianLogDensity log_prior(prior);
  const double omega = cfg.omega;
  auto log_target = [&](const Vector& theta) { return -omega * total(theta) + log_prior(theta); };

  Vector theta;
  if (start) {
    if (static_cast<std::size_t>(start->size()) != spec.d() || !start->allFinite()) {
      throw InvalidArgument("sample: start point has wrong dimension");
    }
    theta = *start;
  } else {
    theta = solve(spec, data).theta_hat;
  }

  Rng rng = make_rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  const auto d = static_cast<Eigen::Index>(spec.d());

  double step_var = cfg.proposal_scale;
  double lp = log_target(theta);
  Vector proposal(d);

  auto step = [&]() -> bool {
    const double sd = std::sqrt(step_var);
    for (Eigen::Index j = 0; j < d; ++j) proposal[j] = theta[j] + sd * normal(rng);
    const double lp_new = log_target(proposal);
    if (std::log(unif(rng)) < lp_new - lp) {
      theta = proposal;
      lp = lp_new;
      return true;
    }
    return false;
  };

  constexpr int kAdaptWindow = 100;
  int window_accepts = 0;
  for (int it = 0; it < cfg.burn_in; ++it) {
    window_accepts += step() ? 1 : 0;
    if (cfg.adapt_proposal && (it + 1) % kAdaptWindow == 0) {
      const double rate = static_cast<double>(window_accepts) / kAdaptWindow;
      if (rate < 0.25) {
        step_var *= 0.64;
      } else if (rate > 0.40) {
        step_var *= 1.44;
      }
      window_accepts = 0;
    }
  }

  PosteriorDraws out;
  out.draws.resize(static_cast<Eigen::Index>(cfg.retained()), d);
  long accepted = 0;
  Eigen::Index row = 0;
  for (int it = 0; it < cfg.n_draws; ++it) {
    accepted += step() ? 1 : 0;
    if ((it + 1) % cfg.thin == 0 && row < out.draws.rows()) {
      out.draws.row(row++) = theta.transpose();
    }
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.n_draws);
  out.method = "gibbs";
  out.data_hash = data.hash();

  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  out.annotate("loss", spec.describe());
  out.annotate("omega", num(cfg.omega));
  out.annotate("n_draws", std::to_string(cfg.n_draws));
  out.annotate("burn_in", std::to_string(cfg.burn_in));
  out.annotate("thin", std::to_string(cfg.thin));
  out.annotate("proposal_scale", num(cfg.proposal_scale));
  out.annotate("final_proposal_scale", num(step_var));
  out.annotate("seed", std::to_string(cfg.seed));
  out.annotate("prior_mean", [&] {
    std::ostringstream os;
    for (Eigen::Index j = 0; j < prior.mean.size(); ++j) os << (j ? " " : "") << prior.mean[j];
    return os.str();
  }());
  if (out.acceptance_rate < 0.1 || out.acceptance_rate > 0.6) {
    out.warnings.push_back("acceptance rate " + num(out.acceptance_rate) +
                           " outside [0.1, 0.6]; consider adjusting proposal_scale");
  }
  return out;
}

}  // namespace gibbsq
