#include "gibbsq/baselines.hpp"

#include "gibbsq/errors.hpp"
#include "gibbsq/linalg.hpp"
#include "gibbsq/parallel.hpp"

#include <cmath>
#include <sstream>

namespace gibbsq {
namespace {

Vector or_zero(const Vector& v, std::size_t d) {
  return v.size() == 0 ? Vector::Zero(static_cast<Eigen::Index>(d)) : v;
}

Matrix or_scaled_identity(const Matrix& m, std::size_t d, double scale) {
  const auto dim = static_cast<Eigen::Index>(d);
  return m.size() == 0 ? Matrix(scale * Matrix::Identity(dim, dim)) : m;
}

void require_spd(const Matrix& m, std::size_t d, const char* what) {
  const auto dim = static_cast<Eigen::Index>(d);
  if (m.rows() != dim || m.cols() != dim || !m.allFinite() || !is_symmetric(m, 1e-10)) {
    throw InvalidArgument(std::string(what) + ": must be a symmetric d x d matrix");
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw InvalidArgument(std::string(what) + ": not positive definite");
}

Vector mvnormal(const Vector& mean, const Matrix& chol_lower, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector z(mean.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = normal(rng);
  return mean + chol_lower * z;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void ParametricBayesConfig::validate(std::size_t d) const {
  const Vector m = or_zero(prior_mean, d);
  if (static_cast<std::size_t>(m.size()) != d || !m.allFinite()) {
    throw InvalidArgument("ParametricBayesConfig: prior_mean has wrong dimension");
  }
  require_spd(or_scaled_identity(prior_cov, d, 10.0), d, "ParametricBayesConfig: prior_cov");
  if (!(gamma_shape > 0.0) || !(gamma_rate > 0.0)) {
    throw InvalidArgument("ParametricBayesConfig: gamma parameters must be positive");
  }
  if (fixed_sigma2 && !(*fixed_sigma2 > 0.0)) {
    throw InvalidArgument("ParametricBayesConfig: fixed_sigma2 must be positive");
  }
  if (n_draws < 1 || burn_in < 0) throw InvalidArgument("ParametricBayesConfig: bad chain length");
}

NormalConditional pbayes_theta_conditional(const Dataset& data, const ParametricBayesConfig& cfg,
                                           double sigma2) {
  const std::size_t d = data.d();
  const auto dim = static_cast<Eigen::Index>(d);
  const Vector m0 = or_zero(cfg.prior_mean, d);
  const Matrix prior_prec = spd_inverse(or_scaled_identity(cfg.prior_cov, d, 10.0),
                                        std::numeric_limits<double>::infinity());
  const double n = static_cast<double>(data.n());
  const Vector xsum = data.rows().colwise().sum().transpose();
  Matrix prec = prior_prec;
  prec.diagonal().array() += n / sigma2;
  Eigen::LLT<Matrix> llt(prec);
  NormalConditional out;
  out.cov = llt.solve(Matrix::Identity(dim, dim));
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.mean = llt.solve(prior_prec * m0 + xsum / sigma2);
  return out;
}

GammaConditional pbayes_precision_conditional(const Dataset& data, const ParametricBayesConfig& cfg,
                                              const Vector& theta) {
  const double ss = (data.rows().rowwise() - theta.transpose()).squaredNorm();
  return GammaConditional{cfg.gamma_shape + 0.5 * static_cast<double>(data.n() * data.d()),
                          cfg.gamma_rate + 0.5 * ss};
}

PosteriorDraws parametric_bayes_sample(const Dataset& data, const ParametricBayesConfig& cfg) {
  const std::size_t d = data.d();
  cfg.validate(d);
  if (data.n() < 2) throw InvalidArgument("parametric_bayes_sample: need n >= 2");

  Rng rng = make_rng(cfg.seed);
  Vector theta = data.rows().colwise().mean().transpose();
  double sigma2 = cfg.fixed_sigma2.value_or(1.0);

  PosteriorDraws out;
  out.draws.resize(cfg.n_draws, static_cast<Eigen::Index>(d));
  for (int it = 0; it < cfg.burn_in + cfg.n_draws; ++it) {
    if (!cfg.fixed_sigma2) {
      const GammaConditional g = pbayes_precision_conditional(data, cfg, theta);
      std::gamma_distribution<double> gamma(g.shape, 1.0 / g.rate);
      sigma2 = 1.0 / gamma(rng);
    }
    const NormalConditional c = pbayes_theta_conditional(data, cfg, sigma2);
    theta = mvnormal(c.mean, cholesky_lower(c.cov), rng);
    if (it >= cfg.burn_in) out.draws.row(it - cfg.burn_in) = theta.transpose();
  }
  out.method = "pbayes";
  out.acceptance_rate = 1.0;
  out.data_hash = data.hash();
  out.annotate("model", "N_d(theta, sigma^2 I), theta ~ N(m0, S0), sigma^-2 ~ Gamma(a, b)");
  out.annotate("gamma_shape", fmt(cfg.gamma_shape));
  out.annotate("gamma_rate", fmt(cfg.gamma_rate));
  out.annotate("n_draws", std::to_string(cfg.n_draws));
  out.annotate("burn_in", std::to_string(cfg.burn_in));
  out.annotate("seed", std::to_string(cfg.seed));
  if (cfg.fixed_sigma2) out.annotate("fixed_sigma2", fmt(*cfg.fixed_sigma2));
  return out;
}

void DPConfig::validate(std::size_t d) const {
  if (!(base_mass > 0.0) || !std::isfinite(base_mass)) {
    throw InvalidArgument("DPConfig: base_mass must be positive");
  }
  if (prior_atoms < 1) throw InvalidArgument("DPConfig: prior_atoms must be >= 1");
  if (n_posterior_draws < 1) throw InvalidArgument("DPConfig: n_posterior_draws must be >= 1");
  const Vector m = or_zero(base_mean, d);
  if (static_cast<std::size_t>(m.size()) != d) throw InvalidArgument("DPConfig: base_mean dimension");
  require_spd(or_scaled_identity(base_cov, d, 1.0), d, "DPConfig: base_cov");
}

WeightedAtoms dp_posterior_measure(const Dataset& data, const DPConfig& cfg, Rng& rng) {
  const std::size_t d = data.d();
  const std::size_t n = data.n();
  const auto m = static_cast<std::size_t>(cfg.prior_atoms);
  const Vector mean = or_zero(cfg.base_mean, d);
  const Matrix chol = cholesky_lower(or_scaled_identity(cfg.base_cov, d, 1.0));

  WeightedAtoms out;
  out.atoms.resize(static_cast<Eigen::Index>(m + n), static_cast<Eigen::Index>(d));
  out.weights.resize(static_cast<Eigen::Index>(m + n));
  std::gamma_distribution<double> base_gamma(cfg.base_mass / static_cast<double>(m), 1.0);
  std::gamma_distribution<double> data_gamma(1.0, 1.0);
  for (std::size_t k = 0; k < m; ++k) {
    out.atoms.row(static_cast<Eigen::Index>(k)) = mvnormal(mean, chol, rng).transpose();
    out.weights[static_cast<Eigen::Index>(k)] = base_gamma(rng);
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.atoms.row(static_cast<Eigen::Index>(m + i)) = data.rows().row(static_cast<Eigen::Index>(i));
    out.weights[static_cast<Eigen::Index>(m + i)] = data_gamma(rng);
  }
  out.weights /= out.weights.sum();
  return out;
}

DPQuantileDraw dp_posterior_quantile_draw(const LossSpec& spec, const Dataset& data,
                                          const DPConfig& cfg, Rng& rng) {
  cfg.validate(data.d());
  if (data.d() != spec.d()) throw InvalidArgument("dp_posterior_quantile_draw: dimension mismatch");
  const WeightedAtoms p = dp_posterior_measure(data, cfg, rng);
  const Dataset atoms(p.atoms);
  const WeightVector w = WeightVector::from_masses(p.weights);
  const QuantileEstimate est = solve_weighted_atoms(spec, atoms, w, cfg.solver);
  return DPQuantileDraw{est.theta_hat, est.converged};
}

PosteriorDraws dp_posterior_sample(const LossSpec& spec, const Dataset& data, const DPConfig& cfg) {
  cfg.validate(data.d());
  const auto count = static_cast<std::size_t>(cfg.n_posterior_draws);
  PosteriorDraws out;
  out.draws.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(data.d()));
  std::vector<char> converged(count, 1);
  parallel_for(count, cfg.threads, [&](std::size_t k) {
    Rng rng = make_rng(derive_seed(cfg.seed, k));
    const DPQuantileDraw draw = dp_posterior_quantile_draw(spec, data, cfg, rng);
    out.draws.row(static_cast<Eigen::Index>(k)) = draw.theta.transpose();
    converged[k] = draw.converged ? 1 : 0;
  });
  std::size_t failed = 0;
  for (char c : converged) failed += c ? 0 : 1;
  out.method = "npbayes";
  out.acceptance_rate = 1.0;
  out.data_hash = data.hash();
  out.annotate("loss", spec.describe());
  out.annotate("base_mass", fmt(cfg.base_mass));
  out.annotate("prior_atoms", std::to_string(cfg.prior_atoms));
  out.annotate("n_posterior_draws", std::to_string(cfg.n_posterior_draws));
  out.annotate("seed", std::to_string(cfg.seed));
  out.annotate("solver_nonconverged", std::to_string(failed));
  if (failed > 0) {
    out.warnings.push_back(std::to_string(failed) + " weighted-quantile solves did not converge");
  }
  return out;
}

void NIWConfig::validate(std::size_t d) const {
  const Vector m = or_zero(prior_mean, d);
  if (static_cast<std::size_t>(m.size()) != d) throw InvalidArgument("NIWConfig: prior_mean dimension");
  if (!(kappa0 > 0.0)) throw InvalidArgument("NIWConfig: kappa0 must be positive");
  const double nu = dof > 0.0 ? dof : static_cast<double>(d) + 2.0;
  if (!(nu > static_cast<double>(d) - 1.0)) {
    throw InvalidArgument("NIWConfig: degrees of freedom must exceed d - 1");
  }
  require_spd(or_scaled_identity(scale, d, 1.0), d, "NIWConfig: scale");
  if (n_draws < 1) throw InvalidArgument("NIWConfig: n_draws must be >= 1");
}

Matrix NIWPosterior::theta_covariance() const {
  const double d = static_cast<double>(mean.size());
  return scale / ((dof - d - 1.0) * kappa);
}

NIWPosterior niw_posterior(const Dataset& data, const NIWConfig& cfg) {
  const std::size_t d = data.d();
  cfg.validate(d);
  if (data.n() <= d) throw InvalidArgument("niw_posterior: insufficient data (need n > d)");
  const double n = static_cast<double>(data.n());
  const Vector mu0 = or_zero(cfg.prior_mean, d);
  const double nu0 = cfg.dof > 0.0 ? cfg.dof : static_cast<double>(d) + 2.0;
  const Matrix psi0 = or_scaled_identity(cfg.scale, d, 1.0);

  const Vector xbar = data.rows().colwise().mean().transpose();
  const Matrix centered = data.rows().rowwise() - xbar.transpose();
  const Matrix scatter = centered.transpose() * centered;

  NIWPosterior post;
  post.kappa = cfg.kappa0 + n;
  post.dof = nu0 + n;
  post.mean = (cfg.kappa0 * mu0 + n * xbar) / post.kappa;
  const Vector diff = xbar - mu0;
  post.scale = psi0 + scatter + (cfg.kappa0 * n / post.kappa) * (diff * diff.transpose());
  post.scale = 0.5 * (post.scale + post.scale.transpose());
  return post;
}

PosteriorDraws parametric_bayes_wishart_sample(const Dataset& data, const NIWConfig& cfg) {
  const NIWPosterior post = niw_posterior(data, cfg);
  const auto d = static_cast<Eigen::Index>(data.d());
  Rng rng = make_rng(cfg.seed);
  std::normal_distribution<double> normal;

  // Sigma = W^-1 with W ~ Wishart(scale^-1, dof) by the Bartlett decomposition.
  const Matrix wish_chol = cholesky_lower(spd_inverse(post.scale, std::numeric_limits<double>::infinity()));
  PosteriorDraws out;
  out.draws.resize(cfg.n_draws, d);
  for (int k = 0; k < cfg.n_draws; ++k) {
    Matrix a = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      std::chi_squared_distribution<double> chi(post.dof - static_cast<double>(i));
      a(i, i) = std::sqrt(chi(rng));
      for (Eigen::Index j = 0; j < i; ++j) a(i, j) = normal(rng);
    }
    const Matrix la = wish_chol * a;
    const Matrix w = la * la.transpose();
    Matrix sigma = spd_inverse(w, std::numeric_limits<double>::infinity());
    const Vector theta = mvnormal(post.mean, cholesky_lower(sigma / post.kappa), rng);
    out.draws.row(k) = theta.transpose();
  }
  out.method = "pbayes-wishart";
  out.acceptance_rate = 1.0;
  out.data_hash = data.hash();
  out.annotate("kappa0", fmt(cfg.kappa0));
  out.annotate("dof", fmt(cfg.dof > 0.0 ? cfg.dof : static_cast<double>(d) + 2.0));
  out.annotate("n_draws", std::to_string(cfg.n_draws));
  out.annotate("seed", std::to_string(cfg.seed));
  return out;
}

}  // namespace gibbsq
