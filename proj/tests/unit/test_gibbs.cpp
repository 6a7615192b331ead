#include "gibbsq/errors.hpp"
#include "gibbsq/gibbs.hpp"
#include "gibbsq/linalg.hpp"
#include "gibbsq/quantile_solver.hpp"
#include "gibbsq/synthdata.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace gibbsq;
using namespace gibbsq::testing;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

double gaussian_log_kernel(const PriorSpec& p, const Vector& th) {
  const Vector c = th - p.mean;
  return -0.5 * c.dot(p.covariance.inverse() * c);
}

}  // namespace

TEST_SUITE("gibbs") {

TEST_CASE("log posterior differences follow the definition") {
  Rng rng(1);
  const Dataset data = random_dataset(rng, 50, 2);
  const LossSpec spec(v2(0.2, -0.1), 3.0);
  PriorSpec prior;
  prior.mean = v2(0.5, -1.0);
  prior.covariance = (Matrix(2, 2) << 4.0, 1.0, 1.0, 2.0).finished();
  for (int k = 0; k < 50; ++k) {
    const double omega = uniform(rng, 0.1, 5.0);
    const Vector a = random_vector(rng, 2), b = random_vector(rng, 2);
    const double lhs = log_unnormalized_posterior(spec, data, prior, omega, a) -
                       log_unnormalized_posterior(spec, data, prior, omega, b);
    const double n = 50.0;
    const double rhs = -omega * n * (empirical_risk(spec, data, a) - empirical_risk(spec, data, b)) +
                       gaussian_log_kernel(prior, a) - gaussian_log_kernel(prior, b);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("flat-prior limit: grid argmax of the log posterior is the M-estimate") {
  const Dataset data = sample(example1(3), 100);
  const LossSpec spec = LossSpec::median(2);
  PriorSpec flat{Vector::Zero(2), 1e12 * Matrix::Identity(2, 2)};
  const Vector hat = solve(spec, data).theta_hat;
  const double step = 0.005;
  Vector best = hat;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = -40; i <= 40; ++i) {
    for (int j = -40; j <= 40; ++j) {
      const Vector th = hat + v2(i * step + 0.0013, j * step - 0.0021);
      const double v = log_unnormalized_posterior(spec, data, flat, 1.0, th);
      if (v > best_val) {
        best_val = v;
        best = th;
      }
    }
  }
  CHECK((best - hat).norm() <= step);
}

TEST_CASE("MH acceptance probability is min(1, exp(delta)) and satisfies detailed balance") {
  CHECK(mh_acceptance_probability(-3.0, -1.0) == 1.0);
  CHECK(mh_acceptance_probability(-1.0, -3.0) == doctest::Approx(std::exp(-2.0)));
  CHECK(mh_acceptance_probability(-1.0, -std::numeric_limits<double>::infinity()) == 0.0);
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const double la = uniform(rng, -50, 0), lb = uniform(rng, -50, 0);
    // pi(a) q(b|a) alpha(a->b) = pi(b) q(a|b) alpha(b->a) for a symmetric q.
    const double lhs = std::exp(la) * mh_acceptance_probability(la, lb);
    const double rhs = std::exp(lb) * mh_acceptance_probability(lb, la);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("config and prior validation") {
  GibbsConfig cfg;
  cfg.omega = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = GibbsConfig{};
  cfg.thin = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = GibbsConfig{};
  cfg.n_draws = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  PriorSpec bad{Vector::Zero(2), -Matrix::Identity(2, 2)};
  CHECK_THROWS_AS(bad.validate(2), InvalidArgument);
  CHECK_THROWS_AS(PriorSpec::isotropic(2).validate(3), InvalidArgument);
}

TEST_CASE("seed repeatability and draw count") {
  const Dataset data = sample(example1(5), 100);
  GibbsConfig cfg;
  cfg.n_draws = 1000;
  cfg.burn_in = 100;
  cfg.thin = 3;
  cfg.seed = 99;
  const LossSpec spec = LossSpec::median(2);
  const PosteriorDraws a = sample(spec, data, PriorSpec::isotropic(2), cfg);
  const PosteriorDraws b = sample(spec, data, PriorSpec::isotropic(2), cfg);
  CHECK(a.size() == 333);
  CHECK(a.draws == b.draws);
  CHECK(a.acceptance_rate == b.acceptance_rate);
  CHECK(a.acceptance_rate >= 0.0);
  CHECK(a.acceptance_rate <= 1.0);
  CHECK(a.draws.allFinite());
  CHECK(a.data_hash == data.hash());
  cfg.seed = 100;
  CHECK(sample(spec, data, PriorSpec::isotropic(2), cfg).draws != a.draws);
}

TEST_CASE("posterior mean is near the M-estimate (Example 1, n = 100)") {
  const Dataset data = sample(example1(7), 100);
  const LossSpec spec = LossSpec::median(2);
  GibbsConfig cfg;
  cfg.seed = 8;
  const PosteriorDraws d = sample(spec, data, PriorSpec::isotropic(2), cfg);
  const Vector hat = solve(spec, data).theta_hat;
  for (Eigen::Index j = 0; j < 2; ++j) {
    const auto col = column(d.draws, j);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / col.size();
    CHECK(std::abs(mean - hat[j]) <= 3 * batch_means_se(col));
  }
}

TEST_CASE("near-zero omega: draws follow the prior") {
  const Dataset data = sample(example1(9), 100);
  GibbsConfig cfg;
  cfg.omega = 1e-12;
  cfg.n_draws = 40000;
  cfg.burn_in = 2000;
  cfg.proposal_scale = 10.0;
  cfg.seed = 10;
  const PosteriorDraws d = sample(LossSpec::median(2), data, PriorSpec::isotropic(2, 10.0), cfg, Vector::Zero(2));
  for (Eigen::Index j = 0; j < 2; ++j) {
    const auto col = column(d.draws, j);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / col.size();
    CHECK(std::abs(mean) <= 3 * batch_means_se(col));
    std::vector<double> sq(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) sq[i] = col[i] * col[i];
    const double second = std::accumulate(sq.begin(), sq.end(), 0.0) / sq.size();
    CHECK(std::abs(second - 10.0) <= 3 * batch_means_se(sq));
  }
}

TEST_CASE("BvM: posterior covariance approaches (omega n V)^-1 at n = 2000") {
  const LossSpec spec = LossSpec::median(2);
  const Dataset data = sample(example1(11), 2000);
  const Vector hat = solve(spec, data).theta_hat;
  const Matrix target = spd_inverse(2000.0 * plugin_V(spec, data, hat).value);
  GibbsConfig cfg;
  cfg.adapt_proposal = true;
  cfg.n_draws = 20000;
  cfg.seed = 12;
  const PosteriorDraws d = sample(spec, data, PriorSpec::isotropic(2), cfg);
  CHECK(rel_frobenius(row_covariance(d.draws), target) <= 0.15);
  CHECK(d.acceptance_rate > 0.2);
  CHECK(d.acceptance_rate < 0.5);
}

TEST_CASE("concentration: mass outside log(n)/sqrt(n) of the truth decreases") {
  const LossSpec spec = LossSpec::median(2);
  std::vector<double> outside;
  for (std::size_t n : {50, 500}) {
    const Dataset data = sample(example1(13 + n), n);
    GibbsConfig cfg;
    cfg.adapt_proposal = true;
    cfg.seed = 14;
    const PosteriorDraws d = sample(spec, data, PriorSpec::isotropic(2), cfg);
    const double radius = std::log(static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
    int out = 0;
    for (Eigen::Index i = 0; i < d.draws.rows(); ++i) {
      if ((d.draws.row(i).transpose() - Vector::Ones(2)).norm() > radius) ++out;
    }
    outside.push_back(static_cast<double>(out) / d.draws.rows());
  }
  MESSAGE("posterior mass outside log(n)/sqrt(n): n=50 ", outside[0], ", n=500 ", outside[1]);
  CHECK(outside[1] < outside[0]);
}

TEST_CASE("row permutation leaves the posterior unchanged in distribution") {
  Dataset data = sample(example1(15), 100);
  RowMatrix rev = data.rows().colwise().reverse();
  const Dataset permuted(rev);
  const LossSpec spec = LossSpec::median(2);
  GibbsConfig cfg;
  cfg.n_draws = 20000;
  cfg.seed = 16;
  const PosteriorDraws a = sample(spec, data, PriorSpec::isotropic(2), cfg);
  cfg.seed = 17;
  const PosteriorDraws b = sample(spec, permuted, PriorSpec::isotropic(2), cfg);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const auto ca = column(a.draws, j), cb = column(b.draws, j);
    const double ma = std::accumulate(ca.begin(), ca.end(), 0.0) / ca.size();
    const double mb = std::accumulate(cb.begin(), cb.end(), 0.0) / cb.size();
    const double se = std::hypot(batch_means_se(ca), batch_means_se(cb));
    CHECK(std::abs(ma - mb) <= 4 * se);
  }
  CHECK(rel_frobenius(row_covariance(a.draws), row_covariance(b.draws)) < 0.2);
}

TEST_CASE("provenance and acceptance warnings") {
  const Dataset data = sample(example1(19), 100);
  GibbsConfig cfg;
  cfg.n_draws = 500;
  cfg.burn_in = 0;
  cfg.proposal_scale = 100.0;
  cfg.seed = 20;
  const PosteriorDraws d = sample(LossSpec::median(2), data, PriorSpec::isotropic(2), cfg);
  CHECK(d.method == "gibbs");
  CHECK_FALSE(d.warnings.empty());
  bool has_omega = false;
  for (const auto& [k, v] : d.provenance) has_omega = has_omega || k == "omega";
  CHECK(has_omega);
}

}  // TEST_SUITE
