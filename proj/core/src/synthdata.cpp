#include "gibbsq/synthdata.hpp"

#include "gibbsq/errors.hpp"
#include "gibbsq/linalg.hpp"
#include "gibbsq/quantile_solver.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <sstream>

namespace gibbsq {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_spd(const Matrix& m, Eigen::Index d, const char* what) {
  if (m.rows() != d || m.cols() != d || !m.allFinite() || !is_symmetric(m, 1e-12)) {
    throw InvalidArgument(std::string(what) + " must be a symmetric d x d matrix");
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw InvalidArgument(std::string(what) + " must be positive definite");
}

std::string vec_str(const Vector& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ")";
  return os.str();
}

std::string mat_str(const Matrix& m) {
  std::ostringstream os;
  os << "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Vector row = m.row(i).transpose();
    os << (i ? "," : "") << vec_str(row);
  }
  os << "]";
  return os.str();
}

Matrix two_by_two(double diag, double off) {
  Matrix m(2, 2);
  m << diag, off, off, diag;
  return m;
}

const GeneratorSpec& expect(const GeneratorSpec& spec) {
  spec.validate();
  return spec;
}

}  // namespace

std::size_t GeneratorSpec::d() const {
  return std::visit(Overloaded{[](const MvNormalLaw& l) { return static_cast<std::size_t>(l.mean.size()); },
                               [](const MvLaplaceLaw& l) { return static_cast<std::size_t>(l.mu.size()); },
                               [](const GammaCopulaLaw& l) { return static_cast<std::size_t>(l.corr.rows()); }},
                    law);
}

void GeneratorSpec::validate() const {
  std::visit(Overloaded{[](const MvNormalLaw& l) {
                          if (l.mean.size() < 1 || !l.mean.allFinite()) {
                            throw InvalidArgument("mvnormal: mean must be a finite non-empty vector");
                          }
                          require_spd(l.cov, l.mean.size(), "mvnormal: cov");
                        },
                        [](const MvLaplaceLaw& l) {
                          if (l.mu.size() < 1 || !l.mu.allFinite()) {
                            throw InvalidArgument("mvlaplace: mu must be a finite non-empty vector");
                          }
                          require_spd(l.sigma, l.mu.size(), "mvlaplace: sigma");
                        },
                        [](const GammaCopulaLaw& l) {
                          if (!(l.shape > 0.0) || !(l.rate > 0.0) || !std::isfinite(l.shape) ||
                              !std::isfinite(l.rate)) {
                            throw InvalidArgument("gammacopula: shape and rate must be positive");
                          }
                          if (l.corr.rows() < 1) throw InvalidArgument("gammacopula: empty corr");
                          require_spd(l.corr, l.corr.rows(), "gammacopula: corr");
                          for (Eigen::Index i = 0; i < l.corr.rows(); ++i) {
                            if (std::abs(l.corr(i, i) - 1.0) > 1e-12) {
                              throw InvalidArgument("gammacopula: corr must have unit diagonal");
                            }
                          }
                        }},
             law);
}

std::string GeneratorSpec::describe() const {
  std::ostringstream os;
  std::visit(Overloaded{[&](const MvNormalLaw& l) {
                          os << "mvnormal(mean=" << vec_str(l.mean) << ", cov=" << mat_str(l.cov) << ")";
                        },
                        [&](const MvLaplaceLaw& l) {
                          os << "mvlaplace(mu=" << vec_str(l.mu) << ", sigma=" << mat_str(l.sigma) << ")";
                        },
                        [&](const GammaCopulaLaw& l) {
                          os << "gammacopula(shape=" << l.shape << ", rate=" << l.rate
                             << ", corr=" << mat_str(l.corr) << ")";
                        }},
             law);
  os << " seed=" << seed;
  return os.str();
}

GeneratorSpec GeneratorSpec::with_seed(std::uint64_t s) const {
  GeneratorSpec out = *this;
  out.seed = s;
  return out;
}

GeneratorSpec example1(std::uint64_t seed) {
  return GeneratorSpec{MvNormalLaw{Vector::Ones(2), two_by_two(1.0, 0.7)}, seed};
}

GeneratorSpec example2(std::uint64_t seed) {
  return GeneratorSpec{MvLaplaceLaw{Vector::Ones(2), Matrix::Identity(2, 2)}, seed};
}

GeneratorSpec example3(std::uint64_t seed) {
  return GeneratorSpec{GammaCopulaLaw{1.0, 1.0, two_by_two(1.0, 0.5)}, seed};
}

GeneratorSpec example_by_name(const std::string& name, std::uint64_t seed) {
  if (name == "ex1") return example1(seed);
  if (name == "ex2") return example2(seed);
  if (name == "ex3") return example3(seed);
  throw InvalidArgument("unknown example '" + name + "' (expected ex1, ex2 or ex3)");
}

double normal_cdf(double z) { return 0.5 * boost::math::erfc(-z / std::sqrt(2.0)); }

double normal_sf(double z) { return 0.5 * boost::math::erfc(z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal_quantile: p outside (0,1)");
  return boost::math::quantile(boost::math::normal(), p);
}

double gamma_quantile_at_normal(double shape, double rate, double z) {
  if (z > 0.0) return boost::math::gamma_q_inv(shape, normal_sf(z)) / rate;
  return boost::math::gamma_p_inv(shape, normal_cdf(z)) / rate;
}

Vector standardized_laplace_draw(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal;
  std::gamma_distribution<double> radius(0.5 * (static_cast<double>(d) + 1.0), 1.0 / kLaplaceRate);
  Vector z(static_cast<Eigen::Index>(d));
  double len = 0.0;
  do {
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = normal(rng);
    len = z.norm();
  } while (!(len > 0.0));
  return (radius(rng) / len) * z;
}

Dataset sample_mvnormal(const GeneratorSpec& spec, std::size_t n) {
  const auto& law = std::get<MvNormalLaw>(expect(spec).law);
  const auto d = law.mean.size();
  const Matrix chol = cholesky_lower(law.cov);
  Rng rng = make_rng(spec.seed);
  std::normal_distribution<double> normal;
  RowMatrix rows(static_cast<Eigen::Index>(n), d);
  Vector z(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(rng);
    rows.row(static_cast<Eigen::Index>(i)) = (law.mean + chol * z).transpose();
  }
  return Dataset(std::move(rows));
}

Dataset sample_mvlaplace(const GeneratorSpec& spec, std::size_t n) {
  const auto& law = std::get<MvLaplaceLaw>(expect(spec).law);
  const auto d = law.mu.size();
  const Matrix root = symmetric_sqrt(law.sigma);
  Rng rng = make_rng(spec.seed);
  RowMatrix rows(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector z = standardized_laplace_draw(static_cast<std::size_t>(d), rng);
    rows.row(static_cast<Eigen::Index>(i)) = (law.mu + root * z).transpose();
  }
  return Dataset(std::move(rows));
}

Dataset sample_gammacopula(const GeneratorSpec& spec, std::size_t n) {
  const auto& law = std::get<GammaCopulaLaw>(expect(spec).law);
  const auto d = law.corr.rows();
  const Matrix chol = cholesky_lower(law.corr);
  Rng rng = make_rng(spec.seed);
  std::normal_distribution<double> normal;
  RowMatrix rows(static_cast<Eigen::Index>(n), d);
  Vector e(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) e[j] = normal(rng);
    const Vector z = chol * e;
    for (Eigen::Index j = 0; j < d; ++j) {
      rows(static_cast<Eigen::Index>(i), j) = gamma_quantile_at_normal(law.shape, law.rate, z[j]);
    }
  }
  return Dataset(std::move(rows));
}

Dataset sample(const GeneratorSpec& spec, std::size_t n) {
  if (n == 0) throw InvalidArgument("sample: n must be >= 1");
  return std::visit(Overloaded{[&](const MvNormalLaw&) { return sample_mvnormal(spec, n); },
                               [&](const MvLaplaceLaw&) { return sample_mvlaplace(spec, n); },
                               [&](const GammaCopulaLaw&) { return sample_gammacopula(spec, n); }},
                    spec.law);
}

TruthRecord true_quantile(const GeneratorSpec& spec, const LossSpec& loss, std::size_t n_oracle,
                          bool force_large_sample) {
  spec.validate();
  if (loss.d() != spec.d()) throw InvalidArgument("true_quantile: dimension mismatch");
  TruthRecord out;
  out.seed = spec.seed;
  const bool elliptical = !std::holds_alternative<GammaCopulaLaw>(spec.law);
  if (elliptical && loss.u().isZero(0.0) && !force_large_sample) {
    out.method = TruthMethod::Analytic;
    out.theta_star = std::visit(Overloaded{[](const MvNormalLaw& l) { return l.mean; },
                                           [](const MvLaplaceLaw& l) { return l.mu; },
                                           [](const GammaCopulaLaw&) { return Vector(); }},
                                spec.law);
    return out;
  }
  if (n_oracle < kOracleSize) {
    throw InvalidArgument("true_quantile: large-sample oracle needs n_oracle >= 10^6");
  }
  const Dataset big = sample(spec, n_oracle);
  const QuantileEstimate est = solve(loss, big);
  out.method = TruthMethod::LargeSample;
  out.theta_star = est.theta_hat;
  out.n_oracle = n_oracle;
  return out;
}

std::string to_string(TruthMethod m) {
  return m == TruthMethod::Analytic ? "analytic" : "large-sample";
}

}  // namespace gibbsq
