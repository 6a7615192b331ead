#include "gibbsq/credible.hpp"

#include "gibbsq/errors.hpp"
#include "gibbsq/linalg.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace gibbsq {

void CredibleEllipse::validate() const {
  const Eigen::Index d = center.size();
  if (d < 1 || shape.rows() != d || shape.cols() != d) {
    throw InvalidArgument("CredibleEllipse: dimension mismatch");
  }
  if (!center.allFinite() || !shape.allFinite()) {
    throw InvalidArgument("CredibleEllipse: non-finite entries");
  }
  if (!is_symmetric(shape, 1e-9)) throw InvalidArgument("CredibleEllipse: shape not symmetric");
  Eigen::LLT<Matrix> llt(shape);
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument("CredibleEllipse: shape not positive definite");
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidArgument("CredibleEllipse: radius must be positive");
  }
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("CredibleEllipse: level outside (0,1)");
}

double chi_square_quantile(double level, std::size_t dof) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("chi_square_quantile: level outside (0,1)");
  if (dof == 0) throw InvalidArgument("chi_square_quantile: dof must be positive");
  const boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(dist, level));
}

double mahalanobis_sq(const CredibleEllipse& e, const Vector& point) {
  if (point.size() != e.center.size()) throw InvalidArgument("mahalanobis_sq: dimension mismatch");
  Eigen::LLT<Matrix> llt(e.shape);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("mahalanobis_sq: shape not SPD");
  const Vector c = point - e.center;
  return c.dot(llt.solve(c));
}

CredibleEllipse ellipse_from_draws(const RowMatrix& draws, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("ellipse_from_draws: level outside (0,1)");
  const Eigen::Index m = draws.rows();
  const Eigen::Index d = draws.cols();
  if (d < 1) throw InvalidArgument("ellipse_from_draws: zero-dimensional draws");
  if (m < d + 2) {
    throw DegenerateDrawsError("ellipse_from_draws: need at least d + 2 draws");
  }
  if (!draws.allFinite()) throw DegenerateDrawsError("ellipse_from_draws: non-finite draws");

  CredibleEllipse e;
  e.level = level;
  e.center = row_mean(draws);
  e.shape = row_covariance(draws);
  e.shape = 0.5 * (e.shape + e.shape.transpose());
  if (!(condition_number(e.shape) <= kMaxConditionNumber)) {
    throw DegenerateDrawsError("ellipse_from_draws: draw covariance is singular");
  }
  Eigen::LLT<Matrix> llt(e.shape);
  if (llt.info() != Eigen::Success) {
    throw DegenerateDrawsError("ellipse_from_draws: draw covariance is singular");
  }

  std::vector<double> stat(static_cast<std::size_t>(m));
  const Matrix l_inv = llt.matrixL().solve(Matrix::Identity(d, d));
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vector c = draws.row(i).transpose() - e.center;
    stat[static_cast<std::size_t>(i)] = (l_inv * c).squaredNorm();
  }
  // Nearest rank: the ceil((1 - level) M)-th smallest value.
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - level) * static_cast<double>(m) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, static_cast<std::size_t>(m));
  std::nth_element(stat.begin(), stat.begin() + static_cast<std::ptrdiff_t>(rank - 1), stat.end());
  e.radius = stat[rank - 1];
  if (!(e.radius > 0.0)) throw DegenerateDrawsError("ellipse_from_draws: zero radius");
  return e;
}

CredibleEllipse ellipse_from_draws(const PosteriorDraws& draws, double level) {
  return ellipse_from_draws(draws.draws, level);
}

double ellipse_size(const CredibleEllipse& e) {
  return e.shape.determinant() * std::pow(e.radius, static_cast<double>(e.dim()));
}

CredibleEllipse ellipse_from_sandwich(const LossSpec& spec, const Dataset& data, double level,
                                      const Vector& theta_hat) {
  const SandwichEstimate sw = sandwich_cov(spec, data, theta_hat);
  CredibleEllipse e;
  e.center = theta_hat;
  e.shape = sw.gamma / static_cast<double>(data.n());
  e.radius = chi_square_quantile(level, spec.d());
  e.level = level;
  return e;
}

CredibleEllipse ellipse_from_sandwich(const LossSpec& spec, const Dataset& data, double level,
                                      const SolverConfig& solver) {
  return ellipse_from_sandwich(spec, data, level, solve(spec, data, solver).theta_hat);
}

bool contains(const CredibleEllipse& e, const Vector& point) {
  return mahalanobis_sq(e, point) <= e.radius;
}

std::string to_json(const CredibleEllipse& e) {
  nlohmann::json j;
  j["center"] = std::vector<double>(e.center.data(), e.center.data() + e.center.size());
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < e.shape.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(e.shape.cols()));
    for (Eigen::Index k = 0; k < e.shape.cols(); ++k) row[static_cast<std::size_t>(k)] = e.shape(i, k);
    rows.push_back(row);
  }
  j["shape"] = rows;
  j["radius"] = e.radius;
  j["level"] = e.level;
  return j.dump(2);
}

CredibleEllipse ellipse_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidArgument(std::string("ellipse_from_json: ") + ex.what());
  }
  try {
    const auto center = j.at("center").get<std::vector<double>>();
    const auto shape = j.at("shape").get<std::vector<std::vector<double>>>();
    CredibleEllipse e;
    const auto d = static_cast<Eigen::Index>(center.size());
    e.center = Eigen::Map<const Vector>(center.data(), d);
    if (static_cast<Eigen::Index>(shape.size()) != d) {
      throw InvalidArgument("ellipse_from_json: shape/center dimension mismatch");
    }
    e.shape.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (static_cast<Eigen::Index>(shape[static_cast<std::size_t>(i)].size()) != d) {
        throw InvalidArgument("ellipse_from_json: shape is not square");
      }
      for (Eigen::Index k = 0; k < d; ++k) {
        e.shape(i, k) = shape[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
    }
    e.radius = j.at("radius").get<double>();
    e.level = j.at("level").get<double>();
    e.validate();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidArgument(std::string("ellipse_from_json: ") + ex.what());
  }
}

}  // namespace gibbsq
