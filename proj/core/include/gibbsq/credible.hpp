#ifndef GIBBSQ_CREDIBLE_HPP_
#define GIBBSQ_CREDIBLE_HPP_

#include "gibbsq/draws.hpp"
#include "gibbsq/loss.hpp"
#include "gibbsq/quantile_solver.hpp"
#include "gibbsq/types.hpp"

#include <string>

namespace gibbsq {

/// {v : (v - center)^T shape^-1 (v - center) <= radius}, at credibility 1 - level.
struct CredibleEllipse {
  Vector center;
  Matrix shape;
  double radius = 0.0;
  double level = 0.05;

  std::size_t dim() const { return static_cast<std::size_t>(center.size()); }
  /// Throws InvalidArgument unless shape is SPD, radius > 0 and level in (0,1).
  void validate() const;
};

/// (1 - level) quantile of the chi-square distribution with `dof` degrees.
double chi_square_quantile(double level, std::size_t dof);

/// Squared Mahalanobis distance of `point` from the ellipse center.
double mahalanobis_sq(const CredibleEllipse& e, const Vector& point);

/// Posterior-draw ellipse: center = mean of the draws, shape = their
/// covariance S, radius = nearest-rank (1 - level) quantile of the
/// Mahalanobis statistic over the draws themselves.
/// Throws DegenerateDrawsError when S is singular or M < d + 2.
CredibleEllipse ellipse_from_draws(const PosteriorDraws& draws, double level);
CredibleEllipse ellipse_from_draws(const RowMatrix& draws, double level);

/// |shape| * radius^d.
double ellipse_size(const CredibleEllipse& e);

/// Confidence ellipse from asymptotic normality of the M-estimator:
/// center theta_hat, shape Gamma-hat / n, radius chi^2_{d, 1-level}.
CredibleEllipse ellipse_from_sandwich(const LossSpec& spec, const Dataset& data, double level,
                                      const SolverConfig& solver = {});
CredibleEllipse ellipse_from_sandwich(const LossSpec& spec, const Dataset& data, double level,
                                      const Vector& theta_hat);

/// Boundary inclusive.
bool contains(const CredibleEllipse& e, const Vector& point);

/// {"center": [...], "shape": [[...], ...], "radius": r, "level": a}
std::string to_json(const CredibleEllipse& e);
/// Parses and re-validates the JSON produced by to_json.
CredibleEllipse ellipse_from_json(const std::string& text);

}  // namespace gibbsq

#endif  // GIBBSQ_CREDIBLE_HPP_
