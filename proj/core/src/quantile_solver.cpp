#include "gibbsq/quantile_solver.hpp"

#include "gibbsq/errors.hpp"
#include "gibbsq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gibbsq {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double sign(double v) { return (v > 0.0) - (v < 0.0); }

// One pass over the data at a fixed theta.
struct Evaluation {
  double risk = 0.0;
  // sum over rows not at theta of w_i grad l_i, minus w_at * u. Equal to the
  // risk gradient when w_at == 0.
  Vector grad;
  double w_at = 0.0;
  std::size_t nearest = 0;
  double nearest_dist = std::numeric_limits<double>::infinity();
  // Weiszfeld sums (r = 2 only).
  Vector wz_num;
  double wz_den = 0.0;
  Matrix hessian;
  bool has_hessian = false;
};

class RiskEvaluator {
 public:
  RiskEvaluator(const LossSpec& spec, const Dataset& data, const WeightVector& w)
      : spec_(spec), data_(data), w_(w), d_(data.d()), z_(d_), s_(d_), a_(d_) {}

  double risk(const Vector& theta) {
    double sum = 0.0;
    const double* x = data_.data();
    const Vector& u = spec_.u();
    for (std::size_t i = 0; i < data_.n(); ++i) {
      const double wi = w_[i];
      if (wi == 0.0) continue;
      double lin = 0.0;
      for (std::size_t j = 0; j < d_; ++j) {
        z_[j] = x[i * d_ + j] - theta[static_cast<Eigen::Index>(j)];
        lin += u[static_cast<Eigen::Index>(j)] * z_[j];
      }
      sum += wi * (spec_.norm(z_.data()) + lin);
    }
    return sum;
  }

  Evaluation evaluate(const Vector& theta, bool want_hessian) {
    const auto d = static_cast<Eigen::Index>(d_);
    Evaluation ev;
    ev.grad = Vector::Zero(d);
    ev.wz_num = Vector::Zero(d);
    if (want_hessian) ev.hessian = Matrix::Zero(d, d);
    const double r = spec_.r();
    const Vector& u = spec_.u();
    const double* x = data_.data();
    for (std::size_t i = 0; i < data_.n(); ++i) {
      const double wi = w_[i];
      if (wi == 0.0) continue;
      double zmax = 0.0;
      double zmin = std::numeric_limits<double>::infinity();
      double lin = 0.0;
      for (std::size_t j = 0; j < d_; ++j) {
        z_[j] = x[i * d_ + j] - theta[static_cast<Eigen::Index>(j)];
        lin += u[static_cast<Eigen::Index>(j)] * z_[j];
        zmax = std::max(zmax, std::abs(z_[j]));
        zmin = std::min(zmin, std::abs(z_[j]));
      }
      if (zmax < ev.nearest_dist) {
        ev.nearest_dist = zmax;
        ev.nearest = i;
      }
      if (zmax < kKinkTolerance) {
        ev.w_at += wi;
        continue;
      }
      const double nz = spec_.norm(z_.data());
      ev.risk += wi * (nz + lin);
      for (std::size_t j = 0; j < d_; ++j) {
        a_[j] = std::abs(z_[j]) / nz;
        s_[j] = (spec_.euclidean() ? a_[j] : std::pow(a_[j], r - 1.0)) * sign(z_[j]);
        ev.grad[static_cast<Eigen::Index>(j)] -= wi * s_[j];
      }
      if (spec_.euclidean()) {
        const double inv = wi / nz;
        for (std::size_t j = 0; j < d_; ++j) {
          ev.wz_num[static_cast<Eigen::Index>(j)] += inv * x[i * d_ + j];
        }
        ev.wz_den += inv;
      }
      if (want_hessian && !(r < 2.0 && zmin < kKinkTolerance)) {
        const double scale = wi * (r - 1.0) / nz;
        for (std::size_t j = 0; j < d_; ++j) {
          const double diag = spec_.euclidean() ? 1.0 : std::pow(a_[j], r - 2.0);
          ev.hessian(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += scale * diag;
          for (std::size_t k = 0; k < d_; ++k) {
            ev.hessian(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) -=
                scale * s_[j] * s_[k];
          }
        }
      }
    }
    double total_w = 0.0;
    for (std::size_t i = 0; i < data_.n(); ++i) total_w += w_[i];
    // Linear term: -w_i u for every row, including those at theta.
    ev.grad -= total_w * u;
    ev.wz_num += total_w * u;
    ev.has_hessian = want_hessian;
    return ev;
  }

 private:
  const LossSpec& spec_;
  const Dataset& data_;
  const WeightVector& w_;
  std::size_t d_;
  std::vector<double> z_, s_, a_;
};

// Steepest-descent direction for the subgradient at a data point: the dual
// map of -G, normalized so that ||h||_r = 1.
Vector dual_direction(const LossSpec& spec, const Vector& g) {
  const double qq = spec.q();
  const double gq = spec.dual_norm(g);
  Vector h(g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    h[j] = -sign(g[j]) * std::pow(std::abs(g[j]) / gq, qq - 1.0);
  }
  return h;
}

Vector weighted_coordinate_median(const Dataset& data, const WeightVector& w) {
  const std::size_t n = data.n();
  Vector out(static_cast<Eigen::Index>(data.d()));
  std::vector<std::size_t> idx(n);
  for (std::size_t j = 0; j < data.d(); ++j) {
    std::iota(idx.begin(), idx.end(), 0);
    const auto col = static_cast<Eigen::Index>(j);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return data.rows()(static_cast<Eigen::Index>(a), col) <
             data.rows()(static_cast<Eigen::Index>(b), col);
    });
    double cum = 0.0;
    double value = data.rows()(static_cast<Eigen::Index>(idx.back()), col);
    for (std::size_t k : idx) {
      cum += w[k];
      if (cum >= 0.5) {
        value = data.rows()(static_cast<Eigen::Index>(k), col);
        break;
      }
    }
    out[col] = value;
  }
  return out;
}

Vector weighted_mean(const Dataset& data, const WeightVector& w) {
  return data.rows().transpose() * w.values();
}

double certificate_residual(const LossSpec& spec, const Evaluation& ev) {
  if (ev.w_at <= 0.0) return std::numeric_limits<double>::infinity();
  return spec.dual_norm(ev.grad) - ev.w_at;
}

// Certificate tolerance: rounding in the gradient sum is O(n eps).
double certificate_slack(const Dataset& data) {
  return 64.0 * kEps * static_cast<double>(data.n());
}

}  // namespace

void SolverConfig::validate(std::size_t d) const {
  if (!(grad_tol > 0.0)) throw InvalidArgument("SolverConfig: grad_tol must be positive");
  if (max_iters < 1) throw InvalidArgument("SolverConfig: max_iters must be >= 1");
  if (!(step_shrink > 0.0 && step_shrink < 1.0)) {
    throw InvalidArgument("SolverConfig: step_shrink must be in (0, 1)");
  }
  if (init == SolverInit::UserSupplied &&
      (static_cast<std::size_t>(initial.size()) != d || !initial.allFinite())) {
    throw InvalidArgument("SolverConfig: user-supplied initial point has wrong dimension");
  }
}

double data_point_certificate(const LossSpec& spec, const Dataset& data, const WeightVector& w,
                              const Vector& point) {
  RiskEvaluator evaluator(spec, data, w);
  return certificate_residual(spec, evaluator.evaluate(point, false));
}

QuantileEstimate solve(const LossSpec& spec, const Dataset& data, const SolverConfig& cfg,
                       const WeightVector& w) {
  if (data.d() != spec.d()) throw InvalidArgument("solve: dataset/loss dimension mismatch");
  if (w.size() != data.n()) throw InvalidArgument("solve: weight/data size mismatch");
  cfg.validate(spec.d());

  QuantileEstimate est;

  // Degenerate support: every positively weighted row is the same point.
  {
    std::size_t first = data.n();
    bool all_same = true;
    for (std::size_t i = 0; i < data.n() && all_same; ++i) {
      if (w[i] == 0.0) continue;
      if (first == data.n()) {
        first = i;
      } else if ((data.row(i) - data.row(first)).cwiseAbs().maxCoeff() >= kKinkTolerance) {
        all_same = false;
      }
    }
    if (all_same && first < data.n()) {
      est.theta_hat = data.row(first);
      est.risk_value = empirical_risk(spec, data, est.theta_hat, w);
      est.converged = true;
      est.at_data_point = true;
      if (cfg.record_history) est.risk_history.push_back(est.risk_value);
      return est;
    }
  }

  Vector theta;
  switch (cfg.init) {
    case SolverInit::CoordinateMedian: theta = weighted_coordinate_median(data, w); break;
    case SolverInit::Mean: theta = weighted_mean(data, w); break;
    case SolverInit::UserSupplied: theta = cfg.initial; break;
  }

  RiskEvaluator evaluator(spec, data, w);
  const double slack = certificate_slack(data);
  const bool want_hessian = true;
  Rng perturb_rng = make_rng(0x5eed5eedULL);
  std::size_t last_snapped = data.n();
  double step_hint = 1.0;

  Evaluation ev = evaluator.evaluate(theta, want_hessian);
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    if (cfg.record_history) est.risk_history.push_back(ev.risk);

    if (ev.w_at > 0.0) {
      const double resid = certificate_residual(spec, ev);
      if (resid <= slack) {
        est.converged = true;
        est.at_data_point = true;
        est.grad_norm = std::max(0.0, resid);
        break;
      }
      // Not optimal here: leave along the steepest direction of the subdifferential.
      const Vector h = dual_direction(spec, ev.grad);
      double t = std::max(step_hint, 1e-6);
      bool moved = false;
      for (int k = 0; k < 80; ++k, t *= cfg.step_shrink) {
        const Vector cand = theta + t * h;
        const double rc = evaluator.risk(cand);
        if (rc < ev.risk) {
          theta = cand;
          moved = true;
          break;
        }
      }
      if (!moved) {
        Vector dir(theta.size());
        std::normal_distribution<double> nd;
        for (Eigen::Index j = 0; j < dir.size(); ++j) dir[j] = nd(perturb_rng);
        theta += 1e-9 * dir / dir.norm();
      }
      ev = evaluator.evaluate(theta, want_hessian);
      continue;
    }

    const double gnorm = ev.grad.norm();
    if (gnorm <= cfg.grad_tol) {
      est.converged = true;
      // A few full Newton steps push the gradient well below tolerance so
      // that equivariance holds to the same order as grad_tol.
      for (int k = 0; k < 3; ++k) {
        Matrix hp = ev.hessian;
        Eigen::LLT<Matrix> pl(hp);
        if (pl.info() != Eigen::Success) break;
        const Vector cand = theta - pl.solve(ev.grad);
        Evaluation cev = evaluator.evaluate(cand, want_hessian);
        if (!cand.allFinite() || cev.w_at > 0.0 || !(cev.grad.norm() < ev.grad.norm())) break;
        theta = cand;
        ev = std::move(cev);
      }
      break;
    }

    // The minimizer may be an observation; iterates then approach it without
    // ever reaching it. Snap and test the certificate once per candidate.
    const double near_tol = 1e-7 * (1.0 + data.row(ev.nearest).cwiseAbs().maxCoeff());
    if (ev.nearest_dist < near_tol && ev.nearest != last_snapped) {
      last_snapped = ev.nearest;
      const Vector snap = data.row(ev.nearest);
      Evaluation sev = evaluator.evaluate(snap, want_hessian);
      if (certificate_residual(spec, sev) <= slack && sev.risk <= ev.risk + 4.0 * kEps * std::abs(ev.risk)) {
        theta = snap;
        ev = std::move(sev);
        continue;
      }
    }

    Vector next;
    bool accepted = false;

    // Damped Newton on the plug-in Hessian.
    Matrix h = ev.hessian;
    const double ridge = 1e-12 * std::max(h.trace() / static_cast<double>(h.rows()), 1e-300);
    h.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() == Eigen::Success) {
      const Vector p = -llt.solve(ev.grad);
      const double slope = ev.grad.dot(p);
      if (p.allFinite() && slope < 0.0) {
        const double resolvable = 8.0 * kEps * std::max(1.0, std::abs(ev.risk));
        if (-slope <= resolvable) {
          // Predicted decrease is below rounding of R_n: accept the full step
          // on gradient-norm decrease instead.
          const Vector cand = theta + p;
          Evaluation cev = evaluator.evaluate(cand, want_hessian);
          if (cev.w_at == 0.0 && cev.grad.norm() < gnorm && cev.risk <= ev.risk + resolvable) {
            theta = cand;
            ev = std::move(cev);
            continue;
          }
        } else {
          double t = 1.0;
          for (int k = 0; k < 60; ++k, t *= cfg.step_shrink) {
            const Vector cand = theta + t * p;
            const double rc = evaluator.risk(cand);
            if (rc <= ev.risk + 1e-4 * t * slope) {
              next = cand;
              accepted = true;
              break;
            }
          }
        }
      }
    }

    if (!accepted && spec.euclidean() && ev.wz_den > 0.0) {
      const Vector cand = ev.wz_num / ev.wz_den;
      const double rc = evaluator.risk(cand);
      if (rc < ev.risk) {
        next = cand;
        accepted = true;
      }
    }

    if (!accepted) {
      const Vector p = -ev.grad;
      double t = step_hint / std::max(gnorm, 1e-300);
      for (int k = 0; k < 80; ++k, t *= cfg.step_shrink) {
        const Vector cand = theta + t * p;
        const double rc = evaluator.risk(cand);
        if (rc <= ev.risk - 1e-4 * t * gnorm * gnorm) {
          next = cand;
          accepted = true;
          step_hint = std::min(1.0, 2.0 * t * gnorm);
          break;
        }
      }
    }

    if (!accepted) break;  // no resolvable descent left
    theta = std::move(next);
    ev = evaluator.evaluate(theta, want_hessian);
  }

  est.theta_hat = theta;
  est.iterations = it;
  est.risk_value = evaluator.risk(theta);
  if (!est.at_data_point) {
    est.grad_norm = ev.w_at > 0.0 ? std::max(0.0, certificate_residual(spec, ev)) : ev.grad.norm();
    est.converged = est.converged || est.grad_norm <= cfg.grad_tol;
  }
  return est;
}

QuantileEstimate solve(const LossSpec& spec, const Dataset& data, const SolverConfig& cfg) {
  return solve(spec, data, cfg, WeightVector::uniform(data.n()));
}

QuantileEstimate solve_weighted_atoms(const LossSpec& spec, const Dataset& atoms,
                                      const WeightVector& w, const SolverConfig& cfg) {
  return solve(spec, atoms, cfg, w);
}

}  // namespace gibbsq
