#include "gibbsq/experiment.hpp"

#include "gibbsq/errors.hpp"
#include "gibbsq/io.hpp"
#include "gibbsq/linalg.hpp"
#include "gibbsq/parallel.hpp"
#include "gibbsq/quantile_solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>

namespace gibbsq {
namespace {

constexpr std::uint64_t kTruthStream = 0x7472757468ULL;

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Dataset bootstrap_rows(const Dataset& full, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, full.n() - 1);
  RowMatrix rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(full.d()));
  for (std::size_t i = 0; i < n; ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = full.rows().row(static_cast<Eigen::Index>(pick(rng)));
  }
  return Dataset(std::move(rows));
}

double sorted_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double max_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::GibbsCalibrated: return "gibbs-calibrated";
    case Method::GibbsFixed: return "gibbs-fixed";
    case Method::PBayes: return "pbayes";
    case Method::NPBayes: return "npbayes";
    case Method::Sandwich: return "sandwich";
    case Method::PBayesWishart: return "pbayes-wishart";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::GibbsCalibrated, Method::GibbsFixed, Method::PBayes, Method::NPBayes,
                   Method::Sandwich, Method::PBayesWishart}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown method '" + name +
                        "' (expected gibbs-calibrated, gibbs-fixed, pbayes, npbayes, sandwich or "
                        "pbayes-wishart)");
}

void ExperimentConfig::validate() const {
  if (example != "ex1" && example != "ex2" && example != "ex3" && example != "csv") {
    throw InvalidArgument("experiment: example must be ex1, ex2, ex3 or csv");
  }
  if (example == "csv" && csv_path.empty()) throw InvalidArgument("experiment: csv example needs a path");
  const LossSpec spec = loss();
  if (example != "csv" && spec.d() != 2) {
    throw InvalidArgument("experiment: the built-in examples are bivariate; loss.u must have 2 entries");
  }
  if (!(omega > 0.0) || !std::isfinite(omega)) throw InvalidArgument("experiment: omega must be positive");
  if (n < 1) throw InvalidArgument("experiment: n must be >= 1");
  if (replications < 1) throw InvalidArgument("experiment: replications must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("experiment: alpha outside (0,1)");
  if (!(prior_variance > 0.0)) throw InvalidArgument("experiment: prior variance must be positive");
  mcmc.validate();
  calibration.validate();
  pbayes.validate(spec.d());
  dp.validate(spec.d());
  niw.validate(spec.d());
}

ExperimentConfig experiment_from_config(const Config& c) {
  ExperimentConfig e;
  e.example = c.get_string("experiment.example", e.example);
  e.csv_path = c.get_string("experiment.csv", e.csv_path);
  e.method = method_from_string(c.get_string("experiment.method", to_string(e.method)));
  e.omega = c.get_double("experiment.omega", e.omega);
  const long long n = c.get_int("experiment.n", static_cast<long long>(e.n));
  if (n < 1) throw InvalidArgument("experiment.n must be >= 1");
  e.n = static_cast<std::size_t>(n);
  e.replications = static_cast<int>(c.get_int("experiment.replications", e.replications));
  e.alpha = c.get_double("experiment.alpha", e.alpha);
  e.seed = static_cast<std::uint64_t>(c.get_int("experiment.seed", static_cast<long long>(e.seed)));
  e.output_dir = c.get_string("experiment.output_dir", e.output_dir);
  const long long threads = c.get_int("experiment.threads", 0);
  if (threads < 0) throw InvalidArgument("experiment.threads must be >= 0");
  e.threads = static_cast<unsigned>(threads);
  const long long oracle = c.get_int("experiment.truth_oracle", static_cast<long long>(e.truth_oracle));
  if (oracle < 1) throw InvalidArgument("experiment.truth_oracle must be positive");
  e.truth_oracle = static_cast<std::size_t>(oracle);

  e.r = c.get_double("loss.r", e.r);
  e.u = c.get_vector("loss.u", e.u);
  e.prior_variance = c.get_double("prior.variance", e.prior_variance);

  e.mcmc.n_draws = static_cast<int>(c.get_int("mcmc.n_draws", e.mcmc.n_draws));
  e.mcmc.burn_in = static_cast<int>(c.get_int("mcmc.burn_in", e.mcmc.burn_in));
  e.mcmc.thin = static_cast<int>(c.get_int("mcmc.thin", e.mcmc.thin));
  e.mcmc.proposal_scale = c.get_double("mcmc.proposal_scale", e.mcmc.proposal_scale);
  e.mcmc.adapt_proposal = c.get_bool("mcmc.adapt", e.mcmc.adapt_proposal);

  auto& cal = e.calibration;
  cal.B = static_cast<int>(c.get_int("calibration.B", cal.B));
  cal.epsilon = c.get_double("calibration.epsilon", cal.epsilon);
  cal.omega0 = c.get_double("calibration.omega0", cal.omega0);
  cal.max_steps = static_cast<int>(c.get_int("calibration.max_steps", cal.max_steps));
  cal.kappa_exponent = c.get_double("calibration.kappa_exponent", cal.kappa_exponent);
  cal.mcmc.n_draws = static_cast<int>(c.get_int("calibration.n_draws", cal.mcmc.n_draws));
  cal.mcmc.burn_in = static_cast<int>(c.get_int("calibration.burn_in", cal.mcmc.burn_in));
  cal.mcmc.proposal_scale = c.get_double("calibration.proposal_scale", e.mcmc.proposal_scale);
  cal.mcmc.adapt_proposal = c.get_bool("calibration.adapt", e.mcmc.adapt_proposal);

  auto& pb = e.pbayes;
  pb.gamma_shape = c.get_double("pbayes.gamma_shape", pb.gamma_shape);
  pb.gamma_rate = c.get_double("pbayes.gamma_rate", pb.gamma_rate);
  pb.n_draws = static_cast<int>(c.get_int("pbayes.n_draws", pb.n_draws));
  pb.burn_in = static_cast<int>(c.get_int("pbayes.burn_in", pb.burn_in));
  if (c.has("pbayes.prior_variance")) {
    const double v = c.get_double("pbayes.prior_variance", 10.0);
    pb.prior_cov = v * Matrix::Identity(static_cast<Eigen::Index>(e.u.size()),
                                        static_cast<Eigen::Index>(e.u.size()));
  }

  e.dp.base_mass = c.get_double("dp.base_mass", e.dp.base_mass);
  e.dp.prior_atoms = static_cast<int>(c.get_int("dp.prior_atoms", e.dp.prior_atoms));
  e.dp.n_posterior_draws = static_cast<int>(c.get_int("dp.n_draws", e.dp.n_posterior_draws));

  e.niw.kappa0 = c.get_double("niw.kappa0", e.niw.kappa0);
  e.niw.dof = c.get_double("niw.dof", e.niw.dof);
  e.niw.n_draws = static_cast<int>(c.get_int("niw.n_draws", e.niw.n_draws));
  return e;
}

MethodFit fit_method(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed,
                     unsigned inner_threads, bool with_ellipse) {
  const LossSpec spec = cfg.loss();
  if (data.d() != spec.d()) throw InvalidArgument("fit_method: data and loss dimensions differ");
  const PriorSpec prior = PriorSpec::isotropic(spec.d(), cfg.prior_variance);
  MethodFit fit;
  auto run_gibbs = [&](double omega) {
    GibbsConfig g = cfg.mcmc;
    g.omega = omega;
    g.seed = derive_seed(seed, 1);
    fit.omega = omega;
    fit.draws = sample(spec, data, prior, g);
  };
  switch (cfg.method) {
    case Method::GibbsCalibrated: {
      CalibrationConfig cal = cfg.calibration;
      cal.alpha = cfg.alpha;
      cal.seed = derive_seed(seed, 0);
      cal.threads = inner_threads;
      fit.calibration = calibrate(spec, data, prior, cal);
      run_gibbs(fit.calibration->final_omega);
      break;
    }
    case Method::GibbsFixed:
      run_gibbs(cfg.omega);
      break;
    case Method::PBayes: {
      ParametricBayesConfig pb = cfg.pbayes;
      pb.seed = derive_seed(seed, 1);
      fit.draws = parametric_bayes_sample(data, pb);
      break;
    }
    case Method::NPBayes: {
      DPConfig dp = cfg.dp;
      dp.seed = derive_seed(seed, 1);
      dp.threads = inner_threads;
      fit.draws = dp_posterior_sample(spec, data, dp);
      break;
    }
    case Method::PBayesWishart: {
      NIWConfig niw = cfg.niw;
      niw.seed = derive_seed(seed, 1);
      fit.draws = parametric_bayes_wishart_sample(data, niw);
      break;
    }
    case Method::Sandwich:
      fit.ellipse = ellipse_from_sandwich(spec, data, cfg.alpha, SolverConfig{});
      return fit;
  }
  if (with_ellipse) fit.ellipse = ellipse_from_draws(*fit.draws, cfg.alpha);
  return fit;
}

std::string to_json(const CoverageReport& rep) {
  nlohmann::json j;
  j["method"] = rep.method;
  j["example"] = rep.example;
  j["r"] = rep.r;
  j["u"] = to_std(rep.u);
  j["n"] = rep.n;
  j["coverage"] = rep.coverage;
  j["mean_size"] = rep.mean_size;
  j["mc_stderr"] = rep.mc_stderr;
  j["replications"] = rep.replications;
  j["failures"] = rep.failures;
  j["valid"] = rep.valid;
  j["mean_omega"] = rep.mean_omega;
  j["theta_star"] = to_std(rep.theta_star);
  j["truth_method"] = rep.truth_method;
  j["seed"] = rep.seed;
  j["wall_time"] = rep.wall_time;
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t k = 0; k < rep.per_replication.size(); ++k) {
    const auto& r = rep.per_replication[k];
    nlohmann::json item{{"index", k}, {"ok", r.ok}};
    if (r.ok) {
      item["covered"] = r.covered;
      item["size"] = r.size;
      item["omega"] = r.omega;
    } else {
      item["error"] = r.error;
    }
    per.push_back(item);
  }
  j["per_replication"] = per;
  return j.dump(2);
}

CoverageReport run_coverage_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const LossSpec spec = cfg.loss();
  if (cfg.example == "csv") {
    const Dataset full = ingest_csv(cfg.csv_path);
    TruthRecord truth;
    truth.theta_star = solve(spec, full).theta_hat;
    truth.method = TruthMethod::Analytic;
    truth.n_oracle = full.n();
    return run_coverage_experiment(cfg, truth);
  }
  const GeneratorSpec gen = example_by_name(cfg.example, derive_seed(cfg.seed, kTruthStream));
  return run_coverage_experiment(cfg, true_quantile(gen, spec, cfg.truth_oracle));
}

CoverageReport run_coverage_experiment(const ExperimentConfig& cfg, const TruthRecord& truth) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  std::optional<Dataset> full;
  if (cfg.example == "csv") full.emplace(ingest_csv(cfg.csv_path));

  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<ReplicationResult> results(reps);
  const unsigned outer = cfg.threads == 0 ? default_threads() : cfg.threads;
  parallel_for(reps, outer, [&](std::size_t k) {
    const std::uint64_t data_seed = derive_seed(cfg.seed, 2 * k);
    const std::uint64_t method_seed = derive_seed(cfg.seed, 2 * k + 1);
    ReplicationResult& res = results[k];
    try {
      const Dataset data = full ? bootstrap_rows(*full, cfg.n, data_seed)
                                : sample(example_by_name(cfg.example, data_seed), cfg.n);
      const MethodFit fit = fit_method(cfg, data, method_seed, 1);
      res.covered = contains(fit.ellipse, truth.theta_star);
      res.size = ellipse_size(fit.ellipse);
      res.omega = fit.omega;
      res.ok = true;
    } catch (const NumericalError& ex) {
      res.error = ex.what();
    } catch (const SingularityError& ex) {
      res.error = ex.what();
    }
  });

  CoverageReport rep;
  rep.method = to_string(cfg.method);
  rep.example = cfg.example == "csv" ? "csv:" + cfg.csv_path : cfg.example;
  rep.r = cfg.r;
  rep.u = cfg.u;
  rep.n = cfg.n;
  rep.theta_star = truth.theta_star;
  rep.truth_method = cfg.example == "csv" ? "empirical" : to_string(truth.method);
  rep.seed = cfg.seed;
  std::vector<double> sizes;
  std::vector<double> omegas;
  int covered = 0;
  for (const auto& r : results) {
    if (!r.ok) {
      ++rep.failures;
      continue;
    }
    ++rep.replications;
    covered += r.covered ? 1 : 0;
    sizes.push_back(r.size);
    omegas.push_back(r.omega);
  }
  if (rep.replications > 0) {
    rep.coverage = static_cast<double>(covered) / rep.replications;
    rep.mc_stderr = std::sqrt(rep.coverage * (1.0 - rep.coverage) / rep.replications);
  }
  rep.mean_size = sorted_mean(sizes);
  rep.mean_omega = sorted_mean(omegas);
  rep.valid = rep.replications > 0 && rep.failures <= 0.01 * cfg.replications;
  rep.per_replication = std::move(results);
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

RowMatrix kde_marginal(const RowMatrix& draws, Eigen::Index j, int grid) {
  if (draws.rows() < 2 || j < 0 || j >= draws.cols() || grid < 2) {
    throw InvalidArgument("kde_marginal: bad arguments");
  }
  const Vector x = draws.col(j);
  const double m = static_cast<double>(x.size());
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / (m - 1.0));
  const double h = std::max(sd, 1e-300) * std::pow(m, -0.2);
  const double lo = x.minCoeff() - 3.0 * h;
  const double hi = x.maxCoeff() + 3.0 * h;
  const double norm = 1.0 / (m * h * std::sqrt(2.0 * M_PI));
  RowMatrix out(grid, 2);
  for (int g = 0; g < grid; ++g) {
    const double at = lo + (hi - lo) * g / (grid - 1);
    out(g, 0) = at;
    out(g, 1) = norm * ((x.array() - at) / h).square().unaryExpr([](double s) { return std::exp(-0.5 * s); }).sum();
  }
  return out;
}

RowMatrix kde_pair(const RowMatrix& draws, Eigen::Index i, Eigen::Index j, int grid) {
  if (draws.rows() < 2 || i < 0 || j < 0 || i >= draws.cols() || j >= draws.cols() || i == j ||
      grid < 2) {
    throw InvalidArgument("kde_pair: bad arguments");
  }
  const Vector x = draws.col(i);
  const Vector y = draws.col(j);
  const double m = static_cast<double>(x.size());
  auto sd = [m](const Vector& v) {
    return std::sqrt((v.array() - v.mean()).square().sum() / (m - 1.0));
  };
  const double scott = std::pow(m, -1.0 / 6.0);
  const double hx = std::max(sd(x), 1e-300) * scott;
  const double hy = std::max(sd(y), 1e-300) * scott;
  const double xlo = x.minCoeff() - 3.0 * hx, xhi = x.maxCoeff() + 3.0 * hx;
  const double ylo = y.minCoeff() - 3.0 * hy, yhi = y.maxCoeff() + 3.0 * hy;
  const double norm = 1.0 / (m * hx * hy * 2.0 * M_PI);
  RowMatrix out(static_cast<Eigen::Index>(grid) * grid, 3);
  Eigen::Index row = 0;
  for (int a = 0; a < grid; ++a) {
    const double gx = xlo + (xhi - xlo) * a / (grid - 1);
    const Eigen::ArrayXd kx = (-0.5 * ((x.array() - gx) / hx).square()).exp();
    for (int b = 0; b < grid; ++b) {
      const double gy = ylo + (yhi - ylo) * b / (grid - 1);
      const Eigen::ArrayXd ky = (-0.5 * ((y.array() - gy) / hy).square()).exp();
      out(row, 0) = gx;
      out(row, 1) = gy;
      out(row, 2) = norm * (kx * ky).sum();
      ++row;
    }
  }
  return out;
}

ExportResult run_posterior_export(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.method == Method::Sandwich) {
    throw InvalidArgument("export: method must produce posterior draws (not sandwich)");
  }
  const LossSpec spec = cfg.loss();
  const Dataset data = cfg.example == "csv" ? ingest_csv(cfg.csv_path)
                                            : sample(example_by_name(cfg.example, derive_seed(cfg.seed, 0)), cfg.n);
  if (data.d() != spec.d()) throw InvalidArgument("export: data and loss dimensions differ");
  const MethodFit fit = fit_method(cfg, data, derive_seed(cfg.seed, 1), cfg.threads);

  ExportResult out;
  out.gibbs = fit.ellipse;
  out.sandwich = ellipse_from_sandwich(spec, data, cfg.alpha, SolverConfig{});
  out.omega = fit.omega;
  out.eigen_ratio = max_eigenvalue(out.gibbs.shape * out.gibbs.radius) /
                    max_eigenvalue(out.sandwich.shape * out.sandwich.radius);
  out.diagnostic_pass = out.eigen_ratio >= 0.8;

  ensure_directory(cfg.output_dir);
  auto emit = [&](const std::string& name) {
    const std::string p = join_path(cfg.output_dir, name);
    out.files.push_back(p);
    return p;
  };
  write_dataset_csv(emit("data.csv"), data);
  write_draws(emit("draws.csv"), *fit.draws);
  write_text(emit("gibbs_ellipse.json"), to_json(out.gibbs));
  write_text(emit("sandwich_ellipse.json"), to_json(out.sandwich));
  const RowMatrix& draws = fit.draws->draws;
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    write_matrix_csv(emit("kde_marginal_" + std::to_string(j) + ".csv"), kde_marginal(draws, j),
                     {"x", "density"});
  }
  for (Eigen::Index i = 0; i < draws.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < draws.cols(); ++j) {
      write_matrix_csv(emit("kde_pair_" + std::to_string(i) + "_" + std::to_string(j) + ".csv"),
                       kde_pair(draws, i, j), {"x", "y", "density"});
    }
  }
  if (fit.calibration) write_trajectory_csv(emit("trajectory.csv"), *fit.calibration);

  nlohmann::json summary;
  summary["method"] = to_string(cfg.method);
  summary["example"] = cfg.example;
  summary["loss"] = spec.describe();
  summary["n"] = data.n();
  summary["seed"] = cfg.seed;
  summary["omega"] = out.omega;
  summary["acceptance_rate"] = fit.draws->acceptance_rate;
  summary["gibbs_size"] = ellipse_size(out.gibbs);
  summary["sandwich_size"] = ellipse_size(out.sandwich);
  summary["eigen_ratio"] = out.eigen_ratio;
  summary["wider_direction_check"] = out.diagnostic_pass;
  summary["warnings"] = fit.draws->warnings;
  write_text(emit("export_summary.json"), summary.dump(2));
  return out;
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median_of: empty input");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

TrainTestResult run_traintest_risk(const Dataset& train, const Dataset& test,
                                   const std::vector<Method>& methods, const ExperimentConfig& cfg) {
  if (train.d() != test.d()) throw InvalidArgument("traintest: train and test dimensions differ");
  if (methods.empty()) throw InvalidArgument("traintest: no methods given");
  const LossSpec spec = cfg.loss();
  if (spec.d() != train.d()) throw InvalidArgument("traintest: data and loss dimensions differ");

  TrainTestResult out;
  const QuantileEstimate best = solve(spec, test);
  out.test_min_risk = best.risk_value;
  out.test_minimizer = best.theta_hat;
  out.risk_floor = 1e-12 * std::max(1.0, std::abs(best.risk_value));

  for (std::size_t k = 0; k < methods.size(); ++k) {
    if (methods[k] == Method::Sandwich) {
      throw InvalidArgument("traintest: sandwich has no posterior draws");
    }
    ExperimentConfig mc = cfg;
    mc.method = methods[k];
    const MethodFit fit = fit_method(mc, train, derive_seed(cfg.seed, k), cfg.threads, false);
    TrainTestSeries s;
    s.method = to_string(methods[k]);
    s.omega = fit.omega;
    const RowMatrix& draws = fit.draws->draws;
    s.log_risk_diff.reserve(static_cast<std::size_t>(draws.rows()));
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
      const Vector theta = draws.row(i).transpose();
      double diff = empirical_risk(spec, test, theta) - out.test_min_risk;
      if (!(diff > out.risk_floor)) {
        diff = out.risk_floor;
        ++s.clamped;
      }
      s.log_risk_diff.push_back(std::log(diff));
    }
    s.median = median_of(s.log_risk_diff);
    out.series.push_back(std::move(s));
  }
  return out;
}

void write_traintest_csv(const std::string& path, const TrainTestResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "method,draw,log_risk_diff\n";
  for (const auto& s : result.series) {
    for (std::size_t i = 0; i < s.log_risk_diff.size(); ++i) {
      os << s.method << ',' << i << ',' << s.log_risk_diff[i] << '\n';
    }
  }
  write_text(path, os.str());
}

}  // namespace gibbsq
