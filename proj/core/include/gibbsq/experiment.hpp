#ifndef GIBBSQ_EXPERIMENT_HPP_
#define GIBBSQ_EXPERIMENT_HPP_

#include "gibbsq/baselines.hpp"
#include "gibbsq/calibration.hpp"
#include "gibbsq/config.hpp"
#include "gibbsq/credible.hpp"
#include "gibbsq/gibbs.hpp"
#include "gibbsq/loss.hpp"
#include "gibbsq/synthdata.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gibbsq {

enum class Method { GibbsCalibrated, GibbsFixed, PBayes, NPBayes, Sandwich, PBayesWishart };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct ExperimentConfig {
  /// "ex1", "ex2", "ex3" or "csv". For "csv" each replication resamples n rows
  /// from the file and the truth is the quantile of the file's empirical law.
  std::string example = "ex1";
  std::string csv_path;
  Vector u = Vector::Zero(2);
  double r = 2.0;
  Method method = Method::GibbsCalibrated;
  /// Learning rate for GibbsFixed.
  double omega = 1.0;
  std::size_t n = 100;
  int replications = 200;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  unsigned threads = 0;

  /// Prior variance of the isotropic Gibbs prior.
  double prior_variance = 10.0;
  /// Final Gibbs chain; omega and seed are set per run.
  GibbsConfig mcmc;
  CalibrationConfig calibration;
  ParametricBayesConfig pbayes;
  DPConfig dp;
  NIWConfig niw;
  std::size_t truth_oracle = kOracleSize;

  LossSpec loss() const { return LossSpec(u, r); }
  void validate() const;
};

/// Reads [experiment], [loss], [mcmc], [calibration], [pbayes], [dp] and [niw]
/// sections; missing keys keep their defaults.
ExperimentConfig experiment_from_config(const Config& c);

/// Posterior draws (or, for Sandwich, nothing) plus the 1 - alpha ellipse of
/// `method` on one dataset. The ellipse is skipped when with_ellipse is false.
struct MethodFit {
  CredibleEllipse ellipse;
  std::optional<PosteriorDraws> draws;
  std::optional<CalibrationState> calibration;
  double omega = 0.0;
};
MethodFit fit_method(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed,
                     unsigned inner_threads, bool with_ellipse = true);

struct ReplicationResult {
  bool ok = false;
  bool covered = false;
  double size = 0.0;
  double omega = 0.0;
  std::string error;
};

struct CoverageReport {
  std::string method;
  std::string example;
  double r = 2.0;
  Vector u;
  std::size_t n = 0;
  double coverage = 0.0;
  double mean_size = 0.0;
  /// sqrt(c (1 - c) / replications) over the successful replications.
  double mc_stderr = 0.0;
  /// Successful replications.
  int replications = 0;
  int failures = 0;
  /// False when more than 1% of replications failed.
  bool valid = true;
  double mean_omega = 0.0;
  Vector theta_star;
  std::string truth_method;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  std::vector<ReplicationResult> per_replication;
};

std::string to_json(const CoverageReport& report);

/// Replication k draws its data from derive_seed(seed, 2k) and runs the method
/// with derive_seed(seed, 2k + 1); results are reduced in index order.
CoverageReport run_coverage_experiment(const ExperimentConfig& cfg);
/// Same, reusing a precomputed truth.
CoverageReport run_coverage_experiment(const ExperimentConfig& cfg, const TruthRecord& truth);

struct ExportResult {
  std::vector<std::string> files;
  CredibleEllipse gibbs;
  CredibleEllipse sandwich;
  double omega = 0.0;
  /// lambda_max(gibbs shape * radius) / lambda_max(sandwich shape * radius).
  double eigen_ratio = 0.0;
  bool diagnostic_pass = false;
};

/// One dataset (generated from cfg.seed, or the CSV file), its Gibbs posterior
/// at a calibrated or fixed rate, and plot-ready files in cfg.output_dir:
/// data.csv, draws.csv(+.json), gibbs_ellipse.json, sandwich_ellipse.json,
/// kde_marginal_<j>.csv, kde_pair_<i>_<j>.csv, trajectory.csv (calibrated
/// only) and export_summary.json.
ExportResult run_posterior_export(const ExperimentConfig& cfg);

/// Gaussian-kernel density of draws on a grid. Marginal: columns x, density.
RowMatrix kde_marginal(const RowMatrix& draws, Eigen::Index j, int grid = 100);
/// Pairwise: columns x, y, density on a grid x grid lattice.
RowMatrix kde_pair(const RowMatrix& draws, Eigen::Index i, Eigen::Index j, int grid = 50);

struct TrainTestSeries {
  std::string method;
  std::vector<double> log_risk_diff;
  std::size_t clamped = 0;
  double median = 0.0;
  double omega = 0.0;
};

struct TrainTestResult {
  double test_min_risk = 0.0;
  Vector test_minimizer;
  double risk_floor = 0.0;
  std::vector<TrainTestSeries> series;
};

/// log{R_test(theta) - min R_test} for every posterior draw of each method fit
/// on `train`. Differences at or below the risk floor are clamped to it.
TrainTestResult run_traintest_risk(const Dataset& train, const Dataset& test,
                                   const std::vector<Method>& methods, const ExperimentConfig& cfg);
/// Long-format CSV: method, draw, log_risk_diff.
void write_traintest_csv(const std::string& path, const TrainTestResult& result);

double median_of(std::vector<double> values);

}  // namespace gibbsq

#endif  // GIBBSQ_EXPERIMENT_HPP_
