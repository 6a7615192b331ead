#include "gibbsq/baselines.hpp"
#include "gibbsq/calibration.hpp"
#include "gibbsq/config.hpp"
#include "gibbsq/credible.hpp"
#include "gibbsq/errors.hpp"
#include "gibbsq/experiment.hpp"
#include "gibbsq/gibbs.hpp"
#include "gibbsq/io.hpp"
#include "gibbsq/quantile_solver.hpp"
#include "gibbsq/synthdata.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace gibbsq;

enum ExitCode { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string data_path;
  std::string out;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, Common& c, bool seed_required) {
  cmd->add_option("--config", c.config_path, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "Override a config key: section.key=value (repeatable)");
  auto* seed = cmd->add_option("--seed", c.seed, "Master RNG seed");
  if (seed_required) seed->required();
  cmd->add_option("--out", c.out, "Output file or directory");
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

ExperimentConfig load(const Common& c) {
  Config cfg = c.config_path.empty() ? Config{} : Config::from_file(c.config_path);
  for (const auto& o : c.overrides) cfg.apply_override(o);
  ExperimentConfig e = experiment_from_config(cfg);
  if (c.seed) e.seed = *c.seed;
  if (c.threads) e.threads = c.threads;
  if (!c.out.empty()) e.output_dir = c.out;
  return e;
}

Dataset input_data(const Common& c, const ExperimentConfig& e) {
  if (!c.data_path.empty()) return ingest_csv(c.data_path);
  if (e.example == "csv") return ingest_csv(e.csv_path);
  if (!c.seed) throw InvalidArgument("no --data given; generating an example dataset requires --seed");
  return sample(example_by_name(e.example, derive_seed(e.seed, 0)), e.n);
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_std(m.row(i).transpose()));
  return rows;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text << '\n';
  } else {
    write_text(out, text + '\n');
  }
}

std::string child(const std::string& dir, const std::string& name) {
  ensure_directory(dir);
  return (std::filesystem::path(dir) / name).string();
}

int cmd_estimate(const Common& c) {
  const ExperimentConfig e = load(c);
  const LossSpec spec = e.loss();
  const Dataset data = input_data(c, e);
  const QuantileEstimate est = solve(spec, data);
  nlohmann::json j;
  j["loss"] = spec.describe();
  j["n"] = data.n();
  j["theta_hat"] = to_std(est.theta_hat);
  j["risk"] = est.risk_value;
  j["grad_norm"] = est.grad_norm;
  j["iterations"] = est.iterations;
  j["converged"] = est.converged;
  j["at_data_point"] = est.at_data_point;
  try {
    const SandwichEstimate sw = sandwich_cov(spec, data, est.theta_hat);
    j["V"] = matrix_json(sw.V);
    j["J"] = matrix_json(sw.J);
    j["gamma"] = matrix_json(sw.gamma);
  } catch (const NumericalError& ex) {
    j["sandwich_error"] = ex.what();
  }
  emit(c.out, j.dump(2));
  return est.converged ? kOk : kNumerical;
}

int cmd_sample(const Common& c) {
  ExperimentConfig e = load(c);
  const Dataset data = input_data(c, e);
  if (e.method == Method::Sandwich) throw InvalidArgument("sample: sandwich has no posterior draws");
  const MethodFit fit = fit_method(e, data, derive_seed(e.seed, 1), e.threads);
  write_draws(child(e.output_dir, "draws.csv"), *fit.draws);
  write_text(child(e.output_dir, "ellipse.json"), to_json(fit.ellipse));
  if (fit.calibration) write_trajectory_csv(child(e.output_dir, "trajectory.csv"), *fit.calibration);
  std::cout << "wrote " << fit.draws->size() << " draws (" << fit.draws->method << ", acceptance "
            << fit.draws->acceptance_rate << ") to " << e.output_dir << '\n';
  for (const auto& w : fit.draws->warnings) std::cerr << "warning: " << w << '\n';
  return kOk;
}

int cmd_calibrate(const Common& c) {
  ExperimentConfig e = load(c);
  const Dataset data = input_data(c, e);
  const LossSpec spec = e.loss();
  CalibrationConfig cal = e.calibration;
  cal.alpha = e.alpha;
  cal.seed = e.seed;
  cal.threads = e.threads;
  const CalibrationState state = calibrate(spec, data, PriorSpec::isotropic(spec.d(), e.prior_variance), cal);
  write_trajectory_csv(child(e.output_dir, "trajectory.csv"), state);
  nlohmann::json j;
  j["final_omega"] = state.final_omega;
  j["converged"] = state.converged;
  j["steps_used"] = state.steps_used;
  j["failed_inner"] = state.failed_inner;
  j["final_coverage"] = state.trajectory.back().c_hat;
  write_text(child(e.output_dir, "calibration.json"), j.dump(2));
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_coverage(const Common& c) {
  const ExperimentConfig e = load(c);
  const CoverageReport rep = run_coverage_experiment(e);
  write_text(child(e.output_dir, "coverage_report.json"), to_json(rep));
  std::cout << rep.method << " " << rep.example << " r=" << rep.r << ": coverage " << rep.coverage
            << " (mc se " << rep.mc_stderr << "), mean size " << rep.mean_size << ", "
            << rep.replications << " replications, " << rep.failures << " failures"
            << (rep.valid ? "" : " [INVALID: more than 1% failed]") << '\n';
  return rep.valid ? kOk : kNumerical;
}

int cmd_export(const Common& c) {
  ExperimentConfig e = load(c);
  if (!c.data_path.empty()) {
    e.example = "csv";
    e.csv_path = c.data_path;
  }
  const ExportResult res = run_posterior_export(e);
  for (const auto& f : res.files) std::cout << f << '\n';
  if (!res.diagnostic_pass) {
    std::cerr << "note: Gibbs ellipse is narrower than the sandwich ellipse in every direction (ratio "
              << res.eigen_ratio << ")\n";
  }
  return kOk;
}

int cmd_traintest(const Common& c, const std::string& train_path, const std::string& test_path,
                  const std::vector<std::string>& method_names, std::size_t split) {
  const ExperimentConfig e = load(c);
  std::optional<Dataset> train;
  std::optional<Dataset> test;
  if (!train_path.empty()) {
    train.emplace(ingest_csv(train_path));
    if (test_path.empty()) throw InvalidArgument("traintest: --train needs --test");
    test.emplace(ingest_csv(test_path));
  } else {
    const Dataset all = input_data(c, e);
    if (split == 0 || split >= all.n()) throw InvalidArgument("traintest: --split must be in [1, n)");
    train.emplace(all.slice(0, split));
    test.emplace(all.slice(split, all.n() - split));
  }
  std::vector<Method> methods;
  for (const auto& m : method_names) methods.push_back(method_from_string(m));
  const TrainTestResult res = run_traintest_risk(*train, *test, methods, e);
  write_traintest_csv(child(e.output_dir, "traintest_risk.csv"), res);
  nlohmann::json j;
  j["test_min_risk"] = res.test_min_risk;
  j["risk_floor"] = res.risk_floor;
  for (const auto& s : res.series) {
    j["methods"][s.method] = {{"median_log_risk_diff", s.median},
                              {"draws", s.log_risk_diff.size()},
                              {"clamped", s.clamped},
                              {"omega", s.omega}};
  }
  write_text(child(e.output_dir, "traintest_summary.json"), j.dump(2));
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_generate(const Common& c) {
  const ExperimentConfig e = load(c);
  if (e.example == "csv") throw InvalidArgument("generate: choose ex1, ex2 or ex3");
  const Dataset data = sample(example_by_name(e.example, derive_seed(e.seed, 0)), e.n);
  if (c.out.empty()) {
    std::cout.precision(17);
    for (std::size_t i = 0; i < data.n(); ++i) {
      for (std::size_t j = 0; j < data.d(); ++j) std::cout << (j ? "," : "") << data.rows()(i, j);
      std::cout << '\n';
    }
  } else {
    write_dataset_csv(c.out, data);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gibbs posterior inference for multivariate geometric quantiles"};
  app.require_subcommand(1);

  Common common;
  auto* estimate = app.add_subcommand("estimate", "Sample quantile and sandwich covariance");
  add_common(estimate, common, false);
  estimate->add_option("--data", common.data_path, "Input CSV");

  auto* sample_cmd = app.add_subcommand("sample", "Posterior draws and credible ellipse");
  add_common(sample_cmd, common, true);
  sample_cmd->add_option("--data", common.data_path, "Input CSV");

  auto* calibrate_cmd = app.add_subcommand("calibrate", "Learning-rate calibration");
  add_common(calibrate_cmd, common, true);
  calibrate_cmd->add_option("--data", common.data_path, "Input CSV");

  auto* coverage = app.add_subcommand("coverage", "Replicated coverage study");
  add_common(coverage, common, true);

  auto* export_cmd = app.add_subcommand("export", "Plot-ready posterior files");
  add_common(export_cmd, common, true);
  export_cmd->add_option("--data", common.data_path, "Input CSV");

  std::string train_path, test_path;
  std::vector<std::string> methods{"gibbs-calibrated", "pbayes-wishart"};
  std::size_t split = 100;
  auto* traintest = app.add_subcommand("traintest", "Test-set log risk difference per posterior draw");
  add_common(traintest, common, true);
  traintest->add_option("--data", common.data_path, "CSV to split into train/test");
  traintest->add_option("--train", train_path, "Training CSV");
  traintest->add_option("--test", test_path, "Test CSV");
  traintest->add_option("--split", split, "Rows used for training when splitting --data");
  traintest->add_option("--methods", methods, "Methods to compare");

  auto* generate = app.add_subcommand("generate", "Write a synthetic example dataset as CSV");
  add_common(generate, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*estimate) return cmd_estimate(common);
    if (*sample_cmd) return cmd_sample(common);
    if (*calibrate_cmd) return cmd_calibrate(common);
    if (*coverage) return cmd_coverage(common);
    if (*export_cmd) return cmd_export(common);
    if (*traintest) return cmd_traintest(common, train_path, test_path, methods, split);
    if (*generate) return cmd_generate(common);
  } catch (const InvalidArgument& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const IoError& ex) {
    std::cerr << "I/O error: " << ex.what() << '\n';
    return kIo;
  } catch (const NumericalError& ex) {
    std::cerr << "numerical failure: " << ex.what() << '\n';
    return kNumerical;
  } catch (const SingularityError& ex) {
    std::cerr << "numerical failure: " << ex.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
