// advas: train, verify, evaluate and plot.
//
// Exit status: 0 success, 1 validation failure, 2 runtime abort.

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "advas/checkpoint.hpp"
#include "advas/config.hpp"
#include "advas/experiment.hpp"
#include "advas/plot.hpp"
#include "advas/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

int cmd_train(const std::string& config_path) {
  advas::ParsedConfig parsed;
  try {
    parsed = advas::load_experiment_config(config_path);
  } catch (const advas::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kValidation;
  }
  for (const auto& notice : parsed.notices) std::cerr << "notice: " << notice << '\n';

  const auto root = advas::resolve_output_root(parsed.config);
  std::error_code ec;
  std::filesystem::create_directories(root / parsed.config.label, ec);
  if (ec) {
    std::cerr << "config error: output_dir: cannot create " << (root / parsed.config.label).string() << ": "
              << ec.message() << '\n';
    return kValidation;
  }

  int status = kOk;
  try {
    for (const auto& outcome : advas::run_experiment(parsed.config, std::cerr)) {
      if (outcome.aborted) status = kRuntime;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return status;
}

int cmd_verify(const std::vector<std::string>& suites, const std::string& csv_dir) {
  for (const auto& name : suites) {
    if (!advas::verify::is_suite(name)) {
      std::cerr << "unknown suite '" << name << "'; available:";
      for (const auto& s : advas::verify::suite_names()) std::cerr << ' ' << s;
      std::cerr << '\n';
      return kValidation;
    }
  }
  const auto& names = suites.empty() ? advas::verify::suite_names() : suites;
  std::filesystem::path dir = csv_dir;
  if (dir.empty()) {
    const char* env = std::getenv(advas::kOutputRootEnv);
    dir = std::filesystem::path(env && *env ? env : ".") / "verify";
  }

  bool all_passed = true;
  std::printf("%-13s %-6s %9s  %s\n", "suite", "result", "seconds", "detail");
  for (const auto& name : names) {
    const auto result = advas::verify::run_suite(name);
    all_passed = all_passed && result.passed;
    std::printf("%-13s %-6s %9.3f  %s\n", result.name.c_str(), result.passed ? "PASS" : "FAIL", result.seconds,
                result.summary.c_str());
    std::fflush(stdout);
    advas::verify::write_residual_csv(result, dir / (result.name + ".csv"));
  }
  std::printf("residual tables in %s\n", dir.string().c_str());
  return all_passed ? kOk : kValidation;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& dataset_key, std::size_t n,
             const std::string& images, const std::string& labels) {
  advas::Checkpoint ckpt;
  advas::DatasetSpec spec;
  try {
    ckpt = advas::load_checkpoint(checkpoint_path);
    spec = advas::DatasetSpec::parse(dataset_key);
    spec.images_path = images;
    spec.labels_path = labels;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  try {
    const auto dataset = advas::Dataset::open(spec);
    const auto report = advas::evaluate_checkpoint(ckpt, dataset, n);
    nlohmann::json out{{"checkpoint", checkpoint_path},
                       {"iteration", ckpt.iteration},
                       {"dataset", spec.key_string()},
                       {"n", n},
                       {"energy_distance", report.energy_distance},
                       {"w1", report.w1_1d ? nlohmann::json(*report.w1_1d) : nlohmann::json(nullptr)},
                       {"modes_covered", report.modes_covered ? nlohmann::json(*report.modes_covered) : nlohmann::json(nullptr)},
                       {"hq_fraction", report.high_quality_fraction ? nlohmann::json(*report.high_quality_fraction)
                                                                    : nlohmann::json(nullptr)}};
    std::cout << out.dump(2) << '\n';
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}

int cmd_plot(const std::string& spec_path) {
  try {
    const auto spec = advas::load_plot_spec(spec_path);
    advas::make_plot(spec);
    std::cerr << "wrote " << spec.output.string() << '\n';
  } catch (const advas::PlotError& e) {
    std::cerr << "plot error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AdvAs generator-regularizer laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "Run one training job per seed of an experiment config");
  train->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  std::vector<std::string> suites;
  std::string csv_dir;
  auto* verify = app.add_subcommand("verify", "Run the verification suites");
  verify->add_option("--suite", suites, "Run only this suite (repeatable)");
  verify->add_option("--csv-dir", csv_dir, "Directory for residual CSVs");

  std::string checkpoint_path, dataset_key, images, labels;
  std::size_t n = 1000;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpointed generator against a dataset");
  eval->add_option("checkpoint", checkpoint_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", dataset_key, "Dataset key: ring8, grid25, gauss1d(mu,sigma), mnist")->required();
  eval->add_option("--n", n, "Number of samples")->check(CLI::PositiveNumber);
  eval->add_option("--mnist-images", images, "IDX image file for mnist");
  eval->add_option("--mnist-labels", labels, "IDX label file for mnist");

  std::string plot_path;
  auto* plot = app.add_subcommand("plot", "Render metrics CSVs as SVG");
  plot->add_option("plotspec", plot_path, "Plot spec (JSON)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*train) return cmd_train(config_path);
    if (*verify) return cmd_verify(suites, csv_dir);
    if (*eval) return cmd_eval(checkpoint_path, dataset_key, n, images, labels);
    if (*plot) return cmd_plot(plot_path);
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
