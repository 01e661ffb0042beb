#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adabias/experiment.hpp"

namespace {

adabias::ExperimentConfig load(const std::string& config_path,
                               const std::optional<long>& max_iters_override,
                               bool override_assumptions) {
  adabias::ExperimentConfig config = adabias::load_config(config_path);
  if (max_iters_override) config.hyperparams.max_iters = *max_iters_override;
  if (override_assumptions) config.override_assumptions = true;
  return config;
}

void print_outcomes(const std::vector<adabias::CheckOutcome>& outcomes) {
  for (const auto& outcome : outcomes) {
    std::cout << (outcome.holds ? "PASS" : "FAIL") << ' ' << outcome.name;
    if (outcome.onset_step) std::cout << " (onset " << *outcome.onset_step << ")";
    if (!outcome.holds) std::cout << " worst_violation=" << outcome.worst_violation;
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AdaGrad/GD implicit-bias experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<long> max_iters;
  bool override_assumptions = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config JSON")->required();
    cmd->add_option("--out", out_dir, "output directory (defaults to the config's)");
    cmd->add_option("--max-iters", max_iters, "override the iteration budget");
    cmd->add_flag("--override-assumptions", override_assumptions,
                  "run even when the assumption check fails");
  };

  auto* cmd_run = app.add_subcommand("run", "run experiments and checks");
  add_common(cmd_run);
  auto* cmd_check = app.add_subcommand("check", "run the configured checkers only");
  add_common(cmd_check);
  auto* cmd_figure = app.add_subcommand("figure-data", "emit plot-ready geometry (p = 2)");
  add_common(cmd_figure);
  auto* cmd_sweep = app.add_subcommand("sweep", "repeat the experiment along one axis");
  add_common(cmd_sweep);
  std::string axis_name;
  std::vector<double> values;
  cmd_sweep->add_option("--axis", axis_name, "eta, epsilon or w0")->required();
  cmd_sweep->add_option("--values", values, "comma-separated values")
      ->required()
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const adabias::ExperimentConfig config =
        load(config_path, max_iters, override_assumptions);
    const std::filesystem::path out(out_dir.empty() ? config.outputs : out_dir);

    if (cmd_run->parsed() || cmd_check->parsed()) {
      const adabias::ExperimentResult result = cmd_run->parsed()
                                                   ? adabias::run_experiment(config, out)
                                                   : adabias::run_checks(config, out);
      print_outcomes(result.outcomes);
      for (const auto& file : result.files_written) {
        std::cout << "wrote " << file.string() << '\n';
      }
      return result.all_checks_hold ? 0 : 1;
    }
    if (cmd_figure->parsed()) {
      for (const auto& file : adabias::figure_data(config, out)) {
        std::cout << "wrote " << file.string() << '\n';
      }
      return 0;
    }
    const auto axis = adabias::sweep_axis_from_name(axis_name);
    for (const auto& file : adabias::sweep(config, axis, values, out)) {
      std::cout << "wrote " << file.string() << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
