#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adabias/analysis.hpp"
#include "adabias/model.hpp"
#include "adabias/optim.hpp"

namespace adabias {

/// Seeded synthetic-data recipe: plant a unit separator, sample standard
/// normal points and reflect any point whose signed margin falls below the
/// floor, so the result is separable by construction.
struct GeneratorSpec {
  std::uint64_t seed = 0;
  int n = 0;
  int p = 0;
  double margin = 0.1;
};

struct ExperimentConfig {
  std::optional<Matrix> points;
  std::optional<Vector> labels;
  std::optional<GeneratorSpec> generator;
  LossModel loss = LossModel::exponential();
  Hyperparams hyperparams;
  std::vector<OptimizerKind> runs;
  std::string outputs = "out";
  long thinning = 100;
  std::vector<std::string> checks;
  bool override_assumptions = false;

  Dataset build_dataset() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

Dataset generate_separable(const GeneratorSpec& spec);

/// Names understood by the `checks` list.
const std::vector<std::string>& known_check_names();

struct ExperimentResult {
  DirectionReport report;
  std::vector<CheckOutcome> outcomes;
  bool all_checks_hold = true;
  std::vector<std::filesystem::path> files_written;
};

/// Runs the configured experiments, writes per-run trajectory CSVs, the
/// direction report JSON and the check outcome JSON array into out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir);

/// Same pipeline without trajectory CSVs; only the requested checks and
/// their outcome file are produced.
ExperimentResult run_checks(const ExperimentConfig& config,
                            const std::filesystem::path& out_dir);

/// Plot-ready geometry for planar (p = 2) problems: feasible-region
/// boundary polyline, the objective isoline through the weighted solution,
/// unit arrows for the data and both predicted directions, and the
/// tangency point.
std::vector<std::filesystem::path> figure_data(const ExperimentConfig& config,
                                               const std::filesystem::path& out_dir);

enum class SweepAxis { eta, epsilon, w0 };

SweepAxis sweep_axis_from_name(const std::string& name);

/// One direction report per value plus a summary CSV. For the w0 axis each
/// scalar value v stands for the initial point v * (1, ..., 1).
std::vector<std::filesystem::path> sweep(const ExperimentConfig& config, SweepAxis axis,
                                         const std::vector<double>& values,
                                         const std::filesystem::path& out_dir);

}  // namespace adabias
