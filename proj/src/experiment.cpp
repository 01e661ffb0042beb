#include "adabias/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "format.hpp"

namespace adabias {

namespace {

using detail::format_double;
using nlohmann::json;

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<size_t>(i)].get<double>();
  return v;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("expected an array of points");
  const auto cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols) throw std::invalid_argument("ragged point array");
    for (size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

struct Pipeline {
  Dataset data;
  Trajectory adagrad_traj;
  Trajectory gd_traj;
  DirectionReport report;
};

// Both engines always run: the direction report needs the pair even when
// only one trajectory CSV was requested.
Pipeline execute(const ExperimentConfig& config) {
  Pipeline pl;
  pl.data = config.build_dataset();
  pl.adagrad_traj = run(OptimizerKind::adagrad, config.loss, pl.data,
                        config.hyperparams, config.thinning,
                        config.override_assumptions);
  pl.gd_traj = run(OptimizerKind::gd, config.loss, pl.data, config.hyperparams,
                   config.thinning, config.override_assumptions);
  pl.report = compare_directions(pl.adagrad_traj, pl.gd_traj, pl.data);
  return pl;
}

std::vector<CheckOutcome> execute_checks(const ExperimentConfig& config,
                                         const Pipeline& pl) {
  std::vector<CheckOutcome> outcomes;
  auto push = [&](CheckOutcome outcome, const std::string& run_name) {
    outcome.name = run_name + "." + outcome.name;
    outcomes.push_back(std::move(outcome));
  };

  for (const std::string& name : config.checks) {
    if (name == "descent" || name == "summability" || name == "divergence_and_margins") {
      for (OptimizerKind kind : config.runs) {
        const Trajectory& traj =
            kind == OptimizerKind::adagrad ? pl.adagrad_traj : pl.gd_traj;
        if (name == "descent") push(check_descent(traj), optimizer_name(kind));
        if (name == "summability") push(check_summability(traj), optimizer_name(kind));
        if (name == "divergence_and_margins") {
          push(check_divergence_and_margins(traj, pl.data), optimizer_name(kind));
        }
      }
    } else if (name == "preconditioner_convergence") {
      push(check_preconditioner_convergence(pl.adagrad_traj,
                                            config.hyperparams.epsilon),
           "adagrad");
    } else if (name == "projection_bounds") {
      const HInfinityEstimate est =
          estimate_h_infinity(pl.adagrad_traj, config.hyperparams.epsilon);
      std::vector<InducedQuantities> steps;
      steps.reserve(pl.adagrad_traj.records.size());
      for (const auto& rec : pl.adagrad_traj.records) {
        OptimizerState state;
        state.t = rec.t;
        state.w = rec.w;
        state.g = rec.g;
        state.S = rec.S;
        steps.push_back(induced_quantities(state, est.h_inf, config.loss, pl.data,
                                           config.hyperparams));
      }
      MarginProblem induced_problem;
      induced_problem.constraints = steps.front().xi;
      const MarginSolution induced_margin = solve_hard_margin(induced_problem);
      push(check_projection_bounds(steps, induced_margin.w_star), "adagrad");
    } else {
      throw std::invalid_argument("unknown check '" + name + "'");
    }
  }
  return outcomes;
}

ExperimentResult run_pipeline(const ExperimentConfig& config,
                              const std::filesystem::path& out_dir,
                              bool write_trajectories) {
  std::filesystem::create_directories(out_dir);
  const Pipeline pl = execute(config);

  ExperimentResult result;
  result.report = pl.report;

  if (write_trajectories) {
    {
      const auto path = out_dir / "dataset.csv";
      std::ostringstream csv;
      dataset_to_csv(pl.data, csv);
      write_text(path, csv.str());
      result.files_written.push_back(path);
    }
    for (OptimizerKind kind : config.runs) {
      const Trajectory& traj =
          kind == OptimizerKind::adagrad ? pl.adagrad_traj : pl.gd_traj;
      const auto path = out_dir / (optimizer_name(kind) + "_trajectory.csv");
      std::ostringstream csv;
      trajectory_to_csv(traj, csv);
      write_text(path, csv.str());
      result.files_written.push_back(path);
    }
  }

  const auto report_path = out_dir / "direction_report.json";
  write_json(report_path, direction_report_to_json(pl.report));
  result.files_written.push_back(report_path);

  result.outcomes = execute_checks(config, pl);
  json outcome_array = json::array();
  for (const auto& outcome : result.outcomes) {
    outcome_array.push_back(check_outcome_to_json(outcome));
    result.all_checks_hold = result.all_checks_hold && outcome.holds;
  }
  const auto checks_path = out_dir / "checks.json";
  write_json(checks_path, outcome_array);
  result.files_written.push_back(checks_path);
  return result;
}

// Clips a convex polygon against the half-plane <w, c> >= 1.
std::vector<Vector> clip_halfplane(const std::vector<Vector>& polygon, const Vector& c) {
  std::vector<Vector> clipped;
  const size_t n = polygon.size();
  for (size_t i = 0; i < n; ++i) {
    const Vector& cur = polygon[i];
    const Vector& nxt = polygon[(i + 1) % n];
    const double f_cur = c.dot(cur) - 1.0;
    const double f_nxt = c.dot(nxt) - 1.0;
    if (f_cur >= 0.0) clipped.push_back(cur);
    if ((f_cur < 0.0) != (f_nxt < 0.0)) {
      const double s = f_cur / (f_cur - f_nxt);
      clipped.push_back(cur + s * (nxt - cur));
    }
  }
  return clipped;
}

}  // namespace

Dataset ExperimentConfig::build_dataset() const {
  if (generator) return generate_separable(*generator);
  return make_dataset(*points, *labels);
}

Dataset generate_separable(const GeneratorSpec& spec) {
  if (spec.n < 1 || spec.p < 1) throw std::invalid_argument("generator needs n, p >= 1");
  if (!(spec.margin > 0.0)) throw std::invalid_argument("margin floor must be positive");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);

  Vector separator(spec.p);
  for (int i = 0; i < spec.p; ++i) separator[i] = normal(rng);
  separator.normalize();

  Matrix features(spec.n, spec.p);
  Vector labels(spec.n);
  for (int n = 0; n < spec.n; ++n) {
    Vector x(spec.p);
    for (int i = 0; i < spec.p; ++i) x[i] = normal(rng);
    const double y = coin(rng) == 0 ? -1.0 : 1.0;
    const double margin = y * separator.dot(x);
    if (margin < spec.margin) {
      x += 2.0 * (spec.margin - margin) * y * separator;  // mirror across the floor
    }
    features.row(n) = x;
    labels[n] = y;
  }
  return make_dataset(features, labels);
}

const std::vector<std::string>& known_check_names() {
  static const std::vector<std::string> names = {
      "descent", "summability", "divergence_and_margins",
      "preconditioner_convergence", "projection_bounds"};
  return names;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig config;

  if (!j.contains("dataset")) throw std::invalid_argument("config needs a dataset");
  const json& ds = j.at("dataset");
  if (ds.contains("generator")) {
    const json& g = ds.at("generator");
    if (!g.contains("seed")) {
      throw std::invalid_argument("generator dataset requires a seed");
    }
    GeneratorSpec spec;
    spec.seed = g.at("seed").get<std::uint64_t>();
    spec.n = g.at("n").get<int>();
    spec.p = g.at("p").get<int>();
    spec.margin = g.value("margin", 0.1);
    config.generator = spec;
  } else {
    config.points = matrix_from_json(ds.at("points"));
    config.labels = vector_from_json(ds.at("labels"));
  }

  config.loss = loss_model_from_name(j.value("loss", "exponential"));

  const json& hp = j.at("hyperparams");
  config.hyperparams.eta = hp.at("eta").get<double>();
  config.hyperparams.epsilon = hp.value("epsilon", 1e-8);
  config.hyperparams.max_iters = hp.value("max_iters", 1000000L);
  config.hyperparams.grad_tol = hp.value("grad_tol", 1e-12);
  const Eigen::Index dim = config.generator
                               ? static_cast<Eigen::Index>(config.generator->p)
                               : config.points->cols();
  config.hyperparams.w0 =
      hp.contains("w0") ? vector_from_json(hp.at("w0")) : Vector(Vector::Zero(dim));

  if (!j.contains("runs") || !j.at("runs").is_array() || j.at("runs").empty()) {
    throw std::invalid_argument("config needs a nonempty runs list");
  }
  std::set<std::string> seen;
  for (const auto& r : j.at("runs")) {
    const std::string name = r.get<std::string>();
    if (!seen.insert(name).second) throw std::invalid_argument("duplicate run '" + name + "'");
    config.runs.push_back(optimizer_from_name(name));
  }

  config.outputs = j.value("outputs", "out");
  config.thinning = j.value("thinning", 100L);
  if (config.thinning < 1) throw std::invalid_argument("thinning must be positive");
  config.override_assumptions = j.value("override_assumptions", false);

  if (j.contains("checks")) {
    const auto& known = known_check_names();
    for (const auto& c : j.at("checks")) {
      const std::string name = c.get<std::string>();
      if (std::find(known.begin(), known.end(), name) == known.end()) {
        throw std::invalid_argument("unknown check '" + name + "'");
      }
      config.checks.push_back(name);
    }
  }

  config.hyperparams.validate();
  config.build_dataset();  // surface dataset errors at parse time
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  json j;
  in >> j;
  return parse_config(j);
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir) {
  return run_pipeline(config, out_dir, /*write_trajectories=*/true);
}

ExperimentResult run_checks(const ExperimentConfig& config,
                            const std::filesystem::path& out_dir) {
  return run_pipeline(config, out_dir, /*write_trajectories=*/false);
}

std::vector<std::filesystem::path> figure_data(const ExperimentConfig& config,
                                               const std::filesystem::path& out_dir) {
  const Dataset data = config.build_dataset();
  if (data.dim() != 2) throw std::invalid_argument("figure data requires p = 2");
  std::filesystem::create_directories(out_dir);

  const Trajectory adagrad_traj =
      run(OptimizerKind::adagrad, config.loss, data, config.hyperparams,
          config.thinning, config.override_assumptions);
  const HInfinityEstimate est =
      estimate_h_infinity(adagrad_traj, config.hyperparams.epsilon);

  MarginProblem problem;
  problem.constraints = data.signed_features();
  const MarginSolution svm = solve_hard_margin(problem);
  MarginProblem weighted = problem;
  weighted.weights = est.h_inf.cwiseSqrt().cwiseInverse();
  const MarginSolution tilted = solve_weighted_margin(weighted);

  std::vector<std::filesystem::path> files;

  // Feasible region clipped to a box comfortably containing both solutions.
  const double extent =
      8.0 * std::max({1.0, svm.w_star.norm(), tilted.w_star.norm()});
  std::vector<Vector> polygon;
  for (const auto& [x, y] : std::initializer_list<std::pair<double, double>>{
           {-extent, -extent}, {extent, -extent}, {extent, extent}, {-extent, extent}}) {
    Vector v(2);
    v << x, y;
    polygon.push_back(v);
  }
  for (Eigen::Index n = 0; n < data.size(); ++n) {
    polygon = clip_halfplane(polygon, data.signed_feature(n));
    if (polygon.empty()) break;
  }
  {
    std::ostringstream csv;
    csv << "x,y\n";
    for (const auto& v : polygon) {
      csv << format_double(v[0]) << ',' << format_double(v[1]) << '\n';
    }
    if (!polygon.empty()) {
      csv << format_double(polygon.front()[0]) << ','
          << format_double(polygon.front()[1]) << '\n';
    }
    const auto path = out_dir / "figure_boundary.csv";
    write_text(path, csv.str());
    files.push_back(path);
  }

  // Objective isoline through the weighted solution: sum_i w_i^2 / h_inf_i
  // is constant on origin-centered ellipses.
  {
    const double level = (tilted.w_star.array().square() / est.h_inf.array()).sum();
    const double semi_x = std::sqrt(level * est.h_inf[0]);
    const double semi_y = std::sqrt(level * est.h_inf[1]);
    std::ostringstream csv;
    csv << "x,y\n";
    constexpr int kSamples = 256;
    for (int k = 0; k <= kSamples; ++k) {
      const double t = 2.0 * 3.14159265358979323846 * k / kSamples;
      csv << format_double(semi_x * std::cos(t)) << ','
          << format_double(semi_y * std::sin(t)) << '\n';
    }
    const auto path = out_dir / "figure_isoline.csv";
    write_text(path, csv.str());
    files.push_back(path);
  }

  {
    std::ostringstream csv;
    csv << "name,x,y\n";
    for (Eigen::Index n = 0; n < data.size(); ++n) {
      const Vector arrow = data.features().row(n).normalized();
      csv << 'x' << (n + 1) << ',' << format_double(arrow[0]) << ','
          << format_double(arrow[1]) << '\n';
    }
    const Vector svm_dir = svm.w_star.normalized();
    const Vector tilt_dir = tilted.w_star.normalized();
    csv << "svm," << format_double(svm_dir[0]) << ',' << format_double(svm_dir[1])
        << '\n';
    csv << "adagrad," << format_double(tilt_dir[0]) << ','
        << format_double(tilt_dir[1]) << '\n';
    const auto path = out_dir / "figure_arrows.csv";
    write_text(path, csv.str());
    files.push_back(path);
  }

  {
    std::ostringstream csv;
    csv << "x,y\n"
        << format_double(tilted.w_star[0]) << ',' << format_double(tilted.w_star[1])
        << '\n';
    const auto path = out_dir / "figure_tangency.csv";
    write_text(path, csv.str());
    files.push_back(path);
  }
  return files;
}

SweepAxis sweep_axis_from_name(const std::string& name) {
  if (name == "eta") return SweepAxis::eta;
  if (name == "epsilon") return SweepAxis::epsilon;
  if (name == "w0") return SweepAxis::w0;
  throw std::invalid_argument("unknown sweep axis '" + name + "'");
}

std::vector<std::filesystem::path> sweep(const ExperimentConfig& config, SweepAxis axis,
                                         const std::vector<double>& values,
                                         const std::filesystem::path& out_dir) {
  if (values.empty()) throw std::invalid_argument("sweep needs a nonempty value list");
  std::filesystem::create_directories(out_dir);
  const Dataset data = config.build_dataset();

  MarginProblem problem;
  problem.constraints = data.signed_features();
  const MarginSolution svm = solve_hard_margin(problem);

  const std::string axis_name = axis == SweepAxis::eta      ? "eta"
                                : axis == SweepAxis::epsilon ? "epsilon"
                                                             : "w0";
  std::vector<std::filesystem::path> files;
  std::ostringstream summary;
  const Eigen::Index p = data.dim();
  summary << "value";
  for (Eigen::Index i = 0; i < p; ++i) summary << ",pred_dir_" << (i + 1);
  summary << ",angle_to_svm";
  for (Eigen::Index i = 0; i < p; ++i) summary << ",h_inf_" << (i + 1);
  summary << '\n';

  for (size_t k = 0; k < values.size(); ++k) {
    Hyperparams hp = config.hyperparams;
    switch (axis) {
      case SweepAxis::eta: hp.eta = values[k]; break;
      case SweepAxis::epsilon: hp.epsilon = values[k]; break;
      case SweepAxis::w0: hp.w0 = Vector::Constant(p, values[k]); break;
    }
    const Trajectory adagrad_traj = run(OptimizerKind::adagrad, config.loss, data, hp,
                                        config.thinning, config.override_assumptions);
    const Trajectory gd_traj = run(OptimizerKind::gd, config.loss, data, hp,
                                   config.thinning, config.override_assumptions);
    const DirectionReport report = compare_directions(adagrad_traj, gd_traj, data);

    const auto report_path =
        out_dir / ("direction_report_" + axis_name + "_" + std::to_string(k) + ".json");
    write_json(report_path, direction_report_to_json(report));
    files.push_back(report_path);

    summary << format_double(values[k]);
    for (Eigen::Index i = 0; i < p; ++i) {
      summary << ',' << format_double(report.adagrad_dir_predicted[i]);
    }
    summary << ',' << format_double(report.angle_adagrad_pred_vs_svm);
    for (Eigen::Index i = 0; i < p; ++i) {
      summary << ',' << format_double(report.h_inf[i]);
    }
    summary << '\n';
  }
  const auto summary_path = out_dir / ("sweep_" + axis_name + ".csv");
  write_text(summary_path, summary.str());
  files.push_back(summary_path);
  return files;
}

}  // namespace adabias
