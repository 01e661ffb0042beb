#include "adabias/model.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adabias/maxmargin.hpp"
#include "format.hpp"

namespace adabias {

namespace {

using detail::format_double;

double parse_double(const std::string& token) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw std::invalid_argument("bad numeric field in CSV: '" + token + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

double LossModel::value(double u) const {
  switch (kind) {
    case LossKind::exponential:
      return std::exp(-u);
    case LossKind::logistic:
      // log(1 + e^{-u}) without overflow on either tail
      return u >= 0.0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u));
  }
  throw std::logic_error("unknown loss kind");
}

double LossModel::derivative(double u) const {
  switch (kind) {
    case LossKind::exponential:
      return -std::exp(-u);
    case LossKind::logistic:
      return -1.0 / (1.0 + std::exp(u));
  }
  throw std::logic_error("unknown loss kind");
}

double LossModel::second_derivative(double u) const {
  switch (kind) {
    case LossKind::exponential:
      return std::exp(-u);
    case LossKind::logistic: {
      const double s = 1.0 / (1.0 + std::exp(-u));
      return s * (1.0 - s);
    }
  }
  throw std::logic_error("unknown loss kind");
}

std::string LossModel::name() const {
  return kind == LossKind::exponential ? "exponential" : "logistic";
}

LossModel loss_model_from_name(const std::string& name) {
  if (name == "exponential") return LossModel::exponential();
  if (name == "logistic") return LossModel::logistic();
  throw std::invalid_argument("unknown loss '" + name + "'");
}

void Hyperparams::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("eta must be positive and finite");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be nonnegative and finite");
  }
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be positive");
  if (w0.size() == 0) throw std::invalid_argument("w0 must be nonempty");
  if (!w0.allFinite()) throw std::invalid_argument("w0 must be finite");
}

Dataset make_dataset(const Matrix& features, const Vector& labels) {
  if (features.rows() < 1 || features.cols() < 1) {
    throw std::invalid_argument("dataset needs at least one sample and one feature");
  }
  if (labels.size() != features.rows()) {
    throw std::invalid_argument("label count does not match sample count");
  }
  if (!features.allFinite()) throw std::invalid_argument("non-finite feature entry");
  for (Eigen::Index n = 0; n < labels.size(); ++n) {
    if (labels[n] != 1.0 && labels[n] != -1.0) {
      throw std::invalid_argument("labels must be +1 or -1");
    }
  }
  Dataset data;
  data.features_ = features;
  data.labels_ = labels;
  data.signed_ = labels.asDiagonal() * features;
  return data;
}

double loss_value(const LossModel& model, const Dataset& data, const Vector& w) {
  if (w.size() != data.dim()) throw std::invalid_argument("w has wrong dimension");
  const Vector margins = data.signed_features() * w;
  double total = 0.0;
  for (Eigen::Index n = 0; n < margins.size(); ++n) total += model.value(margins[n]);
  return total;
}

Vector loss_gradient(const LossModel& model, const Dataset& data, const Vector& w) {
  if (w.size() != data.dim()) throw std::invalid_argument("w has wrong dimension");
  const Vector margins = data.signed_features() * w;
  Vector slopes(margins.size());
  for (Eigen::Index n = 0; n < margins.size(); ++n) {
    slopes[n] = model.derivative(margins[n]);
  }
  return data.signed_features().transpose() * slopes;
}

AssumptionReport check_assumptions(const LossModel& model, const Dataset& data,
                                   const Hyperparams& hp) {
  hp.validate();
  if (hp.w0.size() != data.dim()) throw std::invalid_argument("w0 has wrong dimension");

  AssumptionReport report;

  MarginProblem problem;
  problem.constraints = data.signed_features();
  const FeasibilityResult feas = feasibility(problem);
  report.separable = feas.feasible;
  report.witness = feas.witness;

  if (model.kind == LossKind::logistic) {
    // l'' <= 1/4 globally, so beta_L = (1/4) sum ||z_n||^2 is a true bound.
    report.smoothness_beta = 0.25 * data.signed_features().squaredNorm();
    report.beta_is_heuristic = false;
  } else {
    // The exponential loss has unbounded curvature; use the local value at
    // w0 and flag it. Descent is re-verified at runtime by check_descent.
    const Vector margins = data.signed_features() * hp.w0;
    double beta = 0.0;
    for (Eigen::Index n = 0; n < margins.size(); ++n) {
      beta += model.second_derivative(margins[n]) *
              data.signed_features().row(n).squaredNorm();
    }
    report.smoothness_beta = beta;
    report.beta_is_heuristic = true;
  }

  const Vector g0 = loss_gradient(model, data, hp.w0);
  const double min_h_inv = (g0.array().square() + hp.epsilon).sqrt().minCoeff();
  report.eta_bound = 2.0 * min_h_inv / report.smoothness_beta;
  report.eta_ok = hp.eta < report.eta_bound;
  return report;
}

void dataset_to_csv(const Dataset& data, std::ostream& out) {
  for (Eigen::Index j = 0; j < data.dim(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (Eigen::Index n = 0; n < data.size(); ++n) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      out << format_double(data.features()(n, j)) << ',';
    }
    out << format_double(data.labels()[n]) << '\n';
  }
}

Dataset dataset_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty dataset CSV");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "y") {
    throw std::invalid_argument("dataset CSV header must be x1,...,xp,y");
  }
  const Eigen::Index p = static_cast<Eigen::Index>(header.size()) - 1;

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != p + 1) {
      throw std::invalid_argument("dataset CSV row has wrong field count");
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("dataset CSV has no samples");

  Matrix features(static_cast<Eigen::Index>(rows.size()), p);
  Vector labels(static_cast<Eigen::Index>(rows.size()));
  for (Eigen::Index n = 0; n < features.rows(); ++n) {
    for (Eigen::Index j = 0; j < p; ++j) features(n, j) = rows[n][j];
    labels[n] = rows[n][p];
  }
  return make_dataset(features, labels);
}

}  // namespace adabias
