#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>

namespace adabias {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Binary classification sample set. Labels are folded into the signed
/// features z_n = y_n * x_n once at construction; everything downstream
/// works with the constraints <w, z_n> >= 1.
class Dataset {
 public:
  Dataset() = default;

  const Matrix& features() const { return features_; }
  const Vector& labels() const { return labels_; }

  /// Signed features as rows of an N x p matrix.
  const Matrix& signed_features() const { return signed_; }

  Eigen::Index size() const { return features_.rows(); }
  Eigen::Index dim() const { return features_.cols(); }

  Vector signed_feature(Eigen::Index n) const { return signed_.row(n); }

 private:
  friend Dataset make_dataset(const Matrix&, const Vector&);

  Matrix features_;
  Vector labels_;
  Matrix signed_;
};

/// Builds a Dataset after validating shapes, finiteness and label values.
/// Throws std::invalid_argument on any violation.
Dataset make_dataset(const Matrix& features, const Vector& labels);

enum class LossKind { exponential, logistic };

/// Scalar loss with an exponential tail: l' satisfies
/// |l'(u) + tail_c * exp(-tail_a * u)| <= exp(-(tail_a + tail_b) * u)
/// for u > tail_d.
struct LossModel {
  LossKind kind = LossKind::exponential;
  double tail_a = 1.0;
  double tail_b = 1.0;
  double tail_c = 1.0;
  double tail_d = 0.0;

  static LossModel exponential() { return {LossKind::exponential, 1.0, 1.0, 1.0, 0.0}; }
  static LossModel logistic() { return {LossKind::logistic, 1.0, 1.0, 1.0, 1.0}; }

  double value(double u) const;
  double derivative(double u) const;
  double second_derivative(double u) const;

  std::string name() const;
};

LossModel loss_model_from_name(const std::string& name);

struct Hyperparams {
  double eta = 0.05;
  double epsilon = 1e-8;
  Vector w0;
  long max_iters = 1000000;
  double grad_tol = 1e-12;

  void validate() const;  // throws std::invalid_argument
};

/// Result of checking the separability and step-size assumptions for a
/// concrete (model, data, hyperparams) combination.
struct AssumptionReport {
  bool separable = false;
  std::optional<Vector> witness;  // strict-margin vector when separable
  double smoothness_beta = 0.0;
  double eta_bound = 0.0;
  bool eta_ok = false;
  bool beta_is_heuristic = false;

  bool all_ok() const { return separable && eta_ok; }
};

/// Total loss L(w) = sum_n l(<w, z_n>).
double loss_value(const LossModel& model, const Dataset& data, const Vector& w);

/// Gradient of the total loss, sum_n l'(<w, z_n>) z_n.
Vector loss_gradient(const LossModel& model, const Dataset& data, const Vector& w);

/// Decides separability (via the hard-margin solver), estimates the
/// smoothness constant of L and evaluates the step-size bound
/// eta < 2 min_i sqrt(g_i(0)^2 + eps) / beta.
AssumptionReport check_assumptions(const LossModel& model, const Dataset& data,
                                   const Hyperparams& hp);

/// CSV round-trip with header x1,...,xp,y. Floats use shortest
/// round-trip decimals, so write/read/write is byte-stable.
void dataset_to_csv(const Dataset& data, std::ostream& out);
Dataset dataset_from_csv(std::istream& in);

}  // namespace adabias
