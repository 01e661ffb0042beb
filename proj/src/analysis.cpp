#include "adabias/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace adabias {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.begin(), v.end());
}

Vector unit(const Vector& v) {
  const double norm = v.norm();
  if (norm == 0.0) throw std::invalid_argument("cannot normalize the zero vector");
  return v / norm;
}

// Earliest record index from which violations[k] <= 0 holds through the
// end; -1 when even the last entry violates.
int onset_index(const std::vector<double>& violations) {
  int onset = -1;
  for (int k = static_cast<int>(violations.size()) - 1; k >= 0; --k) {
    if (violations[static_cast<size_t>(k)] > 0.0) break;
    onset = k;
  }
  return onset;
}

}  // namespace

double angle(const Vector& u, const Vector& v) {
  if (u.norm() == 0.0 || v.norm() == 0.0) {
    throw std::invalid_argument("angle undefined for zero vectors");
  }
  // atan2 of the chord lengths stays accurate near 0 and pi, where the
  // arccosine of the clamped dot product loses half the digits.
  const Vector a = unit(u);
  const Vector b = unit(v);
  return 2.0 * std::atan2((a - b).norm(), (a + b).norm());
}

ProjectionSplit projection_split(const Vector& v, const Vector& u_hat) {
  if (std::abs(u_hat.norm() - 1.0) > 1e-10) {
    throw std::invalid_argument("reference direction must be unit norm");
  }
  ProjectionSplit split;
  split.reference = u_hat;
  split.p_component = v.dot(u_hat) * u_hat;
  split.q_component = v - split.p_component;
  split.p_norm = split.p_component.norm();
  split.q_norm = split.q_component.norm();
  return split;
}

CheckOutcome check_descent(const Trajectory& traj) {
  CheckOutcome outcome;
  outcome.name = "descent";
  long violations = 0;
  double worst = 0.0;
  for (size_t k = 0; k + 1 < traj.records.size(); ++k) {
    const double diff = traj.records[k + 1].loss - traj.records[k].loss;
    if (diff >= 0.0) {
      ++violations;
      worst = std::max(worst, diff);
    }
  }
  outcome.holds = violations == 0;
  if (outcome.holds) outcome.onset_step = 0;
  outcome.worst_violation = worst;
  outcome.details = {{"pairs", traj.records.size() - 1}, {"violations", violations}};
  return outcome;
}

CheckOutcome check_summability(const Trajectory& traj) {
  CheckOutcome outcome;
  outcome.name = "summability";
  const long T = traj.terminal_state.t;
  const double total = traj.terminal_state.S.sum();
  double ratio = 0.0;
  if (T >= 2 && total > 0.0) {
    const double at_half = traj.nearest(T / 2).S.sum();
    ratio = (total - at_half) / total;
  }
  outcome.holds = ratio < 0.1;
  if (outcome.holds) outcome.onset_step = 0;
  outcome.worst_violation = std::max(0.0, ratio - 0.1);
  outcome.details = {{"grad_sq_total", total}, {"last_half_ratio", ratio}, {"T", T}};
  return outcome;
}

CheckOutcome check_divergence_and_margins(const Trajectory& traj, const Dataset& data) {
  CheckOutcome outcome;
  outcome.name = "divergence_and_margins";
  const long T = traj.terminal_state.t;
  const TrajectoryRecord& last = traj.back();
  const TrajectoryRecord& half = traj.nearest(T / 2);

  const bool comparisons_binding = T >= 2;
  const double norm_gap = half.w.norm() - last.w.norm();   // want < 0
  const double loss_gap = last.loss - half.loss;           // want < 0
  const double grad_gap = last.g.norm() - half.g.norm();   // want < 0
  const bool norm_grows = !comparisons_binding || norm_gap < 0.0;
  const bool loss_falls = !comparisons_binding || loss_gap < 0.0;
  const bool grad_falls = !comparisons_binding || grad_gap < 0.0;

  std::vector<double> margin_violations;
  margin_violations.reserve(traj.records.size());
  for (const auto& rec : traj.records) {
    const double min_margin = (data.signed_features() * rec.w).minCoeff();
    margin_violations.push_back(-min_margin);  // <= ... < 0 means all positive
  }
  // strict positivity: flip zero margins into violations
  for (auto& v : margin_violations) {
    if (v == 0.0) v = std::numeric_limits<double>::min();
  }
  const int onset = onset_index(margin_violations);

  outcome.holds = norm_grows && loss_falls && grad_falls && onset >= 0;
  if (outcome.holds) outcome.onset_step = traj.records[static_cast<size_t>(onset)].t;
  double worst = 0.0;
  if (comparisons_binding) {
    worst = std::max({worst, norm_gap, loss_gap, grad_gap});
  }
  worst = std::max(worst, margin_violations.back());
  outcome.worst_violation = std::max(0.0, worst);
  outcome.details = {{"norm_T", last.w.norm()},
                     {"norm_half", half.w.norm()},
                     {"loss_T", last.loss},
                     {"loss_half", half.loss},
                     {"grad_T", last.g.norm()},
                     {"grad_half", half.g.norm()},
                     {"margin_onset_index", onset},
                     {"min_margin_T", -margin_violations.back()}};
  return outcome;
}

CheckOutcome check_preconditioner_convergence(const Trajectory& traj, double epsilon) {
  CheckOutcome outcome;
  outcome.name = "preconditioner_convergence";
  const long T = traj.terminal_state.t;

  auto h_of = [&](const TrajectoryRecord& rec) -> Vector {
    return (rec.S.array() + epsilon).rsqrt();
  };

  double worst_increase = 0.0;
  Vector prev = h_of(traj.records.front());
  for (size_t k = 1; k < traj.records.size(); ++k) {
    const Vector cur = h_of(traj.records[k]);
    worst_increase = std::max(worst_increase, (cur - prev).maxCoeff());
    prev = cur;
  }
  const Vector h_final = h_of(traj.back());
  const bool positive = (h_final.array() > 0.0).all();

  const bool tail_binding = T >= 2;
  const Vector h_half = h_of(traj.nearest(T / 2));
  const double tail_drift =
      ((h_half - h_final).array() / h_final.array()).maxCoeff();

  outcome.holds = worst_increase <= 0.0 && positive &&
                  (!tail_binding || tail_drift < 0.05);
  if (outcome.holds) outcome.onset_step = 0;
  outcome.worst_violation = std::max(
      {0.0, worst_increase, tail_binding ? tail_drift - 0.05 : 0.0});
  outcome.details = {{"tail_drift", tail_drift},
                     {"tail_binding", tail_binding},
                     {"h_min_final", h_final.minCoeff()}};
  return outcome;
}

CheckOutcome check_projection_bounds(const std::vector<InducedQuantities>& steps,
                                     const Vector& u_hat) {
  if (steps.empty()) throw std::invalid_argument("no induced quantities supplied");
  const double u_scale = u_hat.norm();
  if (u_scale == 0.0) throw std::invalid_argument("reference solution is zero");
  const Vector u_unit = u_hat / u_scale;

  // The source inequalities are stated for a geometry rescaled so that the
  // margin solution has unit norm; on raw data that scaling reappears as
  // the factor ||u_hat|| next to max_n ||xi_n||.
  const double xi_max = steps.front().xi.rowwise().norm().maxCoeff() * u_scale;

  std::vector<double> v_delta_proj, v_d_ratio, v_d_proj, v_v_proj;
  v_delta_proj.reserve(steps.size());
  v_d_ratio.reserve(steps.size());
  v_d_proj.reserve(steps.size());
  v_v_proj.reserve(steps.size());
  // Slack of 1e-12 on each inequality's own scale; some configurations sit
  // exactly on the equality case, where bare sign tests flip per ulp.
  constexpr double kSlack = 1e-12;
  for (const auto& iq : steps) {
    const double delta_norm = iq.delta.norm();
    const double d_norm = iq.d.norm();
    const double v_norm = iq.v.norm();
    v_delta_proj.push_back(delta_norm / xi_max - iq.delta.dot(u_unit) -
                           kSlack * delta_norm);
    v_d_ratio.push_back(
        std::max(0.5 * delta_norm - d_norm, d_norm - 1.5 * delta_norm) -
        kSlack * delta_norm);
    v_d_proj.push_back(d_norm / (4.0 * xi_max) - iq.d.dot(u_unit) - kSlack * d_norm);
    v_v_proj.push_back(v_norm / (8.0 * xi_max) - std::abs(iq.v.dot(u_unit)) -
                       kSlack * v_norm);
  }

  const int onset_delta = onset_index(v_delta_proj);
  const int onset_ratio = onset_index(v_d_ratio);
  const int onset_d = onset_index(v_d_proj);
  const int onset_v = onset_index(v_v_proj);

  CheckOutcome outcome;
  outcome.name = "projection_bounds";
  outcome.holds =
      onset_delta >= 0 && onset_ratio >= 0 && onset_d >= 0 && onset_v >= 0;
  const int overall = std::max({onset_delta, onset_ratio, onset_d, onset_v});
  if (outcome.holds) outcome.onset_step = overall;
  double worst = 0.0;
  for (size_t k = 0; k < steps.size(); ++k) {
    worst = std::max({worst, v_delta_proj[k], v_d_ratio[k], v_d_proj[k], v_v_proj[k]});
  }
  outcome.worst_violation = worst;
  outcome.details = {{"onset_delta_projection", onset_delta},
                     {"onset_d_delta_ratio", onset_ratio},
                     {"onset_d_projection", onset_d},
                     {"onset_v_projection", onset_v},
                     {"xi_max", xi_max}};
  return outcome;
}

DirectionReport compare_directions(const Trajectory& adagrad_traj,
                                   const Trajectory& gd_traj, const Dataset& data) {
  if (adagrad_traj.kind != OptimizerKind::adagrad ||
      gd_traj.kind != OptimizerKind::gd) {
    throw std::invalid_argument("compare_directions expects (adagrad, gd) trajectories");
  }
  const HInfinityEstimate est =
      estimate_h_infinity(adagrad_traj, adagrad_traj.hp.epsilon);

  MarginProblem unweighted;
  unweighted.constraints = data.signed_features();
  const MarginSolution svm = solve_hard_margin(unweighted);

  MarginProblem weighted = unweighted;
  weighted.weights = est.h_inf.cwiseSqrt().cwiseInverse();
  const MarginSolution tilted = solve_weighted_margin(weighted);

  DirectionReport report;
  report.adagrad_dir_empirical = unit(adagrad_traj.terminal_state.w);
  report.adagrad_dir_predicted = unit(tilted.w_star);
  report.gd_dir_empirical = unit(gd_traj.terminal_state.w);
  report.svm_dir = unit(svm.w_star);
  report.angle_adagrad_emp_vs_pred =
      angle(report.adagrad_dir_empirical, report.adagrad_dir_predicted);
  report.angle_adagrad_emp_vs_svm = angle(report.adagrad_dir_empirical, report.svm_dir);
  report.angle_adagrad_pred_vs_svm = angle(report.adagrad_dir_predicted, report.svm_dir);
  report.angle_gd_emp_vs_svm = angle(report.gd_dir_empirical, report.svm_dir);
  report.angle_gd_emp_vs_adagrad_emp =
      angle(report.gd_dir_empirical, report.adagrad_dir_empirical);
  report.angle_gd_emp_vs_adagrad_pred =
      angle(report.gd_dir_empirical, report.adagrad_dir_predicted);
  report.h_inf = est.h_inf;
  report.h_inf_tail_error = est.tail_error;
  return report;
}

DirectionReport compare_directions(const Dataset& data, const LossModel& model,
                                   const Hyperparams& hp, long thinning) {
  const Trajectory adagrad_traj = run(OptimizerKind::adagrad, model, data, hp, thinning);
  const Trajectory gd_traj = run(OptimizerKind::gd, model, data, hp, thinning);
  return compare_directions(adagrad_traj, gd_traj, data);
}

TwoPointClosedForm example31_oracle(double theta, bool reflected) {
  TwoPointClosedForm result;
  result.gd_dir = Vector(2);
  result.adagrad_dir = Vector(2);
  result.h_inf_dir = Vector(2);
  if (!reflected) {
    if (!(theta > 0.0 && theta < kPi / 2.0)) {
      throw std::invalid_argument("theta must lie in (0, pi/2)");
    }
    result.gd_dir << std::cos(theta), std::sin(theta);
    result.adagrad_dir << std::sqrt(0.5), std::sqrt(0.5);
    result.h_inf_dir << 1.0 / std::cos(theta), 1.0 / std::sin(theta);
  } else {
    if (!(theta > kPi / 2.0 && theta < kPi)) {
      throw std::invalid_argument("reflected theta must lie in (pi/2, pi)");
    }
    result.gd_dir << std::cos(theta), std::sin(theta);
    result.adagrad_dir << -std::sqrt(0.5), std::sqrt(0.5);
    result.h_inf_dir << -1.0 / std::cos(theta), 1.0 / std::sin(theta);
  }
  result.h_inf_dir.normalize();
  return result;
}

std::pair<double, double> example32_oracle(double r1, double r2, double theta1,
                                           double theta2) {
  if (!(r1 > 0.0 && r2 > 0.0)) throw std::invalid_argument("radii must be positive");
  if (!(theta1 >= kPi / 2.0 && theta1 < kPi)) {
    throw std::invalid_argument("theta1 must lie in [pi/2, pi)");
  }
  if (!(theta2 > theta1 - kPi && theta2 <= 0.0)) {
    throw std::invalid_argument("theta2 must lie in (theta1 - pi, 0]");
  }
  const double s = std::sin(theta1 - theta2);
  if (s == 0.0) throw std::invalid_argument("constraint directions are parallel");
  const double alpha = (std::sin(theta1) / r2 - std::sin(theta2) / r1) / s;
  const double beta = (std::cos(theta2) / r1 - std::cos(theta1) / r2) / s;
  return {alpha, beta};
}

namespace {

// Searches for an ordered choice of p samples matching the sign pattern
// (slot i positive in coordinate i, negative elsewhere) that satisfies the
// corner conditions; fills the partial condition flags as it goes.
bool sign_pattern_route(const Matrix& z, CornerCertificate& cert) {
  const Eigen::Index n_rows = z.rows();
  const Eigen::Index p = z.cols();

  std::vector<std::vector<int>> candidates(static_cast<size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index n = 0; n < n_rows; ++n) {
      bool matches = z(n, i) > 0.0;
      for (Eigen::Index j = 0; j < p && matches; ++j) {
        if (j != i && z(n, j) >= 0.0) matches = false;
      }
      if (matches) candidates[static_cast<size_t>(i)].push_back(static_cast<int>(n));
    }
    if (candidates[static_cast<size_t>(i)].empty()) return false;
  }
  cert.cond_sign_pattern = true;

  std::vector<int> chosen(static_cast<size_t>(p), -1);
  std::vector<bool> used(static_cast<size_t>(n_rows), false);

  auto try_assignment = [&]() -> bool {
    Matrix basis(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      basis.row(i) = z.row(chosen[static_cast<size_t>(i)]);
    }
    Eigen::FullPivLU<Matrix> lu(basis);
    if (!lu.isInvertible()) return false;
    cert.cond_nonsingular = true;

    const Vector corner = lu.solve(Vector::Ones(p));
    if ((corner.array() <= 0.0).any()) return false;
    cert.cond_positive_corner = true;

    Eigen::FullPivLU<Matrix> lu_t(basis.transpose());
    for (Eigen::Index n = 0; n < n_rows; ++n) {
      if (used[static_cast<size_t>(n)]) continue;
      const Vector coeffs = lu_t.solve(z.row(n).transpose());
      if ((basis.transpose() * coeffs - z.row(n).transpose()).norm() >
          1e-9 * (1.0 + z.row(n).norm())) {
        return false;  // not in the span of the basis samples
      }
      if ((coeffs.array() <= 0.0).any() || coeffs.sum() < 1.0 - 1e-12) return false;
    }
    cert.cond_cone_combinations = true;
    return true;
  };

  auto search = [&](auto&& self, Eigen::Index slot) -> bool {
    if (slot == p) return try_assignment();
    for (int n : candidates[static_cast<size_t>(slot)]) {
      if (used[static_cast<size_t>(n)]) continue;
      used[static_cast<size_t>(n)] = true;
      chosen[static_cast<size_t>(slot)] = n;
      if (self(self, slot + 1)) return true;
      used[static_cast<size_t>(n)] = false;
    }
    return false;
  };
  return search(search, 0);
}

}  // namespace

std::pair<bool, CornerCertificate> corner_condition(const Dataset& data) {
  const Matrix& z = data.signed_features();

  MarginProblem problem;
  problem.constraints = z;
  const MarginSolution base = solve_hard_margin(problem);

  CornerCertificate cert;
  cert.anchor = base.w_star;
  cert.sign_route_applicable = data.size() >= data.dim();
  if (cert.sign_route_applicable) {
    cert.sign_conditions_hold = sign_pattern_route(z, cert);
  }

  cert.probe_seed = 0x5eedULL;
  cert.probes_total = 16;
  std::mt19937_64 rng(cert.probe_seed);
  std::uniform_real_distribution<double> exponent(-2.0, 2.0);

  bool all_agree = true;
  for (int probe = 0; probe < cert.probes_total; ++probe) {
    Vector weights(data.dim());
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      weights[i] = std::pow(10.0, exponent(rng));
    }
    MarginProblem weighted = problem;
    weighted.weights = weights;
    const MarginSolution probed = solve_weighted_margin(weighted);
    const double deviation =
        (probed.w_star - base.w_star).norm() / (1.0 + base.w_star.norm());
    const double probe_angle = angle(probed.w_star, base.w_star);
    cert.max_probe_angle = std::max(cert.max_probe_angle, probe_angle);
    if (deviation <= 1e-8) {
      ++cert.probes_agreeing;
    } else {
      all_agree = false;
    }
  }
  return {all_agree, cert};
}

nlohmann::json check_outcome_to_json(const CheckOutcome& outcome) {
  nlohmann::json j;
  j["name"] = outcome.name;
  j["holds"] = outcome.holds;
  if (outcome.onset_step) {
    j["onset_step"] = *outcome.onset_step;
  } else {
    j["onset_step"] = nullptr;
  }
  j["worst_violation"] = outcome.worst_violation;
  j["details"] = outcome.details;
  return j;
}

nlohmann::json direction_report_to_json(const DirectionReport& report) {
  nlohmann::json j;
  j["adagrad_dir_empirical"] = to_std(report.adagrad_dir_empirical);
  j["adagrad_dir_predicted"] = to_std(report.adagrad_dir_predicted);
  j["gd_dir_empirical"] = to_std(report.gd_dir_empirical);
  j["svm_dir"] = to_std(report.svm_dir);
  j["angles"] = {{"adagrad_emp_vs_pred", report.angle_adagrad_emp_vs_pred},
                 {"adagrad_emp_vs_svm", report.angle_adagrad_emp_vs_svm},
                 {"adagrad_pred_vs_svm", report.angle_adagrad_pred_vs_svm},
                 {"gd_emp_vs_svm", report.angle_gd_emp_vs_svm},
                 {"gd_emp_vs_adagrad_emp", report.angle_gd_emp_vs_adagrad_emp},
                 {"gd_emp_vs_adagrad_pred", report.angle_gd_emp_vs_adagrad_pred}};
  j["h_inf"] = to_std(report.h_inf);
  j["h_inf_tail_error"] = report.h_inf_tail_error;
  return j;
}

}  // namespace adabias
