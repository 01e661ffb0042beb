#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adabias/maxmargin.hpp"
#include "adabias/model.hpp"
#include "adabias/optim.hpp"

namespace adabias {

/// Empirical limit directions of both engines next to the directions the
/// two margin problems predict, with all pairwise angles in radians.
struct DirectionReport {
  Vector adagrad_dir_empirical;
  Vector adagrad_dir_predicted;  // weighted-margin direction under estimated h_inf
  Vector gd_dir_empirical;
  Vector svm_dir;                // unweighted hard-margin direction
  double angle_adagrad_emp_vs_pred = 0.0;
  double angle_adagrad_emp_vs_svm = 0.0;
  double angle_adagrad_pred_vs_svm = 0.0;
  double angle_gd_emp_vs_svm = 0.0;
  double angle_gd_emp_vs_adagrad_emp = 0.0;
  double angle_gd_emp_vs_adagrad_pred = 0.0;
  Vector h_inf;
  double h_inf_tail_error = 0.0;
};

/// Orthogonal split of v against a unit reference direction.
struct ProjectionSplit {
  Vector reference;
  Vector p_component;
  Vector q_component;
  double p_norm = 0.0;
  double q_norm = 0.0;
};

/// Result of one trajectory-level property check. onset_step is the first
/// recorded step from which the property holds through the end; holds is
/// true exactly when such an onset exists.
struct CheckOutcome {
  std::string name;
  bool holds = false;
  std::optional<long> onset_step;
  double worst_violation = 0.0;
  nlohmann::json details;
};

/// Angle between two nonzero vectors, in [0, pi].
double angle(const Vector& u, const Vector& v);

ProjectionSplit projection_split(const Vector& v, const Vector& u_hat);

/// Strict loss descent across all recorded consecutive pairs.
CheckOutcome check_descent(const Trajectory& traj);

/// Summability proxy: the last half of the run contributes < 10% of the
/// accumulated squared gradient mass.
CheckOutcome check_summability(const Trajectory& traj);

/// Iterate divergence, loss/gradient decay between T/2 and T, and an onset
/// after which every margin <w(t), z_n> stays positive.
CheckOutcome check_divergence_and_margins(const Trajectory& traj, const Dataset& data);

/// Componentwise monotone decrease of h with a positive terminal value and
/// bounded tail drift.
CheckOutcome check_preconditioner_convergence(const Trajectory& traj, double epsilon);

/// The four projection inequalities of the induced form, each required to
/// hold from some finite onset onward (P projects onto u_hat, the margin
/// solution over the xi-constraints, passed unnormalized):
///   delta' P >= ||delta|| / (max_n ||xi_n|| ||u_hat||)
///   ||delta||/2 <= ||d|| <= 3||delta||/2
///   d' P >= ||d|| / (4 max_n ||xi_n|| ||u_hat||)
///   ||Pv|| >= ||v|| / (8 max_n ||xi_n|| ||u_hat||)
CheckOutcome check_projection_bounds(const std::vector<InducedQuantities>& steps,
                                     const Vector& u_hat);

/// Runs AdaGrad and GD, estimates h_inf, solves both margin problems and
/// assembles the report.
DirectionReport compare_directions(const Dataset& data, const LossModel& model,
                                   const Hyperparams& hp, long thinning = 100);

/// Same report built from trajectories the caller already has.
DirectionReport compare_directions(const Trajectory& adagrad_traj,
                                   const Trajectory& gd_traj, const Dataset& data);

struct TwoPointClosedForm {
  Vector gd_dir;
  Vector adagrad_dir;
  Vector h_inf_dir;
};

/// Closed forms for the antipodal two-sample configuration at angle theta:
/// GD follows the sample direction, AdaGrad settles on the diagonal and
/// h_inf is proportional to (1/cos theta, 1/sin theta). With `reflected`
/// set, theta lies in (pi/2, pi) and the diagonal flips to (-1, 1)/sqrt(2).
TwoPointClosedForm example31_oracle(double theta, bool reflected = false);

/// Closed-form corner of the two-constraint wedge: the unique solution of
/// <w, x_i> = 1 for x_1 = r1 (cos t1, sin t1), x_2 = r2 (cos t2, sin t2)
/// with pi/2 <= t1 < pi and t1 - pi < t2 <= 0. Both coordinates positive.
std::pair<double, double> example32_oracle(double r1, double r2, double theta1,
                                           double theta2);

struct CornerCertificate {
  bool sign_route_applicable = false;  // needs N >= p
  bool sign_conditions_hold = false;
  bool cond_sign_pattern = false;
  bool cond_nonsingular = false;
  bool cond_positive_corner = false;
  bool cond_cone_combinations = false;
  std::uint64_t probe_seed = 0;
  int probes_total = 0;
  int probes_agreeing = 0;
  double max_probe_angle = 0.0;
  Vector anchor;  // the shared minimizer when the corner condition holds
};

/// True when every diagonal-weighted margin problem over the data shares
/// the unweighted solution, i.e. the feasible set sits inside the
/// axis-aligned cone at that corner. Checked through the sufficient
/// sign-pattern conditions (when N >= p) plus sixteen seeded random
/// positive-weight probes.
std::pair<bool, CornerCertificate> corner_condition(const Dataset& data);

nlohmann::json check_outcome_to_json(const CheckOutcome& outcome);
nlohmann::json direction_report_to_json(const DirectionReport& report);

}  // namespace adabias
