#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "adabias/model.hpp"

namespace adabias {

enum class OptimizerKind { adagrad, gd };

std::string optimizer_name(OptimizerKind kind);
OptimizerKind optimizer_from_name(const std::string& name);

/// One iterate of either engine. S accumulates squared gradients through
/// the current step, so h_i = 1/sqrt(S_i + eps) is the preconditioner that
/// the *next* update will apply.
struct OptimizerState {
  long t = 0;
  Vector w;
  Vector S;
  Vector g;

  Vector preconditioner(double epsilon) const;
};

enum class StopReason { max_iters, grad_tol };

/// Thrown when an iterate or gradient leaves the finite range. Carries the
/// last finite state so callers can inspect where the run blew up.
struct OverflowError : std::runtime_error {
  OverflowError(std::string msg, OptimizerState last)
      : std::runtime_error(std::move(msg)), last_state(std::move(last)) {}
  OptimizerState last_state;
};

struct AssumptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrajectoryRecord {
  long t = 0;
  Vector w;
  Vector g;
  Vector S;
  Vector h;
  double loss = 0.0;
  Vector dir;  // w/||w||, zero vector when w = 0
};

/// Thinned recording of a full run: step 0, every stride-th step and the
/// terminal step are always present.
struct Trajectory {
  OptimizerKind kind = OptimizerKind::adagrad;
  Hyperparams hp;
  long thinning = 100;
  std::vector<TrajectoryRecord> records;
  OptimizerState terminal_state;
  StopReason stop_reason = StopReason::max_iters;
  bool assumptions_overridden = false;

  const TrajectoryRecord& front() const { return records.front(); }
  const TrajectoryRecord& back() const { return records.back(); }

  /// Record with t nearest to the requested step (ties toward earlier).
  const TrajectoryRecord& nearest(long t) const;
};

/// Quantities of the preconditioned ("induced") coordinate system at one
/// iterate: v = w/sqrt(h_inf), xi_n = sqrt(h_inf)*z_n, beta = h/h_inf,
/// delta = -eta * grad of the induced loss at v, d = beta*delta.
struct InducedQuantities {
  Vector h_inf;
  Matrix xi;  // rows are xi_n
  Vector v;
  Vector beta_t;
  Vector delta;
  Vector d;
};

/// One diagonal-AdaGrad update w' = w - eta * h(t) x g(t), followed by the
/// gradient/accumulator refresh at w'.
OptimizerState adagrad_step(const OptimizerState& state, const LossModel& model,
                            const Dataset& data, const Hyperparams& hp);

/// Plain gradient descent update; S is still accumulated for diagnostics.
OptimizerState gd_step(const OptimizerState& state, const LossModel& model,
                       const Dataset& data, const Hyperparams& hp);

/// Runs the chosen engine until max_iters or ||g|| < grad_tol.
/// Refuses to start when check_assumptions fails, unless
/// override_assumptions is set (the override is recorded in the output).
Trajectory run(OptimizerKind kind, const LossModel& model, const Dataset& data,
               const Hyperparams& hp, long thinning = 100,
               bool override_assumptions = false);

struct HInfinityEstimate {
  Vector h_inf;
  double tail_error = 0.0;  // max_i (h_i(T/2) - h_i(T)) / h_i(T)
};

/// Terminal-preconditioner estimate of the limit h_inf from an AdaGrad run.
HInfinityEstimate estimate_h_infinity(const Trajectory& traj, double epsilon);

/// Induced-form quantities at a single state, given an h_inf estimate.
InducedQuantities induced_quantities(const OptimizerState& state, const Vector& h_inf,
                                     const LossModel& model, const Dataset& data,
                                     const Hyperparams& hp);

/// Induced loss L_ind(v) = sum_n l(<v, xi_n>), with xi rows as in
/// InducedQuantities.
double induced_loss(const LossModel& model, const Matrix& xi, const Vector& v);
Vector induced_loss_gradient(const LossModel& model, const Matrix& xi, const Vector& v);

/// CSV with columns t, loss, grad_norm, w_1..w_p, h_1..h_p, dir_1..dir_p.
void trajectory_to_csv(const Trajectory& traj, std::ostream& out);

}  // namespace adabias
