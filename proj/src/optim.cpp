#include "adabias/optim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "format.hpp"

namespace adabias {

namespace {

OptimizerState initial_state(const LossModel& model, const Dataset& data,
                             const Hyperparams& hp) {
  OptimizerState state;
  state.t = 0;
  state.w = hp.w0;
  state.g = loss_gradient(model, data, state.w);
  state.S = state.g.cwiseAbs2();
  return state;
}

OptimizerState advance(const OptimizerState& state, const LossModel& model,
                       const Dataset& data, const Hyperparams& hp, bool adaptive) {
  OptimizerState next;
  next.t = state.t + 1;
  if (adaptive) {
    next.w = state.w - hp.eta * state.preconditioner(hp.epsilon).cwiseProduct(state.g);
  } else {
    next.w = state.w - hp.eta * state.g;
  }
  if (!next.w.allFinite()) {
    throw OverflowError("iterate became non-finite at step " + std::to_string(next.t),
                        state);
  }
  next.g = loss_gradient(model, data, next.w);
  if (!next.g.allFinite()) {
    throw OverflowError("gradient became non-finite at step " + std::to_string(next.t),
                        state);
  }
  next.S = state.S + next.g.cwiseAbs2();
  return next;
}

TrajectoryRecord make_record(const OptimizerState& state, const LossModel& model,
                             const Dataset& data, const Hyperparams& hp) {
  TrajectoryRecord rec;
  rec.t = state.t;
  rec.w = state.w;
  rec.g = state.g;
  rec.S = state.S;
  rec.h = state.preconditioner(hp.epsilon);
  rec.loss = loss_value(model, data, state.w);
  const double norm = state.w.norm();
  rec.dir = norm > 0.0 ? Vector(state.w / norm) : Vector(Vector::Zero(state.w.size()));
  return rec;
}

}  // namespace

std::string optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::adagrad ? "adagrad" : "gd";
}

OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "adagrad") return OptimizerKind::adagrad;
  if (name == "gd") return OptimizerKind::gd;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

Vector OptimizerState::preconditioner(double epsilon) const {
  return (S.array() + epsilon).rsqrt();
}

const TrajectoryRecord& Trajectory::nearest(long t) const {
  const TrajectoryRecord* best = &records.front();
  for (const auto& rec : records) {
    if (std::abs(rec.t - t) < std::abs(best->t - t)) best = &rec;
  }
  return *best;
}

OptimizerState adagrad_step(const OptimizerState& state, const LossModel& model,
                            const Dataset& data, const Hyperparams& hp) {
  return advance(state, model, data, hp, /*adaptive=*/true);
}

OptimizerState gd_step(const OptimizerState& state, const LossModel& model,
                       const Dataset& data, const Hyperparams& hp) {
  return advance(state, model, data, hp, /*adaptive=*/false);
}

Trajectory run(OptimizerKind kind, const LossModel& model, const Dataset& data,
               const Hyperparams& hp, long thinning, bool override_assumptions) {
  hp.validate();
  if (thinning < 1) throw std::invalid_argument("thinning stride must be positive");
  if (hp.w0.size() != data.dim()) throw std::invalid_argument("w0 has wrong dimension");

  OptimizerState state = initial_state(model, data, hp);
  if (hp.epsilon == 0.0 && (state.g.array() == 0.0).any()) {
    throw std::invalid_argument(
        "epsilon = 0 requires every initial gradient component to be nonzero");
  }
  if (!override_assumptions) {
    const AssumptionReport report = check_assumptions(model, data, hp);
    if (!report.all_ok()) {
      std::ostringstream msg;
      msg << "assumption check failed (separable=" << report.separable
          << ", eta=" << hp.eta << " vs bound=" << report.eta_bound
          << "); pass override to run anyway";
      throw AssumptionError(msg.str());
    }
  }

  Trajectory traj;
  traj.kind = kind;
  traj.hp = hp;
  traj.thinning = thinning;
  traj.assumptions_overridden = override_assumptions;

  const bool adaptive = kind == OptimizerKind::adagrad;
  traj.records.push_back(make_record(state, model, data, hp));
  while (true) {
    if (state.g.norm() < hp.grad_tol) {
      traj.stop_reason = StopReason::grad_tol;
      break;
    }
    if (state.t >= hp.max_iters) {
      traj.stop_reason = StopReason::max_iters;
      break;
    }
    state = advance(state, model, data, hp, adaptive);
    if (state.t % thinning == 0) {
      traj.records.push_back(make_record(state, model, data, hp));
    }
  }
  if (traj.records.back().t != state.t) {
    traj.records.push_back(make_record(state, model, data, hp));
  }
  traj.terminal_state = state;
  return traj;
}

HInfinityEstimate estimate_h_infinity(const Trajectory& traj, double epsilon) {
  if (traj.kind != OptimizerKind::adagrad) {
    throw std::invalid_argument("h_inf estimation needs an AdaGrad trajectory");
  }
  const long T = traj.terminal_state.t;
  const Vector h_final = (traj.terminal_state.S.array() + epsilon).rsqrt();
  const TrajectoryRecord& mid = traj.nearest(T / 2);
  const Vector h_mid = (mid.S.array() + epsilon).rsqrt();

  HInfinityEstimate estimate;
  estimate.h_inf = h_final;
  estimate.tail_error = ((h_mid - h_final).array() / h_final.array()).maxCoeff();
  return estimate;
}

double induced_loss(const LossModel& model, const Matrix& xi, const Vector& v) {
  const Vector margins = xi * v;
  double total = 0.0;
  for (Eigen::Index n = 0; n < margins.size(); ++n) total += model.value(margins[n]);
  return total;
}

Vector induced_loss_gradient(const LossModel& model, const Matrix& xi, const Vector& v) {
  const Vector margins = xi * v;
  Vector slopes(margins.size());
  for (Eigen::Index n = 0; n < margins.size(); ++n) {
    slopes[n] = model.derivative(margins[n]);
  }
  return xi.transpose() * slopes;
}

InducedQuantities induced_quantities(const OptimizerState& state, const Vector& h_inf,
                                     const LossModel& model, const Dataset& data,
                                     const Hyperparams& hp) {
  if (h_inf.size() != data.dim()) {
    throw std::invalid_argument("h_inf has wrong dimension");
  }
  if ((h_inf.array() <= 0.0).any()) {
    throw std::invalid_argument("h_inf components must be positive");
  }
  const Vector sqrt_h = h_inf.cwiseSqrt();

  InducedQuantities iq;
  iq.h_inf = h_inf;
  iq.xi = data.signed_features() * sqrt_h.asDiagonal();
  iq.v = state.w.cwiseQuotient(sqrt_h);
  iq.beta_t = state.preconditioner(hp.epsilon).cwiseQuotient(h_inf);
  iq.delta = -hp.eta * induced_loss_gradient(model, iq.xi, iq.v);
  iq.d = iq.beta_t.cwiseProduct(iq.delta);
  return iq;
}

void trajectory_to_csv(const Trajectory& traj, std::ostream& out) {
  using detail::format_double;
  const Eigen::Index p = traj.terminal_state.w.size();
  out << "t,loss,grad_norm";
  for (Eigen::Index i = 0; i < p; ++i) out << ",w_" << (i + 1);
  for (Eigen::Index i = 0; i < p; ++i) out << ",h_" << (i + 1);
  for (Eigen::Index i = 0; i < p; ++i) out << ",dir_" << (i + 1);
  out << '\n';
  for (const auto& rec : traj.records) {
    out << rec.t << ',' << format_double(rec.loss) << ','
        << format_double(rec.g.norm());
    for (Eigen::Index i = 0; i < p; ++i) out << ',' << format_double(rec.w[i]);
    for (Eigen::Index i = 0; i < p; ++i) out << ',' << format_double(rec.h[i]);
    for (Eigen::Index i = 0; i < p; ++i) out << ',' << format_double(rec.dir[i]);
    out << '\n';
  }
}

}  // namespace adabias
