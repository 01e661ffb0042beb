#include "adabias/maxmargin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace adabias {

namespace {

constexpr double kKktTol = 1e-10;
constexpr long kMaxSweeps = 1000000;
constexpr double kDualNormCap = 1e12;
constexpr double kDedupTol = 1e-12;

// Representative row index for every constraint, merging rows that are
// equal within kDedupTol. Returns (unique row indices, class of each row).
std::pair<std::vector<int>, std::vector<int>> dedup_constraints(const Matrix& c) {
  std::vector<int> reps;
  std::vector<int> cls(static_cast<size_t>(c.rows()), -1);
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    int found = -1;
    for (size_t r = 0; r < reps.size(); ++r) {
      const double scale = 1.0 + c.row(reps[r]).norm();
      if ((c.row(i) - c.row(reps[r])).norm() <= kDedupTol * scale) {
        found = static_cast<int>(r);
        break;
      }
    }
    if (found < 0) {
      reps.push_back(static_cast<int>(i));
      found = static_cast<int>(reps.size()) - 1;
    }
    cls[static_cast<size_t>(i)] = found;
  }
  return {reps, cls};
}

std::vector<int> active_set_of(const Matrix& c, const Vector& w) {
  std::vector<int> active;
  for (Eigen::Index n = 0; n < c.rows(); ++n) {
    const double margin = c.row(n).dot(w);
    if (std::abs(margin - 1.0) <= 1e-6 * (1.0 + c.row(n).norm())) {
      active.push_back(static_cast<int>(n));
    }
  }
  return active;
}

double kkt_residual_of(const Matrix& c, const Vector& w, const Vector& alpha) {
  double r = (w - c.transpose() * alpha).cwiseAbs().maxCoeff();
  for (Eigen::Index n = 0; n < c.rows(); ++n) {
    const double margin = c.row(n).dot(w);
    r = std::max(r, std::max(0.0, 1.0 - margin));
    r = std::max(r, std::abs(alpha[n] * (margin - 1.0)));
  }
  return r;
}

// A badly scaled instance cannot place alpha_k * (margin - 1) below an
// absolute 1e-10: the product bottoms out at the rounding floor of the
// margin itself. Accept whichever of the two is larger per constraint.
bool kkt_settled(const Matrix& cu, const Vector& alpha, const Vector& u) {
  constexpr double kUlp = std::numeric_limits<double>::epsilon();
  const double u_norm = u.norm();
  for (Eigen::Index k = 0; k < cu.rows(); ++k) {
    const double margin = cu.row(k).dot(u);
    const double floor = 4.0 * kUlp * (1.0 + u_norm * cu.row(k).norm());
    if (std::max(0.0, 1.0 - margin) > std::max(kKktTol, floor)) return false;
    if (std::abs(alpha[k] * (margin - 1.0)) > std::max(kKktTol, alpha[k] * floor)) {
      return false;
    }
  }
  return true;
}

// Solves the equality-constrained subproblem on the tentative active set
// and accepts the result when it is a full KKT point. Coordinate ascent
// identifies the support long before its iterates settle on nearly
// parallel constraints; this finishes such cases exactly.
bool polish_active_set(const Matrix& cu, Vector& alpha, Vector& u) {
  std::vector<int> active;
  for (Eigen::Index k = 0; k < cu.rows(); ++k) {
    const double margin = cu.row(k).dot(u);
    if (alpha[k] > 0.0 || margin <= 1.0 + 1e-8 * (1.0 + cu.row(k).norm())) {
      active.push_back(static_cast<int>(k));
    }
  }
  if (active.empty()) return false;

  const int a = static_cast<int>(active.size());
  Matrix rows(a, cu.cols());
  for (int i = 0; i < a; ++i) rows.row(i) = cu.row(active[i]);

  // Minimum-norm solution of rows * u = 1 through an orthogonal
  // decomposition (the Gram route would square the conditioning), with one
  // refinement pass to push the margins to their rounding floor.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(rows);
  Vector u_cand = cod.solve(Vector::Ones(a));
  u_cand += cod.solve(Vector::Ones(a) - rows * u_cand);

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod_t(Matrix(rows.transpose()));
  Vector lam = cod_t.solve(u_cand);
  lam += cod_t.solve(u_cand - rows.transpose() * lam);
  if ((lam.array() < 0.0).any()) return false;

  Vector alpha_cand = Vector::Zero(cu.rows());
  for (int i = 0; i < a; ++i) alpha_cand[active[i]] = lam[i];
  if (!kkt_settled(cu, alpha_cand, u_cand)) return false;
  alpha = alpha_cand;
  u = u_cand;
  return true;
}

// Dual coordinate ascent on max sum(alpha) - 0.5 ||sum alpha_n c_n||^2 over
// alpha >= 0, cyclic sweeps with exact per-coordinate maximization.
MarginSolution dual_coordinate_ascent(const Matrix& c) {
  const auto [reps, cls] = dedup_constraints(c);
  const int m = static_cast<int>(reps.size());
  const Eigen::Index p = c.cols();

  Matrix cu(m, p);
  for (int k = 0; k < m; ++k) cu.row(k) = c.row(reps[k]);
  Vector sqnorm(m);
  for (int k = 0; k < m; ++k) sqnorm[k] = cu.row(k).squaredNorm();

  Vector alpha = Vector::Zero(m);
  Vector u = Vector::Zero(p);

  bool converged = false;
  for (long sweep = 0; sweep < kMaxSweeps; ++sweep) {
    for (int k = 0; k < m; ++k) {
      const double step = (1.0 - cu.row(k).dot(u)) / sqnorm[k];
      const double updated = std::max(0.0, alpha[k] + step);
      const double change = updated - alpha[k];
      if (change != 0.0) {
        alpha[k] = updated;
        u += change * cu.row(k).transpose();
      }
    }
    u = cu.transpose() * alpha;  // exact rebuild before judging convergence

    if (kkt_settled(cu, alpha, u) ||
        ((sweep & 0x3f) == 0x3f && polish_active_set(cu, alpha, u))) {
      converged = true;
      break;
    }
    if (alpha.norm() > kDualNormCap) {
      throw InfeasibleError("dual iterates diverged: margin problem infeasible");
    }
  }
  if (!converged) {
    throw SolverStagnationError("dual coordinate ascent hit the sweep cap");
  }

  MarginSolution solution;
  solution.w_star = u;
  solution.dual = Vector::Zero(c.rows());
  std::vector<bool> assigned(reps.size(), false);
  for (Eigen::Index n = 0; n < c.rows(); ++n) {
    const int k = cls[static_cast<size_t>(n)];
    if (!assigned[static_cast<size_t>(k)]) {
      solution.dual[n] = alpha[k];  // class mass goes to the first occurrence
      assigned[static_cast<size_t>(k)] = true;
    }
  }
  solution.active_set = active_set_of(c, u);
  solution.kkt_residual = kkt_residual_of(c, u, solution.dual);
  return solution;
}

}  // namespace

void MarginProblem::validate() const {
  if (constraints.rows() < 1 || constraints.cols() < 1) {
    throw std::invalid_argument("margin problem needs at least one constraint");
  }
  if (!constraints.allFinite()) {
    throw std::invalid_argument("non-finite constraint entry");
  }
  for (Eigen::Index n = 0; n < constraints.rows(); ++n) {
    if (constraints.row(n).norm() == 0.0) {
      throw std::invalid_argument("zero constraint vector");
    }
  }
  if (weights) {
    if (weights->size() != constraints.cols()) {
      throw std::invalid_argument("weight vector has wrong dimension");
    }
    if (!weights->allFinite() || (weights->array() <= 0.0).any()) {
      throw std::invalid_argument("weights must be strictly positive");
    }
  }
}

FeasibilityResult feasibility(const MarginProblem& problem) {
  problem.validate();
  const Matrix& c = problem.constraints;
  const Eigen::Index n_rows = c.rows();
  const double scale = c.rowwise().norm().maxCoeff();

  // Nearest point to the origin in conv{c_n} via pairwise mass transfer.
  // Any hull point q with min_n <q, c_n> > 0 certifies feasibility with
  // witness q / min_n <q, c_n>; the hull reaching the origin denies it.
  Vector lambda = Vector::Zero(n_rows);
  lambda[0] = 1.0;
  Vector q = c.row(0);

  constexpr long kMaxIters = 1000000;
  for (long it = 0; it < kMaxIters; ++it) {
    const Vector dots = c * q;
    const double min_dot = dots.minCoeff();
    if (min_dot > 0.0) {
      return {true, Vector(q / min_dot)};
    }
    if (q.norm() <= 1e-12 * scale) break;

    Eigen::Index i_min = 0;
    dots.minCoeff(&i_min);
    Eigen::Index i_max = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n_rows; ++i) {
      if (lambda[i] > 0.0 && dots[i] > best) {
        best = dots[i];
        i_max = i;
      }
    }
    const double gap = best - min_dot;
    if (gap <= 1e-15 * scale * scale) break;  // optimal, and min_dot <= 0

    const Vector step_dir = (c.row(i_min) - c.row(i_max)).transpose();
    const double denom = step_dir.squaredNorm();
    if (denom == 0.0) break;
    const double tau = std::min(lambda[i_max], gap / denom);
    lambda[i_min] += tau;
    lambda[i_max] -= tau;
    q += tau * step_dir;
    if ((it & 0x3ff) == 0x3ff) q = c.transpose() * lambda;
  }
  return {false, std::nullopt};
}

MarginSolution solve_hard_margin(const MarginProblem& problem) {
  problem.validate();
  if (problem.weights) {
    throw std::invalid_argument("solve_hard_margin expects an unweighted problem");
  }
  if (!feasibility(problem).feasible) {
    throw InfeasibleError("margin constraints are infeasible");
  }
  return dual_coordinate_ascent(problem.constraints);
}

MarginSolution solve_weighted_margin(const MarginProblem& problem) {
  problem.validate();
  if (!problem.weights) return solve_hard_margin(problem);

  const Vector& b = *problem.weights;
  MarginProblem transformed;
  transformed.constraints =
      problem.constraints * b.cwiseInverse().asDiagonal();

  MarginSolution solution = solve_hard_margin(transformed);
  solution.w_star = solution.w_star.cwiseQuotient(b);
  solution.active_set = active_set_of(problem.constraints, solution.w_star);
  return solution;
}

MarginSolution brute_force_margin(const MarginProblem& problem) {
  problem.validate();
  if (problem.constraints.rows() > 20 || problem.constraints.cols() > 8) {
    throw std::invalid_argument("instance exceeds enumeration bounds (N <= 20, p <= 8)");
  }
  if (problem.weights) {
    const Vector& b = *problem.weights;
    MarginProblem transformed;
    transformed.constraints = problem.constraints * b.cwiseInverse().asDiagonal();
    MarginSolution solution = brute_force_margin(transformed);
    solution.w_star = solution.w_star.cwiseQuotient(b);
    solution.active_set = active_set_of(problem.constraints, solution.w_star);
    return solution;
  }

  const Matrix& c = problem.constraints;
  const auto [reps, cls] = dedup_constraints(c);
  const int m = static_cast<int>(reps.size());
  const int p = static_cast<int>(c.cols());
  Matrix cu(m, c.cols());
  for (int k = 0; k < m; ++k) cu.row(k) = c.row(reps[k]);

  double best_objective = std::numeric_limits<double>::infinity();
  Vector best_u;
  Vector best_alpha;

  // Candidate active sets as increasing index lists, visited depth-first,
  // which is exactly lexicographic order; the first optimum seen wins.
  std::vector<int> subset;
  auto consider = [&]() {
    const int k = static_cast<int>(subset.size());
    Matrix rows(k, p);
    for (int i = 0; i < k; ++i) rows.row(i) = cu.row(subset[i]);
    const Matrix gram = rows * rows.transpose();
    Eigen::FullPivLU<Matrix> lu(gram);
    if (!lu.isInvertible()) return;
    const Vector alpha = lu.solve(Vector::Ones(k));
    if ((alpha.array() < -1e-10).any()) return;
    const Vector u = rows.transpose() * alpha;
    for (int j = 0; j < m; ++j) {
      if (cu.row(j).dot(u) < 1.0 - 1e-9 * (1.0 + cu.row(j).norm())) return;
    }
    const double objective = u.squaredNorm();
    if (!best_u.size() ||
        objective < best_objective - 1e-14 * (1.0 + best_objective)) {
      best_objective = objective;
      best_u = u;
      best_alpha = Vector::Zero(m);
      for (int i = 0; i < k; ++i) best_alpha[subset[i]] = std::max(0.0, alpha[i]);
    }
  };
  auto extend = [&](auto&& self, int next) -> void {
    for (int j = next; j < m; ++j) {
      subset.push_back(j);
      consider();
      if (static_cast<int>(subset.size()) < p) self(self, j + 1);
      subset.pop_back();
    }
  };
  extend(extend, 0);

  if (!best_u.size()) {
    throw InfeasibleError("no feasible KKT candidate: margin problem infeasible");
  }

  MarginSolution solution;
  solution.w_star = best_u;
  solution.dual = Vector::Zero(c.rows());
  std::vector<bool> assigned(reps.size(), false);
  for (Eigen::Index n = 0; n < c.rows(); ++n) {
    const int k = cls[static_cast<size_t>(n)];
    if (!assigned[static_cast<size_t>(k)]) {
      solution.dual[n] = best_alpha[k];
      assigned[static_cast<size_t>(k)] = true;
    }
  }
  solution.active_set = active_set_of(c, best_u);
  solution.kkt_residual = kkt_residual_of(c, best_u, solution.dual);
  return solution;
}

nlohmann::json solution_to_json(const MarginSolution& solution) {
  nlohmann::json j;
  j["w_star"] = std::vector<double>(solution.w_star.begin(), solution.w_star.end());
  j["dual"] = std::vector<double>(solution.dual.begin(), solution.dual.end());
  j["active_set"] = solution.active_set;
  j["kkt_residual"] = solution.kkt_residual;
  return j;
}

}  // namespace adabias
