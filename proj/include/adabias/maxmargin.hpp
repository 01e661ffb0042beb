#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "adabias/model.hpp"

namespace adabias {

/// Min-norm problem with unit-margin constraints <w, c_n> >= 1. With
/// weights b present the objective becomes ||b x w||^2 instead of ||w||^2.
struct MarginProblem {
  Matrix constraints;              // rows are the c_n
  std::optional<Vector> weights;   // strictly positive when present

  void validate() const;  // throws std::invalid_argument
};

/// Primal minimizer plus its dual certificate.
struct MarginSolution {
  Vector w_star;
  Vector dual;                    // alpha_n >= 0, one per constraint
  std::vector<int> active_set;    // n with <w*, c_n> = 1 within tolerance
  double kkt_residual = 0.0;
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverStagnationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FeasibilityResult {
  bool feasible = false;
  std::optional<Vector> witness;  // satisfies <w, c_n> >= 1 for all n
};

/// Decides whether {w : <w, c_n> >= 1 for all n} is nonempty by locating
/// the nearest point to the origin in the convex hull of the constraint
/// vectors: the system is solvable iff that distance is positive.
FeasibilityResult feasibility(const MarginProblem& problem);

/// Unique minimizer of ||u||^2 subject to <u, c_n> >= 1, computed by
/// cyclic dual coordinate ascent with exact per-coordinate maximization.
/// The returned certificate has kkt_residual < 1e-10.
MarginSolution solve_hard_margin(const MarginProblem& problem);

/// Diagonal-weighted variant: substitutes u = b x w and solves the
/// unweighted problem over the transformed constraints c_n / b.
MarginSolution solve_weighted_margin(const MarginProblem& problem);

/// Independent oracle: enumerates candidate active sets in lexicographic
/// order and keeps the best KKT point. Exact for this QP class; bounded to
/// N <= 20, p <= 8.
MarginSolution brute_force_margin(const MarginProblem& problem);

nlohmann::json solution_to_json(const MarginSolution& solution);

}  // namespace adabias
