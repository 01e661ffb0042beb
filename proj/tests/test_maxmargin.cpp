#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "adabias/analysis.hpp"
#include "adabias/experiment.hpp"
#include "adabias/maxmargin.hpp"
#include "test_util.hpp"

using namespace adabias;
using namespace adabias::testutil;

namespace {

MarginProblem problem_of(const Matrix& constraints) {
  MarginProblem pr;
  pr.constraints = constraints;
  return pr;
}

void check_certificate(const MarginProblem& pr, const MarginSolution& s) {
  const Matrix& c = pr.constraints;
  for (Eigen::Index n = 0; n < c.rows(); ++n) {
    const double margin = c.row(n).dot(s.w_star);
    CHECK(margin >= 1.0 - 1e-9);
    CHECK(s.dual[n] >= 0.0);
    CHECK(std::abs(s.dual[n] * (margin - 1.0)) <= 1e-8);
  }
  // stationarity: the solution lies in the cone of its active constraints
  const Vector rebuilt = c.transpose() * s.dual;
  CHECK((s.w_star - rebuilt).cwiseAbs().maxCoeff() <=
        std::max(s.kkt_residual, 1e-12));
}

}  // namespace

TEST_CASE("single constraint projects onto the boundary") {
  Matrix c(1, 2);
  c << 1, 0;
  MarginSolution s = solve_hard_margin(problem_of(c));
  CHECK(s.w_star[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.w_star[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.dual[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.active_set == std::vector<int>{0});
  CHECK(s.kkt_residual < 1e-10);
}

TEST_CASE("duplicate two-point constraints collapse to the sample direction") {
  const double th = 1.1;
  Dataset d = two_point_dataset(th);
  MarginSolution s = solve_hard_margin(problem_of(d.signed_features()));
  CHECK(s.w_star[0] == doctest::Approx(std::cos(th)).epsilon(1e-12));
  CHECK(s.w_star[1] == doctest::Approx(std::sin(th)).epsilon(1e-12));
  check_certificate(problem_of(d.signed_features()), s);
}

TEST_CASE("axis-aligned pair meets at the corner") {
  Matrix c(2, 2);
  c << 1, 0, 0, 1;
  MarginSolution s = solve_hard_margin(problem_of(c));
  CHECK(s.w_star[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.w_star[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.active_set.size() == 2);
  check_certificate(problem_of(c), s);
}

TEST_CASE("weighted solve reproduces the tilted closed form") {
  const double th = 1.04;  // anything acute
  Dataset d = two_point_dataset(th);
  MarginProblem pr = problem_of(d.signed_features());
  // weights 1/sqrt(h) for h = (1/cos, 1/sin)
  Vector weights(2);
  weights << std::sqrt(std::cos(th)), std::sqrt(std::sin(th));
  pr.weights = weights;
  MarginSolution s = solve_weighted_margin(pr);
  const double expected = 1.0 / (std::cos(th) + std::sin(th));
  CHECK(s.w_star[0] == doctest::Approx(expected).epsilon(1e-10));
  CHECK(s.w_star[1] == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("all-ones weights reduce to the unweighted problem") {
  std::mt19937_64 rng(31);
  GeneratorSpec spec{.seed = 77, .n = 6, .p = 3, .margin = 0.2};
  Dataset d = generate_separable(spec);
  MarginProblem pr = problem_of(d.signed_features());
  MarginSolution plain = solve_hard_margin(pr);
  pr.weights = Vector::Ones(3);
  MarginSolution weighted = solve_weighted_margin(pr);
  CHECK((plain.w_star - weighted.w_star).norm() <= 1e-12 * (1.0 + plain.w_star.norm()));
}

TEST_CASE("weighted/unweighted conjugacy is the same code path") {
  GeneratorSpec spec{.seed = 101, .n = 8, .p = 4, .margin = 0.15};
  Dataset d = generate_separable(spec);
  Vector b(4);
  b << 0.5, 2.0, 1.25, 0.8;
  MarginProblem pr = problem_of(d.signed_features());
  pr.weights = b;
  MarginSolution w_solve = solve_weighted_margin(pr);

  MarginProblem transformed =
      problem_of(d.signed_features() * b.cwiseInverse().asDiagonal());
  MarginSolution u_solve = solve_hard_margin(transformed);
  const Vector mapped = u_solve.w_star.cwiseQuotient(b);
  CHECK((w_solve.w_star - mapped).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("wedge corner solves any positive weighting") {
  // two rays, one in the second quadrant and one in the fourth
  auto [alpha, beta] = example32_oracle(1.0, 1.0, 5 * M_PI / 8, -M_PI / 8);
  Dataset d = wedge_dataset(1.0, 5 * M_PI / 8, 1.0, -M_PI / 8);
  for (double wx : {0.2, 1.0, 7.0}) {
    MarginProblem pr = problem_of(d.signed_features());
    Vector b(2);
    b << wx, 1.3;
    pr.weights = b;
    MarginSolution s = solve_weighted_margin(pr);
    CHECK(s.w_star[0] == doctest::Approx(alpha).epsilon(1e-9));
    CHECK(s.w_star[1] == doctest::Approx(beta).epsilon(1e-9));
  }
}

TEST_CASE("feasibility") {
  SUBCASE("contradictory pair") {
    Matrix c(2, 2);
    c << 1, 0, -1, 0;
    FeasibilityResult r = feasibility(problem_of(c));
    CHECK_FALSE(r.feasible);
    CHECK_FALSE(r.witness.has_value());
    CHECK_THROWS_AS(solve_hard_margin(problem_of(c)), InfeasibleError);
    CHECK_THROWS_AS(brute_force_margin(problem_of(c)), InfeasibleError);
  }

  SUBCASE("two-point data") {
    Dataset d = two_point_dataset(0.6);
    FeasibilityResult r = feasibility(problem_of(d.signed_features()));
    CHECK(r.feasible);
    REQUIRE(r.witness.has_value());
    CHECK((d.signed_features() * (*r.witness)).minCoeff() >= 1.0 - 1e-12);
  }

  SUBCASE("planted instances are always feasible") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      GeneratorSpec spec{.seed = seed, .n = 9, .p = 4, .margin = 0.1};
      Dataset d = generate_separable(spec);
      CHECK(feasibility(problem_of(d.signed_features())).feasible);
    }
  }
}

TEST_CASE("brute force agrees with the dual solver on random instances") {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> n_dist(1, 10), p_dist(1, 5);
  int checked = 0;
  for (std::uint64_t seed = 500; checked < 200; ++seed) {
    GeneratorSpec spec{.seed = seed,
                       .n = n_dist(rng),
                       .p = p_dist(rng),
                       .margin = 0.1};
    if (spec.n < spec.p) continue;  // keep a mix but mostly determined systems
    Dataset d = generate_separable(spec);
    MarginProblem pr = problem_of(d.signed_features());
    MarginSolution fast = solve_hard_margin(pr);
    MarginSolution oracle = brute_force_margin(pr);
    CHECK((fast.w_star - oracle.w_star).norm() <=
          1e-8 * (1.0 + oracle.w_star.norm()));
    CHECK(fast.kkt_residual < 1e-10);
    check_certificate(pr, fast);
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("brute force handles the trivial and closed-form cases") {
  Matrix c(1, 3);
  c << 0, 2, 0;
  MarginSolution s = brute_force_margin(problem_of(c));
  CHECK(s.w_star[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.w_star[0] == 0.0);
  CHECK(s.w_star[2] == 0.0);

  auto [alpha, beta] = example32_oracle(1.0, 1.0, 5 * M_PI / 8, -M_PI / 8);
  Dataset d = wedge_dataset(1.0, 5 * M_PI / 8, 1.0, -M_PI / 8);
  MarginSolution corner = brute_force_margin(problem_of(d.signed_features()));
  CHECK(corner.w_star[0] == doctest::Approx(alpha).epsilon(1e-10));
  CHECK(corner.w_star[1] == doctest::Approx(beta).epsilon(1e-10));
}

TEST_CASE("tight margins and clustered directions stay within certificate bounds") {
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<int> n_dist(2, 20), p_dist(2, 8);
  for (int k = 0; k < 30; ++k) {
    GeneratorSpec spec{.seed = 7000 + static_cast<std::uint64_t>(k),
                       .n = n_dist(rng),
                       .p = p_dist(rng),
                       .margin = 0.02};
    Dataset d = generate_separable(spec);
    MarginProblem pr = problem_of(d.signed_features());
    MarginSolution fast = solve_hard_margin(pr);
    MarginSolution oracle = brute_force_margin(pr);
    CAPTURE(spec.seed);
    CHECK((fast.w_star - oracle.w_star).norm() <= 1e-8 * (1.0 + oracle.w_star.norm()));
    CHECK(fast.kkt_residual < 1e-10);
    check_certificate(pr, fast);
  }

  // beyond the enumeration bound the dual solver must stand on its own
  GeneratorSpec big{.seed = 7777, .n = 40, .p = 6, .margin = 0.05};
  Dataset d = generate_separable(big);
  MarginProblem pr = problem_of(d.signed_features());
  MarginSolution s = solve_hard_margin(pr);
  CHECK(s.kkt_residual < 1e-10);
  check_certificate(pr, s);
}

TEST_CASE("brute force enforces the enumeration bounds") {
  Matrix c = Matrix::Ones(21, 2);
  CHECK_THROWS_AS(brute_force_margin(problem_of(c)), std::invalid_argument);
  Matrix wide = Matrix::Ones(2, 9);
  CHECK_THROWS_AS(brute_force_margin(problem_of(wide)), std::invalid_argument);
}

TEST_CASE("scaling all constraints by s scales the solution by 1/s") {
  GeneratorSpec spec{.seed = 900, .n = 7, .p = 3, .margin = 0.2};
  Dataset d = generate_separable(spec);
  MarginSolution base = solve_hard_margin(problem_of(d.signed_features()));
  for (double s : {0.25, 3.0, 40.0}) {
    MarginSolution scaled = solve_hard_margin(problem_of(Matrix(s * d.signed_features())));
    CHECK((scaled.w_star - base.w_star / s).norm() <=
          1e-10 * (1.0 + base.w_star.norm() / s));
  }
}

TEST_CASE("problem validation") {
  Matrix c(1, 2);
  c << 0, 0;
  CHECK_THROWS_AS(solve_hard_margin(problem_of(c)), std::invalid_argument);

  Matrix good(1, 2);
  good << 1, 0;
  MarginProblem pr = problem_of(good);
  Vector w(2);
  w << 1.0, -2.0;
  pr.weights = w;
  CHECK_THROWS_AS(solve_weighted_margin(pr), std::invalid_argument);
}

TEST_CASE("solution JSON has the stable field names") {
  Matrix c(2, 2);
  c << 1, 0, 0, 1;
  MarginSolution s = solve_hard_margin(problem_of(c));
  nlohmann::json j = solution_to_json(s);
  CHECK(j.contains("w_star"));
  CHECK(j.contains("dual"));
  CHECK(j.contains("active_set"));
  CHECK(j.contains("kkt_residual"));
  CHECK(j["w_star"].size() == 2);
  CHECK(j["dual"].size() == 2);
}
