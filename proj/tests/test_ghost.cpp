#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ghostsa/ghost.hpp"
#include "oracles.hpp"

using namespace ghostsa;

namespace {

SubproblemData data_1d(double g, double c, double j) {
  return {Vector::Constant(1, g), Vector::Constant(1, c), Matrix::Constant(1, 1, j), 0.0};
}

SubproblemData fuzz_data(std::mt19937_64& gen, int n, int m) {
  std::normal_distribution<double> N(0.0, 1.0);
  SubproblemData d{Vector(n), Vector(m), Matrix(m, n), 0.0};
  for (int j = 0; j < n; ++j) d.g(j) = 2.0 * N(gen);
  for (int i = 0; i < m; ++i) {
    d.c(i) = 2.0 * N(gen);
    for (int j = 0; j < n; ++j) d.J(i, j) = (gen() % 7 == 0) ? 0.0 : N(gen);
  }
  return d;
}

}  // namespace

TEST_CASE("kappa at a feasible point vanishes") {
  SubproblemData d{Vector::Zero(2), (Vector(2) << -1.0, -2.0).finished(), Matrix::Random(2, 2), 0.0};
  const KappaResult k = compute_kappa(d, GhostConfig{});
  CHECK(k.kappa == 0.0);
  CHECK(k.inner_min == 0.0);
}

TEST_CASE("kappa with a zero Jacobian keeps the full violation") {
  const KappaResult k = compute_kappa(data_1d(0.0, 1.0, 0.0), GhostConfig{});
  CHECK(k.inner_min == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(k.kappa == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("kappa when the linearization can reach zero") {
  const SubproblemData d = data_1d(0.0, 1.0, 2.0);
  const double grid = oracle::minmax_grid_1d(d.c, d.J, 0.8);
  CHECK(grid == doctest::Approx(0.0));
  const KappaResult k = compute_kappa(d, GhostConfig{});
  CHECK(std::abs(k.inner_min) <= 1e-8);
  CHECK(k.kappa == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("slack constraint leaves the unconstrained step") {
  SubproblemData d{(Vector(2) << 1.0, 0.0).finished(), Vector::Constant(1, -10.0), Matrix::Ones(1, 2), 0.0};
  const DirectionSolution s = solve_direction(d, GhostConfig{});
  REQUIRE(s.status == SolveStatus::optimal);
  CHECK(s.d(0) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(s.d(1)) < 1e-9);
  CHECK(std::abs(s.mu(0)) < 1e-9);
  CHECK(s.theta == 0.0);
}

TEST_CASE("chained hand KKT: kappa 0.5, d -0.25, mu 0.125, theta 0.5") {
  const DirectionSolution s = solve_direction(data_1d(0.0, 1.0, 2.0), GhostConfig{});
  REQUIRE(s.status == SolveStatus::optimal);
  CHECK(s.kappa == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(s.d(0) == doctest::Approx(-0.25).epsilon(1e-8));
  CHECK(s.mu(0) == doctest::Approx(0.125).epsilon(1e-8));
  CHECK(s.theta == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("default configuration and invariant errors") {
  const GhostConfig cfg;
  CHECK(cfg.tau == 1.0);
  CHECK(cfg.beta == 10.0);
  CHECK(cfg.rho == 0.8);
  CHECK(cfg.lambda == 0.5);
  CHECK_NOTHROW(cfg.validate());
  GhostConfig bad = cfg;
  bad.rho = 12.0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("0 < rho < beta"), ConfigError);
  bad = cfg;
  bad.lambda = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("no constraints reduces to a box QP") {
  SubproblemData d{(Vector(3) << 30.0, -0.5, 0.0).finished(), Vector(0), Matrix(0, 3), 0.0};
  const DirectionSolution s = solve_direction(d, GhostConfig{});
  REQUIRE(s.status == SolveStatus::optimal);
  CHECK(s.kappa == 0.0);
  CHECK(s.theta == 0.0);
  CHECK(s.d(0) == doctest::Approx(-10.0));
  CHECK(s.d(1) == doctest::Approx(0.5));
}

TEST_CASE("fuzzed kappa and theta invariants against the vertex oracle") {
  std::mt19937_64 gen(2718);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + static_cast<int>(gen() % 3), m = 1 + static_cast<int>(gen() % 4);
    const SubproblemData d = fuzz_data(gen, n, m);
    GhostConfig cfg;
    cfg.beta = 0.5 + 5.0 * U(gen);
    cfg.rho = cfg.beta * (0.05 + 0.9 * U(gen));
    cfg.lambda = 0.05 + 0.9 * U(gen);
    CAPTURE(t);
    const KappaResult k = compute_kappa(d, cfg);
    REQUIRE(k.status == SolveStatus::optimal);
    const double mv = max_violation(d.c);
    CHECK(k.inner_min >= 0.0);
    CHECK(k.inner_min <= mv);
    CHECK(std::abs(k.inner_min - oracle::minmax_by_vertices(d.c, d.J, cfg.rho)) <= 1e-7);
    CHECK(k.kappa == doctest::Approx((1.0 - cfg.lambda) * mv + cfg.lambda * k.inner_min).epsilon(1e-12));
    CHECK(k.kappa <= mv + 1e-12);

    // The witness is feasible for the direction QP built on the same data.
    const Vector slack = d.c + d.J * k.witness - Vector::Constant(m, k.kappa);
    CHECK(slack.maxCoeff() <= 1e-7);
    CHECK(k.witness.lpNorm<Eigen::Infinity>() <= cfg.beta);

    const DirectionSolution s = solve_direction(d, cfg);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.theta >= 0.0);
    CHECK(s.theta <= cfg.lambda * mv + 1e-12);
    CHECK((d.c + d.J * s.d).maxCoeff() <= s.kappa + 1e-7);
  }
}

TEST_CASE("direction matches the enumeration oracle on the relaxed QP") {
  std::mt19937_64 gen(31);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + static_cast<int>(gen() % 4), m = 1 + static_cast<int>(gen() % 3);
    const SubproblemData d = fuzz_data(gen, n, m);
    const GhostConfig cfg;
    const DirectionSolution s = solve_direction(d, cfg);
    REQUIRE(s.status == SolveStatus::optimal);
    const auto ref = oracle::enumerate_qp(direction_qp(d, cfg, s.kappa), true);
    REQUIRE(ref);
    CHECK((s.d - ref->d).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("stronger regularization never lengthens the step") {
  std::mt19937_64 gen(57);
  for (int t = 0; t < 300; ++t) {
    const SubproblemData d = fuzz_data(gen, 3, 2);
    GhostConfig weak, strong;
    strong.tau = 10.0 * weak.tau;
    const double a = solve_direction(d, weak).d.norm(), b = solve_direction(d, strong).d.norm();
    CHECK(b <= a + 1e-7);
  }
}

TEST_CASE("zero violation gives kappa 0, theta 0 and a feasible zero step") {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 100; ++t) {
    SubproblemData d = fuzz_data(gen, 3, 3);
    d.c = -d.c.cwiseAbs();
    const DirectionSolution s = solve_direction(d, GhostConfig{});
    CHECK(s.kappa == 0.0);
    CHECK(s.theta == 0.0);
    CHECK(d.c.maxCoeff() <= 0.0);
  }
}
