#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ghostsa/driver.hpp"
#include "ghostsa/synthetic.hpp"

using namespace ghostsa;

TEST_CASE("schedule values") {
  CHECK(schedule_gamma(Schedule{ScheduleKind::harmonic}, 1) == 0.5);
  CHECK(schedule_gamma(Schedule{ScheduleKind::harmonic}, 9) == 0.1);
  const Schedule inc{ScheduleKind::incremental, 0.5, 0.001};
  CHECK(schedule_gamma(inc, 1) == 0.5);
  CHECK(schedule_gamma(inc, 2) == doctest::Approx(0.49975).epsilon(1e-14));
  CHECK_THROWS_AS(schedule_gamma(Schedule{ScheduleKind::incremental, 1.5, 0.001}, 1), ConfigError);
  CHECK_THROWS_AS(schedule_gamma(Schedule{ScheduleKind::harmonic, 1.5, 0.001}, 1), ConfigError);
  CHECK_THROWS_AS(schedule_gamma(inc, 0), InvalidArgument);
  CHECK_THROWS_AS(Schedule({ScheduleKind::incremental, 0.5, 0.0}).validate(), ConfigError);
}

TEST_CASE("step sequence agrees with the closed form and is nonincreasing") {
  for (auto kind : {ScheduleKind::harmonic, ScheduleKind::incremental}) {
    const Schedule s{kind, 0.7, 0.01};
    StepSequence seq(s);
    double prev = 1.0;
    for (long nu = 1; nu <= 300; ++nu) {
      const double g = seq.next();
      CHECK(g == schedule_gamma(s, nu));
      CHECK(g > 0.0);
      CHECK(g <= prev);
      prev = g;
    }
  }
}

TEST_CASE("summability proxy over a million steps") {
  const long total = 1000000;
  {
    StepSequence seq(Schedule{ScheduleKind::harmonic});
    double sum = 0.0, last_sq = 0.0;
    for (long nu = 1; nu <= total; ++nu) {
      const double g = seq.next();
      sum += g;
      last_sq = g * g;
    }
    CHECK(sum > 10.0);
    CHECK(last_sq < 1e-10);
  }
  {
    // gamma ~ 1 / (zeta nu): the squared series converges, but its tail
    // increments stay near 1e-6 at this horizon, so check the 1/nu tail decay.
    StepSequence seq(Schedule{ScheduleKind::incremental, 0.5, 0.001});
    double sum = 0.0;
    std::vector<double> block_sq;  // sums of gamma^2 over (N/2, N] for N = 2^k
    double acc = 0.0;
    long next_edge = 2;
    for (long nu = 1; nu <= total; ++nu) {
      const double g = seq.next();
      sum += g;
      acc += g * g;
      if (nu == next_edge) {
        block_sq.push_back(acc);
        acc = 0.0;
        next_edge *= 2;
      }
    }
    CHECK(sum > 10.0);
    const std::size_t b = block_sq.size();
    REQUIRE(b > 3);
    CHECK(block_sq[b - 1] / block_sq[b - 2] == doctest::Approx(0.5).epsilon(0.05));
    CHECK(block_sq[b - 2] / block_sq[b - 3] == doctest::Approx(0.5).epsilon(0.1));
  }
}

TEST_CASE("ghost penalty") {
  CHECK(ghost_penalty(1.0, 0.0, 0.1) == 1.0);
  CHECK(ghost_penalty(1.0, 0.5, 0.5) == 2.0);
  CHECK_THROWS_AS(ghost_penalty(1.0, 0.5, 0.0), InvalidArgument);
}

TEST_CASE("high-fidelity direction") {
  const GhostConfig cfg;
  auto clean = make_problem(SyntheticSpec{SyntheticKind::circle_toy, 2, 1, 0.0, 0.0, 0});
  const Vector x = (Vector(2) << 0.3, 1.4).finished();
  Rng rng(4);
  const HighFidelity hf = high_fidelity_direction(*clean, x, 8, cfg, rng);
  REQUIRE(hf.exact);
  const Vector direct = solve_direction(clean->exact(x)->as_data(), cfg).d;
  CHECK((hf.sampled.d - direct).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((hf.exact->d - direct).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(high_fidelity_direction(*clean, x, 0, cfg, rng), InvalidArgument);

  auto toy = make_problem(SyntheticSpec{SyntheticKind::finite_support, 2, 1, 0.5, 0.0, 0});
  const Vector y = (Vector(2) << 0.8, 0.3).finished();
  const HighFidelity big = high_fidelity_direction(*toy, y, 100000, cfg, rng);
  CHECK((big.sampled.d - big.exact->d).cwiseAbs().maxCoeff() <= 1e-2);
}

TEST_CASE("zero iterations keep only the initial row") {
  auto prob = make_problem(SyntheticSpec{});
  DriverConfig cfg;
  cfg.iterations = 0;
  const RunRecord rec = run(*prob, cfg, Vector::Zero(2), 1);
  REQUIRE(rec.rows.size() == 1);
  CHECK(rec.rows[0].iter == 0);
  CHECK(rec.rows[0].level == -1);
  CHECK(rec.rows[0].d_hi_norm.has_value());
  CHECK(rec.status == RunStatus::completed);
}

TEST_CASE("invalid driver inputs") {
  auto prob = make_problem(SyntheticSpec{});
  DriverConfig cfg;
  cfg.iterations = -1;
  CHECK_THROWS_AS(run(*prob, cfg, Vector::Zero(2), 1), ConfigError);
  cfg.iterations = 3;
  CHECK_THROWS_AS(run(*prob, cfg, Vector::Zero(3), 1), InvalidArgument);
  cfg.p_geo = 1.0;
  CHECK_THROWS_AS(run(*prob, cfg, Vector::Zero(2), 1), ConfigError);
}

TEST_CASE("update identity, step bound and cadence") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::finite_support, 2, 1, 0.5, 0.0, 0});
  DriverConfig cfg;
  cfg.iterations = 400;
  cfg.diag_cadence = 25;
  cfg.hi_samples = 64;
  cfg.p_geo = 0.6;
  const RunRecord rec = run(*prob, cfg, Vector::Zero(2), 42);
  REQUIRE(rec.rows.size() == 401);
  for (std::size_t k = 0; k < rec.rows.size(); ++k) {
    const RunRow& r = rec.rows[k];
    CHECK(r.iter == static_cast<long>(k));
    CHECK(r.d_hi_norm.has_value() == (r.iter % 25 == 0 || r.iter == 400));
    if (r.iter == 400) break;
    REQUIRE(r.x);
    REQUIRE(r.x_next);
    const Vector step = *r.x_next - *r.x;
    const Vector rebuilt = *r.x + r.gamma * *r.d_tilde;
    CHECK(*r.x_next == rebuilt);
    CHECK(step.lpNorm<Eigen::Infinity>() <= r.gamma * (cfg.ghost.beta + r.delta_scaled_inf) + 1e-12);
    CHECK(r.samples_used == (std::size_t{1} << (r.level + 1)) + 1);
    CHECK(*rec.rows[k + 1].x == *r.x_next);
  }
}

TEST_CASE("runs are deterministic and independent of diagnostic settings") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::circle_toy, 2, 1, 0.1, 0.0, 0});
  DriverConfig cfg;
  cfg.iterations = 200;
  const RunRecord a = run(*prob, cfg, Vector::Zero(2), 5), b = run(*prob, cfg, Vector::Zero(2), 5);
  CHECK(a.final_x == b.final_x);
  for (std::size_t k = 0; k < a.rows.size(); ++k) CHECK(a.rows[k].W_eps == b.rows[k].W_eps);
  cfg.diag_cadence = 7;
  cfg.hi_samples = 10;
  CHECK(run(*prob, cfg, Vector::Zero(2), 5).final_x == a.final_x);
  CHECK(run(*prob, cfg, Vector::Zero(2), 6).final_x != a.final_x);
}

TEST_CASE("zero-noise quadratic with inactive constraints reaches a stationary point") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::quadratic_affine, 4, 2, 0.0, -3.0, 21});
  DriverConfig cfg;
  cfg.iterations = 1000;
  cfg.diag_cadence = 1000;
  const RunRecord rec = run(*prob, cfg, Vector::Zero(4), 1);
  REQUIRE(rec.status == RunStatus::completed);
  CHECK(*rec.rows.back().d_hi_norm <= 1e-3);

  // Projected-gradient oracle on the same deterministic problem.
  Vector y = Vector::Zero(4);
  for (int k = 0; k < 20000; ++k) y -= 0.1 * prob->exact(y)->grad_F;
  CHECK(prob->exact(y)->C.maxCoeff() < 0.0);
  CHECK((rec.final_x - y).norm() <= 1e-3);
}

TEST_CASE("circle toy violation decays at the relaxation rate") {
  // Under a harmonic step the linearized violation shrinks by (1 - lambda
  // gamma) per step, so C decays like nu^-lambda once the iterate is outside.
  auto prob = make_problem(SyntheticSpec{SyntheticKind::circle_toy, 2, 1, 0.0, 0.0, 0});
  DriverConfig cfg;
  cfg.iterations = 10000;
  cfg.diag_cadence = 10000;
  const RunRecord rec = run(*prob, cfg, Vector::Zero(2), 1);
  const double c1 = rec.rows[1000].cons_max_est, c2 = rec.rows[10000].cons_max_est;
  REQUIRE(c1 > 0.0);
  REQUIRE(c2 > 0.0);
  CHECK(std::log(c1 / c2) / std::log(10.0) == doctest::Approx(cfg.ghost.lambda).epsilon(0.05));
  const Vector star = Vector::Constant(2, std::sqrt(0.5));
  CHECK((rec.final_x - star).norm() < (*rec.rows[1000].x - star).norm());
}

TEST_CASE("circle toy converges under the incremental schedule") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::circle_toy, 2, 1, 0.1, 0.0, 0});
  DriverConfig cfg;
  cfg.iterations = 5000;
  cfg.schedule = Schedule{ScheduleKind::incremental, 0.5, 0.001};
  cfg.diag_cadence = 5000;
  const RunRecord rec = run(*prob, cfg, Vector::Zero(2), 11);
  const Vector star = Vector::Constant(2, std::sqrt(0.5));
  CHECK((rec.final_x - star).norm() < 0.1);
  CHECK(rec.rows.back().W_eps < rec.rows[500].W_eps);
}

TEST_CASE("estimator failures are retried and then abort the run") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::circle_toy, 2, 1, 0.1, 0.0, 0});
  DriverConfig cfg;
  cfg.iterations = 5;
  cfg.diag_cadence = 1000;
  cfg.estimator.kernel.max_iter = 1;  // every direction solve stops early
  const RunRecord rec = run(*prob, cfg, Vector::Constant(2, 2.0), 1);
  CHECK(rec.status == RunStatus::aborted);
  REQUIRE(rec.rows.size() == 1);
  CHECK(rec.rows[0].retries == cfg.max_retries);
  CHECK(rec.abort_reason.find("max_iter") != std::string::npos);
  CHECK(rec.final_x == Vector::Constant(2, 2.0));
}

TEST_CASE("monitored Hoelder ratio is finite") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::circle_toy, 2, 1, 0.1, 0.0, 0});
  Rng rng(3);
  const auto ratio = holder_ratio_max(*prob, GhostConfig{}, Vector::Constant(2, 0.8), 0.1, 50, rng);
  REQUIRE(ratio);
  CHECK(std::isfinite(*ratio));
  CHECK(*ratio > 0.0);
}
