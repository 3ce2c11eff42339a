#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ghostsa/driver.hpp"
#include "ghostsa/mlmc.hpp"
#include "ghostsa/synthetic.hpp"

using namespace ghostsa;

namespace {

// Reference direction at the exact expectations, built from the enumerated
// support rather than the problem's own exact oracle.
Vector enumerated_direction(const Vector& x, double noise, const GhostConfig& cfg) {
  const auto pts = finite_support_points(x, noise);
  SubproblemData mean{Vector::Zero(2), Vector::Zero(1), Matrix::Zero(1, 2), 0.0};
  for (const Sample& s : pts) {
    mean.g += s.obj_grad / 4.0;
    mean.c += s.cons_vals / 4.0;
    mean.J += s.cons_jac / 4.0;
  }
  return solve_direction(mean, cfg).d;
}

}  // namespace

TEST_CASE("degenerate and invalid level distributions") {
  Rng rng(1);
  for (int k = 0; k < 100; ++k) CHECK(draw_level(rng, 1.0) == 0);
  CHECK_THROWS_AS(draw_level(rng, 0.0), InvalidArgument);
  CHECK_THROWS_AS(draw_level(rng, 1.5), InvalidArgument);
  CHECK_THROWS_AS(draw_level(rng, -0.2), InvalidArgument);
}

TEST_CASE("geometric levels pass a chi-square test at 1%") {
  Rng rng(4242);
  const int draws = 100000, bins = 11;  // 0..9 and a tail bin
  std::vector<double> counts(bins, 0.0);
  for (int k = 0; k < draws; ++k) counts[std::min(draw_level(rng, 0.5), bins - 1)] += 1.0;
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double prob = b < bins - 1 ? std::pow(0.5, b + 1) : std::pow(0.5, bins - 1);
    const double expect = prob * draws;
    chi2 += (counts[b] - expect) * (counts[b] - expect) / expect;
  }
  // 99th percentile of chi-square with 10 degrees of freedom.
  CHECK(chi2 < 23.209);
}

TEST_CASE("pmf sums to one and is positive") {
  for (double p : {0.05, 0.5, 0.9}) {
    double total = 0.0;
    for (int n = 0; n < 2000; ++n) {
      CHECK(GeometricLevel::pmf(p, n) >= 0.0);
      total += GeometricLevel::pmf(p, n);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(GeometricLevel::pmf(0.5, 30) > 0.0);
}

TEST_CASE("construction identity and sample budget hold per draw") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::finite_support, 2, 1, 0.5, 0.0, 0});
  const Vector x = (Vector(2) << 0.8, 0.3).finished();
  const GhostConfig cfg;
  Rng rng(17);
  for (int k = 0; k < 300; ++k) {
    const EstimatorDraw d = estimate_direction(*prob, x, cfg, 0.6, rng);
    const Vector rebuilt = d.delta / d.level.pmf() + d.d_single;
    CHECK(d.d_tilde == rebuilt);
    CHECK(d.samples_used == (std::size_t{1} << (d.level.n + 1)) + 1);
    CHECK(d.capped_redraws == 0);
  }
}

TEST_CASE("zero noise: all three solves coincide") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::circle_toy, 2, 1, 0.0, 0.0, 0});
  const Vector x = (Vector(2) << 1.5, -0.3).finished();
  const GhostConfig cfg;
  const Vector exact = exact_direction(*prob, x, cfg)->d;
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const EstimatorDraw d = estimate_direction(*prob, x, cfg, 0.5, rng);
    CHECK(d.delta.cwiseAbs().maxCoeff() < 1e-14);
    CHECK((d.d_tilde - exact).cwiseAbs().maxCoeff() < 1e-12);
  }
  const EstimatorMoments m = estimator_moments(*prob, x, cfg, 0.7, 200, 9);
  CHECK(m.cov_trace < 1e-24);
  CHECK((m.mean - exact).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("a linear direction map cancels the correction") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::quadratic_affine, 3, 2, 1.0, -0.5, 5});
  const Vector x = Vector::Ones(3);
  const DirectionMap mean_grad = [](const SubproblemData& data) {
    DirectionSolution s;
    s.d = data.g;
    return s;
  };
  Rng rng(8);
  for (int k = 0; k < 200; ++k) {
    const EstimatorDraw d = estimate_direction(*prob, x, mean_grad, 0.5, rng);
    CHECK(d.delta.cwiseAbs().maxCoeff() < 1e-13);
    CHECK((d.d_tilde - d.d_single).cwiseAbs().maxCoeff() < 1e-13 / d.level.pmf());
  }
}

TEST_CASE("solver failures surface with the level") {
  auto prob = make_problem(SyntheticSpec{});
  const DirectionMap failing = [](const SubproblemData& data) {
    DirectionSolution s;
    s.d = Vector::Zero(data.dim());
    s.status = SolveStatus::max_iter;
    s.primal_res = 0.5;
    return s;
  };
  Rng rng(2);
  try {
    estimate_direction(*prob, Vector::Zero(2), failing, 0.5, rng);
    FAIL("expected an estimator failure");
  } catch (const EstimatorFailure& e) {
    CHECK(e.level >= 0);
    CHECK(e.status == SolveStatus::max_iter);
    CHECK(e.primal_res == 0.5);
  }
  CHECK_THROWS_AS(estimate_direction(*prob, Vector::Zero(2), GhostConfig{}, 1.0, rng), InvalidArgument);
  CHECK_THROWS_AS(estimator_moments(*prob, Vector::Zero(2), GhostConfig{}, 0.5, 1, 0), InvalidArgument);
}

TEST_CASE("levels above the cap are redrawn and counted") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::circle_toy, 2, 1, 0.1, 0.0, 0});
  EstimatorSettings s;
  s.level_cap = 0;
  Rng rng(12);
  int redraws = 0;
  for (int k = 0; k < 200; ++k) {
    const EstimatorDraw d = estimate_direction(*prob, Vector::Zero(2), GhostConfig{}, 0.3, rng, s);
    CHECK(d.level.n == 0);
    redraws += d.capped_redraws;
  }
  CHECK(redraws > 0);
}

TEST_CASE("debiased mean matches the enumerated direction") {
  const double noise = 0.5;
  auto prob = make_problem(SyntheticSpec{SyntheticKind::finite_support, 2, 1, noise, 0.0, 0});
  const GhostConfig cfg;
  for (const Vector& x : {(Vector(2) << 0.8, 0.3).finished(), (Vector(2) << 0.5, 0.5).finished()}) {
    const Vector exact = enumerated_direction(x, noise, cfg);
    const EstimatorMoments m = estimator_moments(*prob, x, cfg, 0.7, 30000, 2025);
    const Vector z = (m.mean - exact).cwiseQuotient(m.std_error());
    CAPTURE(z.transpose());
    CHECK(z.cwiseAbs().maxCoeff() <= 4.0);
    CHECK(std::isfinite(m.cov_trace));
  }
}

TEST_CASE("the plug-in estimator is biased at the same point") {
  const double noise = 0.5;
  const Vector x = (Vector(2) << 0.8, 0.3).finished();
  const GhostConfig cfg;
  // Expectation of the one-sample estimator by enumeration of the support.
  Vector plug_in = Vector::Zero(2);
  for (const Sample& s : finite_support_points(x, noise))
    plug_in += solve_direction({s.obj_grad, s.cons_vals, s.cons_jac, 0.0}, cfg).d / 4.0;
  CHECK((plug_in - enumerated_direction(x, noise, cfg)).cwiseAbs().maxCoeff() > 0.05);
}

TEST_CASE("mean work matches the truncated series") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::quadratic_affine, 2, 1, 0.0, -0.5, 1});
  for (double p : {0.8, 0.9}) {
    const EstimatorMoments m = estimator_moments(*prob, Vector::Zero(2), GhostConfig{}, p, 40000, 77);
    const double series = expected_work(p, 24);
    CHECK(std::abs(m.work_mean - series) <= 0.02 * series);
  }
  CHECK(expected_work(0.9) == doctest::Approx(1.0 + 1.8 / 0.8).epsilon(1e-9));
}

TEST_CASE("larger p means less work") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::finite_support, 2, 1, 0.5, 0.0, 0});
  const Vector x = (Vector(2) << 0.8, 0.3).finished();
  const double w9 = estimator_moments(*prob, x, GhostConfig{}, 0.9, 4000, 1).work_mean;
  const double w5 = estimator_moments(*prob, x, GhostConfig{}, 0.5, 4000, 1).work_mean;
  CHECK(w9 < w5);
}

TEST_CASE("moments do not depend on the worker count") {
  auto prob = make_problem(SyntheticSpec{SyntheticKind::finite_support, 2, 1, 0.5, 0.0, 0});
  const Vector x = (Vector(2) << 0.8, 0.3).finished();
  const EstimatorMoments a = estimator_moments(*prob, x, GhostConfig{}, 0.7, 1500, 6, 1);
  const EstimatorMoments b = estimator_moments(*prob, x, GhostConfig{}, 0.7, 1500, 6, 4);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  CHECK(a.work_mean == b.work_mean);
}
