#include "ghostsa/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "ghostsa/dataset.hpp"
#include "ghostsa/ghost.hpp"
#include "ghostsa/mlmc.hpp"
#include "ghostsa/network.hpp"
#include "ghostsa/qp.hpp"
#include "ghostsa/synthetic.hpp"

namespace ghostsa {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

Vector normal_vector(Rng& rng, int n, double scale) {
  Vector v(n);
  for (int j = 0; j < n; ++j) v(j) = scale * rng.normal();
  return v;
}

std::vector<CheckResult> kernel_suite(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 11));
  std::vector<CheckResult> out;

  // Random feasible QPs: b is built around an interior point so every
  // instance has a solution, and KKT residuals are recomputed independently.
  double worst_kkt = 0.0;
  int failures = 0;
  for (int t = 0; t < 300; ++t) {
    const int n = 1 + static_cast<int>(rng() % 12), k = static_cast<int>(rng() % 8);
    QpSpec s;
    s.q = normal_vector(rng, n, 2.0);
    s.A = Matrix(k, n);
    for (int i = 0; i < k; ++i) s.A.row(i) = normal_vector(rng, n, 1.0).transpose();
    const Vector interior = normal_vector(rng, n, 0.3);
    s.b = s.A * interior + Vector::NullaryExpr(k, [&](Eigen::Index) { return 0.5 * rng.uniform(); });
    s.lower = Vector::Constant(n, -2.0);
    s.upper = Vector::Constant(n, 2.0);
    const QpSolution sol = solve_qp(s);
    if (sol.status != SolveStatus::optimal) {
      ++failures;
      continue;
    }
    // Stationarity q + tau d + A'mu - box = 0 with signs and complementarity.
    const Vector stat = s.q + s.tau * sol.d + s.A.transpose() * sol.mu - sol.box_mult;
    double r = stat.cwiseAbs().maxCoeff();
    if (k > 0) {
      const Vector slack = s.A * sol.d - s.b;
      r = std::max({r, slack.maxCoeff(), -sol.mu.minCoeff(), (sol.mu.cwiseProduct(slack)).cwiseAbs().maxCoeff()});
    }
    for (int j = 0; j < n; ++j) {
      const double bm = sol.box_mult(j);
      r = std::max({r, sol.d(j) - s.upper(j), s.lower(j) - sol.d(j),
                    std::abs(bm) * std::min(std::abs(sol.d(j) - s.lower(j)), std::abs(s.upper(j) - sol.d(j)))});
    }
    worst_kkt = std::max(worst_kkt, r);
  }
  out.push_back({"qp_kkt_residuals", failures == 0 && worst_kkt <= 1e-6,
                 fmt("300 random QPs, %.0f non-optimal, worst KKT residual %.3g", failures, worst_kkt)});

  // Min-max LP: the witness attains the value and the certificate brackets it.
  double worst_gap = 0.0, worst_witness = 0.0;
  bool bracket = true;
  for (int t = 0; t < 300; ++t) {
    const int n = 1 + static_cast<int>(rng() % 4), m = 1 + static_cast<int>(rng() % 4);
    const Vector c = normal_vector(rng, m, 2.0);
    Matrix J(m, n);
    for (int i = 0; i < m; ++i) J.row(i) = normal_vector(rng, n, 1.0).transpose();
    const double rho = 0.1 + 2.0 * rng.uniform();
    const MinMaxResult r = solve_minmax(c, J, rho);
    const double attained = std::max(0.0, (c + J * r.witness).maxCoeff());
    worst_witness = std::max(worst_witness, std::abs(attained - r.value));
    worst_gap = std::max(worst_gap, r.value - r.lower_bound);
    bracket = bracket && r.status == SolveStatus::optimal && r.witness.lpNorm<Eigen::Infinity>() <= rho + 1e-12 &&
              r.lower_bound <= r.value + 1e-12;
  }
  out.push_back({"minmax_certificate", bracket && worst_gap <= 1e-7 && worst_witness <= 1e-12,
                 fmt("300 min-max LPs, worst certified gap %.3g, worst witness mismatch %.3g", worst_gap,
                     worst_witness)});

  // Ghost subproblem: the kappa witness is always a feasible direction.
  GhostConfig cfg;
  double worst_slack = -1.0;
  bool theta_ok = true;
  for (int t = 0; t < 300; ++t) {
    const int n = 1 + static_cast<int>(rng() % 5), m = 1 + static_cast<int>(rng() % 4);
    SubproblemData d{normal_vector(rng, n, 1.0), normal_vector(rng, m, 2.0), Matrix(m, n), 0.0};
    for (int i = 0; i < m; ++i) d.J.row(i) = normal_vector(rng, n, 1.0).transpose();
    const DirectionSolution s = solve_direction(d, cfg);
    worst_slack = std::max(worst_slack, (d.c + d.J * s.kappa_witness).maxCoeff() - s.kappa);
    theta_ok = theta_ok && s.status == SolveStatus::optimal && s.theta >= 0.0 &&
               s.theta <= cfg.lambda * max_violation(d.c) + 1e-12;
  }
  out.push_back({"ghost_always_feasible", theta_ok && worst_slack <= 1e-7,
                 fmt("300 fuzzed subproblems, worst witness slack %.3g", worst_slack)});
  return out;
}

std::vector<CheckResult> estimator_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const double noise = 0.5;
  auto prob = make_problem(SyntheticSpec{SyntheticKind::finite_support, 2, 1, noise, 0.0, 0});
  const Vector x = (Vector(2) << 0.8, 0.3).finished();
  const GhostConfig cfg;

  // Reference direction from the enumerated support.
  SubproblemData mean{Vector::Zero(2), Vector::Zero(1), Matrix::Zero(1, 2), 0.0};
  for (const Sample& s : finite_support_points(x, noise)) {
    mean.g += s.obj_grad / 4.0;
    mean.c += s.cons_vals / 4.0;
    mean.J += s.cons_jac / 4.0;
  }
  const Vector ref = solve_direction(mean, cfg).d;

  Rng rng(derive_seed(seed, 12));
  bool identity = true;
  for (int k = 0; k < 200; ++k) {
    const EstimatorDraw d = estimate_direction(*prob, x, cfg, 0.7, rng);
    const Vector rebuilt = d.delta / d.level.pmf() + d.d_single;
    identity = identity && d.d_tilde == rebuilt && d.samples_used == (std::size_t{1} << (d.level.n + 1)) + 1;
  }
  out.push_back({"construction_identity", identity, "200 draws: d_tilde = delta / pmf + d_single, budget 2^(N+1)+1"});

  const EstimatorMoments m = estimator_moments(*prob, x, cfg, 0.7, 20000, derive_seed(seed, 13));
  const double z = (m.mean - ref).cwiseQuotient(m.std_error()).cwiseAbs().maxCoeff();
  out.push_back({"unbiased_mean", z <= 4.0, fmt("20000 draws at p = 0.7, max |z| = %.2f (limit 4)", z)});

  const double series = expected_work(0.7);
  const double rel = std::abs(m.work_mean - series) / series;
  out.push_back({"expected_work", rel <= 0.05,
                 fmt("mean samples per draw %.4g against the series value %.4g", m.work_mean, series)});
  out.push_back({"finite_variance", std::isfinite(m.cov_trace), fmt("cov_trace %.4g", m.cov_trace)});
  return out;
}

double relative_error(const Vector& a, const Vector& b) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j)
    worst = std::max(worst, std::abs(a(j) - b(j)) / std::max({std::abs(a(j)), std::abs(b(j)), 1e-3}));
  return worst;
}

// Fourth-order central stencil. A plain two-point difference with a tiny
// step loses about 1e-8 to roundoff when |f| ~ 100, which swamps small
// gradient entries.
template <class F>
Vector central_difference(F&& f, Vector x) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double x0 = x(j), h = 1e-3 * std::max(1.0, std::abs(x0));
    auto at = [&](double t) {
      x(j) = x0 + t;
      const double v = f(x);
      x(j) = x0;
      return v;
    };
    g(j) = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
  }
  return g;
}

std::vector<CheckResult> gradient_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  for (Experiment e : {Experiment::ellipsoid, Experiment::validation, Experiment::multitask}) {
    NetSpec spec;
    spec.experiment = e;
    spec.heads = e == Experiment::multitask ? 2 : 1;
    if (e != Experiment::ellipsoid) spec.threshold = 0.1;
    BlobSpec b;
    b.rows = 200;
    b.target_classes = spec.heads == 2 ? std::vector<int>{0, 1} : std::vector<int>{0};
    b.seed = seed;
    auto prob = make_problem(spec, std::make_shared<const Dataset>(make_blob_dataset(b)));

    Rng rng(derive_seed(seed, 20 + static_cast<std::uint64_t>(e)));
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const Vector x = normal_vector(rng, prob->dim(), 0.3);
      const std::uint64_t key = rng();
      Rng r0(key);
      const Sample s = prob->sample(x, r0);
      const auto obj = [&](const Vector& y) {
        Rng r(key);
        return prob->sample(y, r).obj_val;
      };
      const auto con = [&](const Vector& y) {
        Rng r(key);
        return prob->sample(y, r).cons_vals(0);
      };
      worst = std::max({worst, relative_error(s.obj_grad, central_difference(obj, x)),
                        relative_error(s.cons_jac.row(0).transpose(), central_difference(con, x))});
    }
    out.push_back({"gradients_" + std::string(to_string(e)), worst <= 1e-5,
                   fmt("5 random points, worst relative error %.3g", worst)});
  }
  return out;
}

}  // namespace

std::vector<CheckResult> run_check_suite(std::string_view suite, std::uint64_t seed) {
  if (suite == "kernel") return kernel_suite(seed);
  if (suite == "estimator") return estimator_suite(seed);
  if (suite == "gradients") return gradient_suite(seed);
  throw InvalidArgument("unknown check suite '" + std::string(suite) + "' (kernel, estimator, gradients)");
}

}  // namespace ghostsa
