#include "ghostsa/driver.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace ghostsa {

std::string_view to_string(ScheduleKind k) { return k == ScheduleKind::harmonic ? "harmonic" : "incremental"; }

ScheduleKind parse_schedule_kind(std::string_view s) {
  if (s == "harmonic") return ScheduleKind::harmonic;
  if (s == "incremental") return ScheduleKind::incremental;
  throw ConfigError("unknown schedule kind '" + std::string(s) + "' (expected harmonic|incremental)");
}

void Schedule::validate() const {
  if (!(gamma1 > 0.0 && gamma1 < 1.0)) throw ConfigError("schedule: invariant 0 < gamma1 < 1 violated");
  if (kind == ScheduleKind::incremental && !(zeta > 0.0 && zeta < 1.0)) {
    throw ConfigError("schedule: invariant 0 < zeta < 1 violated");
  }
}

StepSequence::StepSequence(Schedule s) : s_(s) { s_.validate(); }

double StepSequence::next() {
  ++nu_;
  if (s_.kind == ScheduleKind::harmonic) {
    gamma_ = 1.0 / (1.0 + static_cast<double>(nu_));
  } else {
    gamma_ = nu_ == 1 ? s_.gamma1 : gamma_ * (1.0 - s_.zeta * gamma_);
  }
  return gamma_;
}

double schedule_gamma(const Schedule& s, long nu) {
  if (nu < 1) throw InvalidArgument("schedule_gamma: nu must be >= 1");
  StepSequence seq(s);
  double g = 0.0;
  if (s.kind == ScheduleKind::harmonic) return 1.0 / (1.0 + static_cast<double>(nu));
  for (long i = 0; i < nu; ++i) g = seq.next();
  return g;
}

double ghost_penalty(double F_val, double cons_max_pos, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("ghost_penalty: eps must be positive");
  return F_val + cons_max_pos / eps;
}

std::optional<DirectionSolution> exact_direction(const StochasticProblem& problem, const Vector& x,
                                                 const GhostConfig& cfg, const KernelSettings& kernel) {
  const auto ex = problem.exact(x);
  if (!ex) return std::nullopt;
  return solve_direction(ex->as_data(), cfg, kernel);
}

HighFidelity high_fidelity_direction(const StochasticProblem& problem, const Vector& x, std::size_t n_samples,
                                     const GhostConfig& cfg, Rng& rng, const KernelSettings& kernel) {
  if (n_samples == 0) throw InvalidArgument("high_fidelity_direction: n_samples must be >= 1");
  HighFidelity out;
  out.sampled = solve_direction(mean_stats(sample_batch(problem, x, n_samples, rng)), cfg, kernel);
  out.exact = exact_direction(problem, x, cfg, kernel);
  return out;
}

void DriverConfig::validate() const {
  ghost.validate();
  schedule.validate();
  if (!(p_geo > 0.0 && p_geo < 1.0)) throw ConfigError("driver: invariant 0 < p_geo < 1 violated");
  if (iterations < 0) throw ConfigError("driver: iterations must be >= 0");
  if (diag_cadence < 1) throw ConfigError("driver: diag_cadence must be >= 1");
  if (hi_samples < 1) throw ConfigError("driver: hi_samples must be >= 1");
  if (!(eps > 0.0)) throw ConfigError("driver: eps must be positive");
  if (max_retries < 0) throw ConfigError("driver: max_retries must be >= 0");
}

namespace {

struct Monitored {
  double obj = 0.0;
  double cons_max = 0.0;
  double kappa = 0.0;
  double theta = 0.0;
};

Monitored monitor(const StochasticProblem& problem, const Vector& x, const DriverConfig& cfg, Rng& rng) {
  SubproblemData data;
  if (auto ex = problem.exact(x)) {
    data = ex->as_data();
  } else {
    data = mean_stats(sample_batch(problem, x, std::max<std::size_t>(cfg.monitor_samples, 1), rng));
  }
  Monitored m;
  m.obj = data.f;
  m.cons_max = data.c.size() > 0 ? data.c.maxCoeff() : 0.0;
  if (data.c.size() > 0) {
    const KappaResult k = compute_kappa(data, cfg.ghost, cfg.estimator.kernel);
    m.kappa = k.kappa;
    m.theta = cfg.ghost.lambda * (k.max_violation - k.inner_min);
  }
  return m;
}

}  // namespace

RunRecord run(const StochasticProblem& problem, const DriverConfig& cfg, const Vector& x1, std::uint64_t seed) {
  cfg.validate();
  if (x1.size() != problem.dim() || !x1.allFinite()) throw InvalidArgument("run: invalid starting point");

  Rng step_rng(derive_seed(seed, 1));
  Rng monitor_rng(derive_seed(seed, 2));
  Rng hi_rng(derive_seed(seed, 3));
  const long snapshot_every = cfg.snapshot_every > 0 ? cfg.snapshot_every : (problem.dim() <= 1000 ? 1 : 100);
  const DirectionMap map = ghost_direction_map(cfg.ghost, cfg.estimator.kernel);

  RunRecord rec;
  rec.rows.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  StepSequence steps(cfg.schedule);
  Vector x = x1;

  for (long nu = 0; nu <= cfg.iterations; ++nu) {
    const auto t0 = std::chrono::steady_clock::now();
    RunRow row;
    row.iter = nu;
    const bool last = nu == cfg.iterations;

    const Monitored mon = monitor(problem, x, cfg, monitor_rng);
    row.obj_est = mon.obj;
    row.cons_max_est = mon.cons_max;
    row.kappa = mon.kappa;
    row.theta = mon.theta;
    row.W_eps = ghost_penalty(mon.obj, std::max(0.0, mon.cons_max), cfg.eps);

    std::optional<Vector> d_hi;
    if (nu % cfg.diag_cadence == 0 || last) {
      const DirectionSolution hi =
          high_fidelity_direction(problem, x, cfg.hi_samples, cfg.ghost, hi_rng, cfg.estimator.kernel).sampled;
      row.d_hi_norm = hi.d.norm();
      d_hi = hi.d;
    }

    const bool snapshot = nu % snapshot_every == 0 || last;
    if (snapshot) row.x = x;

    if (!last) {
      std::optional<EstimatorDraw> draw;
      while (!draw) {
        try {
          draw = estimate_direction(problem, x, map, cfg.p_geo, step_rng, cfg.estimator);
        } catch (const EstimatorFailure& e) {
          if (row.retries >= cfg.max_retries) {
            rec.status = RunStatus::aborted;
            rec.abort_reason = e.what();
            rec.rows.push_back(std::move(row));
            rec.final_x = x;
            return rec;
          }
          ++row.retries;
        }
      }
      const double gamma = steps.next();
      row.gamma = gamma;
      row.level = draw->level.n;
      row.samples_used = draw->samples_used;
      row.capped_redraws = draw->capped_redraws;
      row.d_tilde_norm = draw->d_tilde.norm();
      row.delta_scaled_inf =
          draw->delta.size() > 0 ? draw->delta.lpNorm<Eigen::Infinity>() / draw->level.pmf() : 0.0;
      if (d_hi) row.noise_norm = (draw->d_tilde - *d_hi).norm();

      x += gamma * draw->d_tilde;
      if (snapshot) {
        row.d_tilde = draw->d_tilde;
        row.x_next = x;
      }
      if (!x.allFinite()) {
        rec.status = RunStatus::aborted;
        rec.abort_reason = "iterate became non-finite at iteration " + std::to_string(nu);
        rec.rows.push_back(std::move(row));
        rec.final_x = x;
        return rec;
      }
      if (x.lpNorm<Eigen::Infinity>() > cfg.iterate_guard) rec.guard_exceeded = true;
    }

    if (cfg.record_timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    rec.rows.push_back(std::move(row));
  }
  rec.final_x = x;
  return rec;
}

std::optional<double> holder_ratio_max(const StochasticProblem& problem, const GhostConfig& cfg, const Vector& center,
                                       double radius, int pairs, Rng& rng) {
  if (!problem.exact(center)) return std::nullopt;
  double best = 0.0;
  const int n = problem.dim();
  auto perturb = [&](const Vector& base, double r) {
    Vector v(n);
    for (int j = 0; j < n; ++j) v(j) = base(j) + r * (2.0 * rng.uniform() - 1.0);
    return v;
  };
  for (int k = 0; k < pairs; ++k) {
    const Vector a = perturb(center, radius);
    const Vector b = perturb(a, radius * rng.uniform());
    const double dist = (a - b).norm();
    if (dist == 0.0) continue;
    const auto da = exact_direction(problem, a, cfg);
    const auto db = exact_direction(problem, b, cfg);
    best = std::max(best, (da->d - db->d).norm() / std::sqrt(dist));
  }
  return best;
}

}  // namespace ghostsa
