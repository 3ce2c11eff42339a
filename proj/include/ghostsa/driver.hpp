#pragma once

// Stochastic approximation outer loop: x <- x + gamma * d_tilde(x) with a
// diminishing step, plus the monitored convergence quantities.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ghostsa/mlmc.hpp"

namespace ghostsa {

enum class ScheduleKind { harmonic, incremental };

std::string_view to_string(ScheduleKind k);
ScheduleKind parse_schedule_kind(std::string_view s);

/// harmonic:    gamma^nu = 1 / (1 + nu)
/// incremental: gamma^1 = gamma1, gamma^(nu+1) = gamma^nu (1 - zeta gamma^nu)
struct Schedule {
  ScheduleKind kind = ScheduleKind::harmonic;
  double gamma1 = 0.5;
  double zeta = 0.001;

  void validate() const;
};

/// gamma^nu for nu >= 1. Throws ConfigError for an invalid schedule and
/// InvalidArgument for nu < 1.
double schedule_gamma(const Schedule& s, long nu);

/// Iterates the schedule; next() yields gamma^1, gamma^2, ... bitwise equal
/// to schedule_gamma.
class StepSequence {
 public:
  explicit StepSequence(Schedule s);
  double next();

 private:
  Schedule s_;
  long nu_ = 0;
  double gamma_ = 0.0;
};

/// W(x; eps) = F(x) + max_i C_i(x)_+ / eps.
double ghost_penalty(double F_val, double cons_max_pos, double eps);

struct HighFidelity {
  DirectionSolution sampled;
  std::optional<DirectionSolution> exact;
};

/// Direction on one large batch, plus the exact direction when the problem
/// has an exact oracle.
HighFidelity high_fidelity_direction(const StochasticProblem& problem, const Vector& x, std::size_t n_samples,
                                     const GhostConfig& cfg, Rng& rng, const KernelSettings& kernel = {});

/// Direction at the exact expectations, if available.
std::optional<DirectionSolution> exact_direction(const StochasticProblem& problem, const Vector& x,
                                                 const GhostConfig& cfg, const KernelSettings& kernel = {});

struct DriverConfig {
  GhostConfig ghost;
  Schedule schedule;
  double p_geo = 0.7;
  long iterations = 1000;
  long diag_cadence = 50;         // rows with a high-fidelity direction
  std::size_t hi_samples = 4096;
  double eps = 0.1;               // ghost penalty parameter, monitoring only
  std::size_t monitor_samples = 32;  // batch for monitored values without an exact oracle
  long snapshot_every = 0;        // 0: every row for n <= 1000, else every 100
  int max_retries = 3;
  double iterate_guard = 1e6;
  bool record_timing = false;
  EstimatorSettings estimator;

  void validate() const;
};

/// Row nu describes iterate x^nu (row 0 is the start) and the step taken from
/// it. The last row has no step: gamma = 0, level = -1.
struct RunRow {
  long iter = 0;
  double gamma = 0.0;
  double obj_est = 0.0;
  double cons_max_est = 0.0;  // max_i C_i, signed
  double kappa = 0.0;
  double theta = 0.0;
  double d_tilde_norm = 0.0;
  std::optional<double> d_hi_norm;
  double W_eps = 0.0;
  int level = -1;
  std::size_t samples_used = 0;
  double wall_ms = 0.0;

  int retries = 0;
  int capped_redraws = 0;
  double delta_scaled_inf = 0.0;       // |delta|_inf / pmf(N)
  std::optional<double> noise_norm;    // |d_tilde - d_hi| on cadenced rows

  // Snapshot rows carry x^nu, d_tilde^nu and x^(nu+1).
  std::optional<Vector> x;
  std::optional<Vector> d_tilde;
  std::optional<Vector> x_next;
};

enum class RunStatus { completed, aborted };

struct RunRecord {
  std::vector<RunRow> rows;
  RunStatus status = RunStatus::completed;
  std::string abort_reason;
  bool guard_exceeded = false;
  Vector final_x;
};

/// Executes exactly cfg.iterations updates from x1 using streams derived from
/// `seed`. Monitoring uses streams separate from the step stream, so the
/// trajectory does not depend on diagnostic settings.
RunRecord run(const StochasticProblem& problem, const DriverConfig& cfg, const Vector& x1, std::uint64_t seed);

/// Max over random pairs near `center` of |d(x) - d(y)| / |x - y|^(1/2) using
/// the exact oracle. Returns nullopt without one.
std::optional<double> holder_ratio_max(const StochasticProblem& problem, const GhostConfig& cfg, const Vector& center,
                                       double radius, int pairs, Rng& rng);

}  // namespace ghostsa
