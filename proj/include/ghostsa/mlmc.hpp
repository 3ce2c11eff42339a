#pragma once

// Randomized multilevel debiasing of the direction map. For a geometric level
// N with pmf p(1-p)^N, 2^(N+1) samples are pooled and split by position
// parity into two halves; the correction
//
//   delta = d(pooled) - (d(odd half) + d(even half)) / 2
//
// telescopes across levels, so  delta / pmf(N) + d(one fresh sample)  has
// expectation equal to the direction at the exact expectations.

#include <cstdint>
#include <functional>
#include <stdexcept>

#include "ghostsa/ghost.hpp"
#include "ghostsa/problem.hpp"

namespace ghostsa {

struct GeometricLevel {
  double p = 1.0;
  int n = 0;

  static double pmf(double p, int n);
  double pmf() const { return pmf(p, n); }
};

/// Draws N >= 0 with P(N = n) = p (1-p)^n by inversion. Throws InvalidArgument
/// unless 0 < p <= 1.
int draw_level(Rng& rng, double p);

/// Sample budget of one estimator draw at level n.
inline std::size_t samples_for_level(int n) { return (std::size_t{1} << (n + 1)) + 1; }

/// Sum over n of pmf(n) * samples_for_level(n), truncated at `cap`.
double expected_work(double p, int cap = 24);

struct EstimatorSettings {
  int level_cap = 24;
  KernelSettings kernel;
};

struct EstimatorDraw {
  GeometricLevel level;
  Vector d_tilde;
  Vector d_single;
  Vector delta;
  std::size_t samples_used = 0;
  int capped_redraws = 0;  // levels above level_cap that were rejected
  DirectionSolution pooled;  // full solution on the pooled batch
  double obj_mean = 0.0;     // mean objective value over every sample drawn
  Vector cons_mean;          // mean constraint values over every sample drawn
};

/// A direction solve failed inside the estimator.
class EstimatorFailure : public std::runtime_error {
 public:
  EstimatorFailure(int level, SolveStatus status, double primal_res, double dual_res);
  int level;
  SolveStatus status;
  double primal_res;
  double dual_res;
};

/// Maps batch means to a direction. The production map is solve_direction.
using DirectionMap = std::function<DirectionSolution(const SubproblemData&)>;

DirectionMap ghost_direction_map(const GhostConfig& cfg, const KernelSettings& kernel = {});

EstimatorDraw estimate_direction(const StochasticProblem& problem, const Vector& x, const DirectionMap& map, double p,
                                 Rng& rng, const EstimatorSettings& settings = {});

inline EstimatorDraw estimate_direction(const StochasticProblem& problem, const Vector& x, const GhostConfig& cfg,
                                        double p, Rng& rng, const EstimatorSettings& settings = {}) {
  return estimate_direction(problem, x, ghost_direction_map(cfg, settings.kernel), p, rng, settings);
}

/// One-sample plug-in direction; biased in general, kept as a baseline.
DirectionSolution naive_direction(const StochasticProblem& problem, const Vector& x, const GhostConfig& cfg, Rng& rng,
                                  const KernelSettings& kernel = {});

struct EstimatorMoments {
  Vector mean;
  Vector variance;  // per coordinate, unbiased
  double cov_trace = 0.0;
  double work_mean = 0.0;
  std::size_t draws = 0;
  std::size_t capped_redraws = 0;

  /// Per-coordinate standard error of `mean`.
  Vector std_error() const;
};

/// Moments over `draws` independent estimator draws. Draw i uses the stream
/// derive_seed(seed, i); results are merged in a fixed chunk order, so they do
/// not depend on `workers`.
EstimatorMoments estimator_moments(const StochasticProblem& problem, const Vector& x, const GhostConfig& cfg, double p,
                                   std::size_t draws, std::uint64_t seed, int workers = 1,
                                   const EstimatorSettings& settings = {});

/// Same protocol for an arbitrary per-draw vector statistic.
EstimatorMoments sample_moments(std::size_t draws, std::uint64_t seed, int workers,
                                const std::function<Vector(Rng&, double& work)>& draw);

}  // namespace ghostsa
