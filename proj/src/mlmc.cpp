#include "ghostsa/mlmc.hpp"

#include <cmath>
#include <string>

#include "ghostsa/parallel.hpp"

namespace ghostsa {

double GeometricLevel::pmf(double p, int n) { return p * std::pow(1.0 - p, n); }

int draw_level(Rng& rng, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("draw_level: p must lie in (0, 1]");
  if (p == 1.0) {
    rng();  // keep stream consumption independent of p
    return 0;
  }
  const double u = 1.0 - rng.uniform();  // (0, 1]
  const double n = std::floor(std::log(u) / std::log1p(-p));
  return n > 1e9 ? 1'000'000'000 : static_cast<int>(n);
}

double expected_work(double p, int cap) {
  double total = 0.0;
  for (int n = 0; n <= cap; ++n) total += GeometricLevel::pmf(p, n) * static_cast<double>(samples_for_level(n));
  return total;
}

EstimatorFailure::EstimatorFailure(int lvl, SolveStatus st, double pr, double dr)
    : std::runtime_error("estimator: direction solve failed at level " + std::to_string(lvl) + " (" +
                         std::string(to_string(st)) + ", primal " + std::to_string(pr) + ", dual " +
                         std::to_string(dr) + ")"),
      level(lvl),
      status(st),
      primal_res(pr),
      dual_res(dr) {}

DirectionMap ghost_direction_map(const GhostConfig& cfg, const KernelSettings& kernel) {
  cfg.validate();
  return [cfg, kernel](const SubproblemData& data) { return solve_direction(data, cfg, kernel); };
}

namespace {

// Running sums in sample order; mean() matches mean_stats on the same samples.
struct SumAccumulator {
  std::size_t count = 0;
  SubproblemData sum;

  void add(const Sample& s) {
    if (count++ == 0) {
      sum = {s.obj_grad, s.cons_vals, s.cons_jac, s.obj_val};
      return;
    }
    sum.g += s.obj_grad;
    sum.c += s.cons_vals;
    sum.J += s.cons_jac;
    sum.f += s.obj_val;
  }

  SubproblemData mean() const {
    const double inv = 1.0 / static_cast<double>(count);
    return {sum.g * inv, sum.c * inv, sum.J * inv, sum.f * inv};
  }
};

DirectionSolution checked(const DirectionMap& map, const SubproblemData& data, int level) {
  DirectionSolution s = map(data);
  if (s.status != SolveStatus::optimal) throw EstimatorFailure(level, s.status, s.primal_res, s.dual_res);
  return s;
}

}  // namespace

EstimatorDraw estimate_direction(const StochasticProblem& problem, const Vector& x, const DirectionMap& map, double p,
                                 Rng& rng, const EstimatorSettings& settings) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("estimate_direction: p must lie in (0, 1)");
  if (!x.allFinite()) throw InvalidArgument("estimate_direction: point has non-finite entries");

  EstimatorDraw out;
  int level = draw_level(rng, p);
  while (level > settings.level_cap) {
    ++out.capped_redraws;
    level = draw_level(rng, p);
  }
  out.level = {p, level};

  // The pooled batch is streamed: sample j goes to the half of its position
  // parity, so memory stays O(n m) at any level.
  const std::size_t pooled_count = std::size_t{2} << level;
  SumAccumulator all, odd, even;
  for (std::size_t j = 0; j < pooled_count; ++j) {
    Rng child(rng());
    const Sample s = problem.sample(x, child);
    validate_sample(s, problem.dim(), problem.num_constraints());
    all.add(s);
    (j % 2 == 0 ? odd : even).add(s);
  }
  const SubproblemData pooled_data = all.mean();
  out.pooled = checked(map, pooled_data, level);
  const DirectionSolution odd_sol = checked(map, odd.mean(), level);
  const DirectionSolution even_sol = checked(map, even.mean(), level);
  out.delta = out.pooled.d - 0.5 * (odd_sol.d + even_sol.d);

  const SampleBatch single = sample_batch(problem, x, 1, rng);
  const SubproblemData single_data = mean_stats(single);
  out.d_single = checked(map, single_data, level).d;

  out.d_tilde = out.delta / out.level.pmf() + out.d_single;
  out.samples_used = pooled_count + single.size();

  const double w = static_cast<double>(pooled_count) / static_cast<double>(out.samples_used);
  out.obj_mean = w * pooled_data.f + (1.0 - w) * single_data.f;
  out.cons_mean = w * pooled_data.c + (1.0 - w) * single_data.c;
  return out;
}

DirectionSolution naive_direction(const StochasticProblem& problem, const Vector& x, const GhostConfig& cfg, Rng& rng,
                                  const KernelSettings& kernel) {
  return solve_direction(mean_stats(sample_batch(problem, x, 1, rng)), cfg, kernel);
}

Vector EstimatorMoments::std_error() const {
  return (variance / static_cast<double>(draws)).cwiseSqrt();
}

namespace {

// Welford accumulator; chunks are merged with the pairwise update.
struct Accumulator {
  std::size_t count = 0;
  Vector mean;
  Vector m2;
  double work = 0.0;

  void add(const Vector& v, double w) {
    if (count == 0) {
      mean = Vector::Zero(v.size());
      m2 = Vector::Zero(v.size());
    }
    ++count;
    const Vector delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta.cwiseProduct(v - mean);
    work += w;
  }

  void merge(const Accumulator& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count), nb = static_cast<double>(o.count);
    const Vector delta = o.mean - mean;
    mean += delta * (nb / (na + nb));
    m2 += o.m2 + delta.cwiseProduct(delta) * (na * nb / (na + nb));
    count += o.count;
    work += o.work;
  }
};

constexpr std::size_t kChunk = 256;

}  // namespace

EstimatorMoments sample_moments(std::size_t draws, std::uint64_t seed, int workers,
                                const std::function<Vector(Rng&, double& work)>& draw) {
  if (draws < 2) throw InvalidArgument("estimator_moments: draws must be >= 2");
  const std::size_t chunks = (draws + kChunk - 1) / kChunk;
  std::vector<Accumulator> parts(chunks);
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t end = std::min(draws, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      Rng rng(derive_seed(seed, i));
      double work = 0.0;
      const Vector v = draw(rng, work);
      parts[c].add(v, work);
    }
  });
  Accumulator total;
  for (const auto& part : parts) total.merge(part);

  EstimatorMoments out;
  out.draws = total.count;
  out.mean = total.mean;
  out.variance = total.m2 / static_cast<double>(total.count - 1);
  out.cov_trace = out.variance.sum();
  out.work_mean = total.work / static_cast<double>(total.count);
  return out;
}

EstimatorMoments estimator_moments(const StochasticProblem& problem, const Vector& x, const GhostConfig& cfg, double p,
                                   std::size_t draws, std::uint64_t seed, int workers,
                                   const EstimatorSettings& settings) {
  const DirectionMap map = ghost_direction_map(cfg, settings.kernel);
  std::atomic<std::size_t> capped{0};
  EstimatorMoments out = sample_moments(draws, seed, workers, [&](Rng& rng, double& work) {
    EstimatorDraw d = estimate_direction(problem, x, map, p, rng, settings);
    work = static_cast<double>(d.samples_used);
    capped += static_cast<std::size_t>(d.capped_redraws);
    return d.d_tilde;
  });
  out.capped_redraws = capped.load();
  return out;
}

}  // namespace ghostsa
