#pragma once

// Stochastic problem abstraction: a sampling oracle for the objective
// gradient and the constraint values/Jacobian, plus the batch means that
// feed every direction subproblem.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghostsa/rng.hpp"
#include "ghostsa/types.hpp"

namespace ghostsa {

/// One joint draw of (grad f(x, xi), c(x, zeta), grad c(x, zeta)).
/// `obj_val` carries f(x, xi) for monitoring only; no solver reads it.
struct Sample {
  Vector obj_grad;  // n
  Vector cons_vals; // m
  Matrix cons_jac;  // m x n
  double obj_val = 0.0;
};

/// Ordered samples together with the stream keys that produced them.
/// Order matters: the estimator splits batches by position parity.
struct SampleBatch {
  std::vector<Sample> samples;
  std::vector<std::uint64_t> draw_ids;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// Batch means of a SampleBatch.
struct SubproblemData {
  Vector g;  // mean objective gradient
  Vector c;  // mean constraint values
  Matrix J;  // mean constraint Jacobian
  double f = 0.0;

  int dim() const { return static_cast<int>(g.size()); }
  int num_constraints() const { return static_cast<int>(c.size()); }
};

/// Expectation-level values, available only for analytically tractable
/// test problems.
struct ExactValues {
  double F = 0.0;
  Vector C;
  Vector grad_F;
  Matrix jac_C;

  SubproblemData as_data() const { return {grad_F, C, jac_C, F}; }
};

/// min E[f(x, xi)]  s.t.  E[c(x, zeta)] <= 0.
///
/// Implementations are immutable after construction; `sample` must be a pure
/// function of (x, rng state) so that batches are reproducible.
class StochasticProblem {
 public:
  virtual ~StochasticProblem() = default;

  virtual int dim() const = 0;
  virtual int num_constraints() const = 0;
  virtual std::string name() const = 0;

  /// One joint draw at x. A single call returns all fields, so xi and zeta may
  /// be dependent.
  virtual Sample sample(const Vector& x, Rng& rng) const = 0;

  /// Exact expectations at x, if the problem has them.
  virtual std::optional<ExactValues> exact(const Vector& /*x*/) const { return std::nullopt; }

  /// Default starting point.
  virtual Vector initial_point(Rng& /*rng*/) const { return Vector::Zero(dim()); }
};

/// Draws `count` independent samples at x. Sample j is generated from a child
/// stream keyed by the j-th output of `rng`; the key is recorded in draw_ids.
SampleBatch sample_batch(const StochasticProblem& problem, const Vector& x, std::size_t count, Rng& rng);

/// Arithmetic means of every field.
SubproblemData mean_stats(std::span<const Sample> samples);
inline SubproblemData mean_stats(const SampleBatch& batch) { return mean_stats(std::span<const Sample>(batch.samples)); }

/// Means over the samples at positions offset, offset + stride, ...
SubproblemData mean_stats_strided(const SampleBatch& batch, std::size_t offset, std::size_t stride);

/// Throws InvalidArgument unless the sample has shapes (n, m) and finite entries.
void validate_sample(const Sample& s, int n, int m);

}  // namespace ghostsa
