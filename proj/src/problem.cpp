#include "ghostsa/problem.hpp"

#include <cmath>

namespace ghostsa {

void validate_sample(const Sample& s, int n, int m) {
  if (s.obj_grad.size() != n || s.cons_vals.size() != m || s.cons_jac.rows() != m || s.cons_jac.cols() != n) {
    throw InvalidArgument("sample shape does not match problem dimensions");
  }
  if (!s.obj_grad.allFinite() || !s.cons_vals.allFinite() || !s.cons_jac.allFinite() || !std::isfinite(s.obj_val)) {
    throw InvalidArgument("sample has non-finite entries");
  }
}

SampleBatch sample_batch(const StochasticProblem& problem, const Vector& x, std::size_t count, Rng& rng) {
  if (count == 0) throw InvalidArgument("sample_batch: count must be >= 1");
  if (x.size() != problem.dim()) throw InvalidArgument("sample_batch: point dimension mismatch");
  if (!x.allFinite()) throw InvalidArgument("sample_batch: point has non-finite entries");

  SampleBatch batch;
  batch.samples.reserve(count);
  batch.draw_ids.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    const std::uint64_t id = rng();
    Rng child(id);
    batch.samples.push_back(problem.sample(x, child));
    validate_sample(batch.samples.back(), problem.dim(), problem.num_constraints());
    batch.draw_ids.push_back(id);
  }
  return batch;
}

namespace {

template <class Pick>
SubproblemData accumulate(std::size_t count, Pick pick) {
  const Sample& first = pick(0);
  SubproblemData out{Vector::Zero(first.obj_grad.size()), Vector::Zero(first.cons_vals.size()),
                     Matrix::Zero(first.cons_jac.rows(), first.cons_jac.cols()), 0.0};
  for (std::size_t j = 0; j < count; ++j) {
    const Sample& s = pick(j);
    out.g += s.obj_grad;
    out.c += s.cons_vals;
    out.J += s.cons_jac;
    out.f += s.obj_val;
  }
  const double inv = 1.0 / static_cast<double>(count);
  out.g *= inv;
  out.c *= inv;
  out.J *= inv;
  out.f *= inv;
  return out;
}

}  // namespace

SubproblemData mean_stats(std::span<const Sample> samples) {
  if (samples.empty()) throw InvalidArgument("mean_stats: empty batch");
  return accumulate(samples.size(), [&](std::size_t j) -> const Sample& { return samples[j]; });
}

SubproblemData mean_stats_strided(const SampleBatch& batch, std::size_t offset, std::size_t stride) {
  if (stride == 0) throw InvalidArgument("mean_stats_strided: stride must be >= 1");
  if (offset >= batch.size()) throw InvalidArgument("mean_stats_strided: empty selection");
  const std::size_t count = (batch.size() - offset + stride - 1) / stride;
  return accumulate(count, [&](std::size_t j) -> const Sample& { return batch.samples[offset + j * stride]; });
}

}  // namespace ghostsa
