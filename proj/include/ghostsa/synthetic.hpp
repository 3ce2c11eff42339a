#pragma once

// Analytically tractable problems with exact oracles, used as references for
// the estimator and the driver.

#include <cstdint>
#include <memory>
#include <string_view>

#include "ghostsa/problem.hpp"

namespace ghostsa {

enum class SyntheticKind { quadratic_affine, finite_support, circle_toy };

std::string_view to_string(SyntheticKind k);
SyntheticKind parse_synthetic_kind(std::string_view s);

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::circle_toy;
  int n = 2;
  int m = 1;
  double noise = 0.1;  // scale of the additive noise; 0 gives a deterministic sampler
  double slack = -0.5; // quadratic_affine: C(a) = slack at the unconstrained minimizer a
  std::uint64_t seed = 0;  // instance data (quadratic_affine)
};

/// quadratic_affine
///   F(x) = 1/2 sum_j h_j (x_j - a_j)^2,  C(x) = A x - b,  b = A a - slack.
///   Gaussian noise of scale `noise` on every sampled field.
/// finite_support (n = 2, m = 1)
///   omega = (s1, s2) uniform on {-1, 1}^2;  with s = noise
///   grad f = x - (2, 1) + s (s1, s2),  c = |x|^2 - 1 + s s1 s2,
///   grad c = 2 x + s (s2, -s1).  Exact values enumerate the four points.
/// circle_toy (n = 2, m = 1)
///   F = (x1 - 2)^2 + (x2 - 2)^2,  C = x1^2 + x2^2 - 1,  Gaussian noise of
///   scale `noise` on grad f and grad c. Solution (1/sqrt2, 1/sqrt2).
std::unique_ptr<StochasticProblem> make_problem(const SyntheticSpec& spec);

/// Support points of the finite_support problem at x, in a fixed order.
std::vector<Sample> finite_support_points(const Vector& x, double noise);

}  // namespace ghostsa
