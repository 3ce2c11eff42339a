#pragma once

// Dense operator-splitting kernel for the two convex shapes used by the
// direction step:
//
//   QP:      min_d  q'd + tau/2 |d|^2   s.t.  A d <= b,  lower <= d <= upper
//   min-max: min_d  max_i (c_i + J_i d)_+  s.t.  |d|_inf <= rho
//
// The min-max problem is solved as its epigraph LP on (d, t) by the same
// ADMM iteration with a zero quadratic term.

#include <string_view>

#include "ghostsa/types.hpp"

namespace ghostsa {

enum class SolveStatus { optimal, infeasible, max_iter };

std::string_view to_string(SolveStatus s);

struct QpSpec {
  Vector q;
  double tau = 1.0;
  Matrix A;  // k x n, may have zero rows
  Vector b;  // k
  Vector lower;
  Vector upper;

  int dim() const { return static_cast<int>(q.size()); }
  int rows() const { return static_cast<int>(A.rows()); }
};

/// Multiplier convention: stationarity reads
///   q + tau d + A' mu - box_mult = 0,
/// so box_mult_j > 0 when the lower bound of d_j is active and < 0 when the
/// upper bound is.
struct QpSolution {
  Vector d;
  Vector mu;
  Vector box_mult;
  SolveStatus status = SolveStatus::max_iter;
  double primal_res = 0.0;
  double dual_res = 0.0;
  int iterations = 0;
  bool polished = false;
  /// When status == infeasible: a dual direction (rows then box) whose
  /// existence proves the constraint set empty.
  Vector certificate;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double dual_sign = 0.0;  // how far mu/box_mult are from their sign cone

  double max() const;
};

struct KernelSettings {
  double tol = 1e-8;
  int max_iter = 20000;
  double sigma = 1e-6;
  double alpha = 1.6;
  double rho = 0.1;
  int check_every = 5;
  int adapt_every = 25;
  bool polish = true;
};

/// KKT residuals of a primal-dual pair for `spec`.
KktResiduals kkt_residuals(const QpSpec& spec, const Vector& d, const Vector& mu, const Vector& box_mult);

/// Throws InvalidArgument on inconsistent shapes, tau < 0 or lower > upper.
void validate(const QpSpec& spec);

/// Requires tau > 0. Status optimal means every KKT residual is <= tol.
QpSolution solve_qp(const QpSpec& spec, const KernelSettings& settings);
inline QpSolution solve_qp(const QpSpec& spec, double tol = 1e-8) {
  KernelSettings s;
  s.tol = tol;
  return solve_qp(spec, s);
}

struct MinMaxResult {
  double value = 0.0;
  Vector witness;
  double lower_bound = 0.0;  // dual certificate: value - lower_bound >= |value - optimum|
  SolveStatus status = SolveStatus::max_iter;
  int iterations = 0;
};

/// Optimal value of min_{|d|_inf <= rho} max_i (c_i + J_i d)_+ to within tol,
/// with a feasible witness attaining `value` exactly.
MinMaxResult solve_minmax(const Vector& c, const Matrix& J, double rho, const KernelSettings& settings);
inline MinMaxResult solve_minmax(const Vector& c, const Matrix& J, double rho, double tol = 1e-8) {
  KernelSettings s;
  s.tol = tol;
  return solve_minmax(c, J, rho, s);
}

}  // namespace ghostsa
