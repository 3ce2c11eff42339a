#pragma once

// Ghost-relaxed direction step: the linearized constraints are relaxed by a
// state-dependent level kappa so that the direction QP is feasible at every
// point, including infeasible iterates.

#include "ghostsa/problem.hpp"
#include "ghostsa/qp.hpp"

namespace ghostsa {

struct GhostConfig {
  double tau = 1.0;     // proximal weight of the direction QP
  double beta = 10.0;   // box radius of the direction
  double rho = 0.8;     // box radius of the relaxation problem, 0 < rho < beta
  double lambda = 0.5;  // blend between current violation and best linearized violation

  /// Throws ConfigError naming the violated condition.
  void validate() const;
};

struct KappaResult {
  double kappa = 0.0;
  double inner_min = 0.0;  // min_{|d|<=rho} max_i (c_i + J_i d)_+
  double max_violation = 0.0;  // max_i (c_i)_+
  Vector witness;          // feasible for the direction QP
  SolveStatus status = SolveStatus::optimal;
};

struct DirectionSolution {
  Vector d;
  Vector mu;
  Vector box_mult;
  double kappa = 0.0;
  double inner_min = 0.0;
  double theta = 0.0;
  Vector kappa_witness;
  SolveStatus status = SolveStatus::optimal;
  double primal_res = 0.0;
  double dual_res = 0.0;
};

/// max_i (c_i)_+, zero when there are no constraints.
double max_violation(const Vector& c);

KappaResult compute_kappa(const SubproblemData& data, const GhostConfig& cfg, const KernelSettings& settings = {});

/// Solves min g'd + tau/2 |d|^2  s.t.  c + J d <= kappa,  |d|_inf <= beta,
/// with kappa from compute_kappa on the same data.
DirectionSolution solve_direction(const SubproblemData& data, const GhostConfig& cfg,
                                  const KernelSettings& settings = {});

/// The QP solved by solve_direction for a given kappa.
QpSpec direction_qp(const SubproblemData& data, const GhostConfig& cfg, double kappa);

}  // namespace ghostsa
