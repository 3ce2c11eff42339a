#include "ghostsa/ghost.hpp"

#include <algorithm>

namespace ghostsa {

void GhostConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("ghost config: tau must be positive");
  if (!(rho > 0.0 && rho < beta)) throw ConfigError("ghost config: invariant 0 < rho < beta violated");
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("ghost config: invariant 0 < lambda < 1 violated");
}

double max_violation(const Vector& c) { return c.size() == 0 ? 0.0 : std::max(0.0, c.maxCoeff()); }

KappaResult compute_kappa(const SubproblemData& data, const GhostConfig& cfg, const KernelSettings& settings) {
  cfg.validate();
  KappaResult out;
  out.max_violation = max_violation(data.c);
  out.witness = Vector::Zero(data.dim());
  if (out.max_violation == 0.0) return out;

  const MinMaxResult mm = solve_minmax(data.c, data.J, cfg.rho, settings);
  out.inner_min = std::min(mm.value, out.max_violation);
  out.witness = mm.witness;
  out.status = mm.status;
  out.kappa = (1.0 - cfg.lambda) * out.max_violation + cfg.lambda * out.inner_min;
  return out;
}

QpSpec direction_qp(const SubproblemData& data, const GhostConfig& cfg, double kappa) {
  const int n = data.dim();
  QpSpec spec;
  spec.q = data.g;
  spec.tau = cfg.tau;
  spec.A = data.J;
  spec.b = Vector::Constant(data.num_constraints(), kappa) - data.c;
  spec.lower = Vector::Constant(n, -cfg.beta);
  spec.upper = Vector::Constant(n, cfg.beta);
  return spec;
}

DirectionSolution solve_direction(const SubproblemData& data, const GhostConfig& cfg, const KernelSettings& settings) {
  const KappaResult kr = compute_kappa(data, cfg, settings);
  const QpSolution qp = solve_qp(direction_qp(data, cfg, kr.kappa), settings);

  DirectionSolution out;
  out.d = qp.d;
  out.mu = qp.mu;
  out.box_mult = qp.box_mult;
  out.kappa = kr.kappa;
  out.inner_min = kr.inner_min;
  out.theta = cfg.lambda * (kr.max_violation - kr.inner_min);
  out.kappa_witness = kr.witness;
  out.status = kr.status != SolveStatus::optimal ? kr.status : qp.status;
  out.primal_res = qp.primal_res;
  out.dual_res = qp.dual_res;
  return out;
}

}  // namespace ghostsa
