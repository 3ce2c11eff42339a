#include "ghostsa/trials.hpp"

#include <algorithm>
#include <cmath>

#include "ghostsa/parallel.hpp"

namespace ghostsa {

std::size_t TrialSet::included() const { return static_cast<std::size_t>(std::count(excluded.begin(), excluded.end(), false)); }

TrialSet run_trials(const RunConfig& cfg, int workers) {
  cfg.validate();
  const auto problem = build_problem(cfg);
  const auto n = static_cast<std::size_t>(cfg.trials);

  TrialSet ts;
  ts.config = cfg;
  ts.records.resize(n);
  ts.seeds.resize(n);
  ts.excluded.assign(n, false);
  for (std::size_t t = 0; t < n; ++t) ts.seeds[t] = trial_seed(cfg.seed, t);

  parallel_for(n, workers > 0 ? workers : cfg.workers, [&](std::size_t t) {
    Rng init(derive_seed(ts.seeds[t], 0));
    const Vector x1 = cfg.x1 ? *cfg.x1 : problem->initial_point(init);
    ts.records[t] = run(*problem, cfg.driver, x1, ts.seeds[t]);
  });
  for (std::size_t t = 0; t < n; ++t) ts.excluded[t] = ts.records[t].status == RunStatus::aborted;
  return ts;
}

std::optional<double> column_value(const RunRow& r, std::string_view c) {
  if (c == "iter") return static_cast<double>(r.iter);
  if (c == "gamma") return r.gamma;
  if (c == "obj_est") return r.obj_est;
  if (c == "cons_max_est") return r.cons_max_est;
  if (c == "kappa") return r.kappa;
  if (c == "theta") return r.theta;
  if (c == "d_tilde_norm") return r.d_tilde_norm;
  if (c == "d_hi_norm") return r.d_hi_norm;
  if (c == "W_eps") return r.W_eps;
  if (c == "level") return static_cast<double>(r.level);
  if (c == "samples_used") return static_cast<double>(r.samples_used);
  if (c == "wall_ms") return r.wall_ms;
  throw InvalidArgument("unknown column '" + std::string(c) + "'");
}

double quantile_sorted(const std::vector<double>& v, double prob) {
  if (v.empty()) throw InvalidArgument("quantile of an empty set");
  const double h = (static_cast<double>(v.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

std::optional<Quantiles> aggregate_quantiles(const TrialSet& ts, std::string_view column, long iter) {
  if (ts.included() == 0) throw InvalidArgument("aggregate_quantiles: no included trials");
  std::vector<double> vals;
  for (std::size_t t = 0; t < ts.records.size(); ++t) {
    if (ts.excluded[t]) continue;
    const auto& rows = ts.records[t].rows;
    if (iter < 0 || static_cast<std::size_t>(iter) >= rows.size()) continue;
    if (auto v = column_value(rows[static_cast<std::size_t>(iter)], column)) vals.push_back(*v);
  }
  if (vals.empty()) return std::nullopt;
  std::sort(vals.begin(), vals.end());
  return Quantiles{quantile_sorted(vals, 0.25), quantile_sorted(vals, 0.5), quantile_sorted(vals, 0.75)};
}

}  // namespace ghostsa
