#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ghostsa/config.hpp"

namespace ghostsa {

struct TrialSet {
  std::vector<RunRecord> records;
  std::vector<std::uint64_t> seeds;
  std::vector<bool> excluded;  // aborted trials
  RunConfig config;

  std::size_t included() const;
};

/// Seed of trial t: a counter-based derivation from the base seed.
inline std::uint64_t trial_seed(std::uint64_t base, std::size_t t) { return derive_seed(base, t); }

/// Runs cfg.trials independent trials on `workers` threads (cfg.workers when
/// 0). Results do not depend on the worker count.
TrialSet run_trials(const RunConfig& cfg, int workers = 0);

/// Columns of trials.csv after the leading `trial` column.
inline constexpr std::array<std::string_view, 12> kRowColumns{
    "iter", "gamma", "obj_est", "cons_max_est", "kappa", "theta",
    "d_tilde_norm", "d_hi_norm", "W_eps", "level", "samples_used", "wall_ms"};

/// Numeric value of a named column; nullopt when the row has no value for it.
std::optional<double> column_value(const RunRow& row, std::string_view column);

struct Quantiles {
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
};

/// Type-7 quantile of already sorted values.
double quantile_sorted(const std::vector<double>& sorted, double prob);

/// Linear-interpolation quartiles over non-excluded trials at row `iter`.
/// nullopt when no included trial has a value there; throws InvalidArgument
/// when no trial is included.
std::optional<Quantiles> aggregate_quantiles(const TrialSet& ts, std::string_view column, long iter);

}  // namespace ghostsa
