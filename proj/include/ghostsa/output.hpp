#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ghostsa/trials.hpp"

namespace ghostsa {

/// Exact header of trials.csv.
inline constexpr std::string_view kTrialsHeader =
    "trial,iter,gamma,obj_est,cons_max_est,kappa,theta,d_tilde_norm,d_hi_norm,W_eps,level,samples_used,wall_ms";

/// Columns that get a chart.
inline constexpr std::array<std::string_view, 7> kPlotColumns{"obj_est", "cons_max_est", "kappa", "theta",
                                                              "d_tilde_norm", "d_hi_norm", "W_eps"};

/// Environment variable naming the root for relative output directories.
inline constexpr const char* kOutputRootEnv = "GHOSTSA_OUTPUT_ROOT";

std::filesystem::path resolve_output_dir(const std::string& dir);

std::string trials_csv(const TrialSet& ts);
std::string summary_csv(const TrialSet& ts);

/// Median line with q25/q75 lines and a shaded band between them.
std::string quantile_chart_svg(const TrialSet& ts, std::string_view column, bool log_scale);

/// Writes trials.csv, summary.csv, excluded_trials.csv, one SVG chart per
/// monitored column and config.resolved.ini into `dir`. Returns the paths
/// written, in order. Throws InvalidArgument for an empty TrialSet and
/// std::runtime_error when the directory is not writable.
std::vector<std::filesystem::path> emit_outputs(const TrialSet& ts, const std::filesystem::path& dir);

}  // namespace ghostsa
