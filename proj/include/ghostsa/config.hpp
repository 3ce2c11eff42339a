#pragma once

// Run configuration: INI-style text with [section] headers and key = value
// lines. Unknown sections or keys are rejected; every optional value has a
// default and the resolved configuration can be written back out.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ghostsa/dataset.hpp"
#include "ghostsa/driver.hpp"
#include "ghostsa/network.hpp"
#include "ghostsa/synthetic.hpp"

namespace ghostsa {

enum class DataSource { blobs, idx };

struct DataConfig {
  DataSource source = DataSource::blobs;
  std::string images;
  std::string labels;
  std::size_t rows = 2000;
  int classes = 3;
  std::vector<int> targets{0};
  double spread = 0.15;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct RunConfig {
  bool network = false;
  SyntheticSpec synthetic;
  NetSpec net;
  DataConfig data;

  DriverConfig driver;
  int trials = 21;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output_dir = "out";
  std::optional<Vector> x1;
  std::vector<std::string> log_columns;
  std::size_t bench_draws = 1000;
  double bench_sample_budget = 2e7;  // caps draws per p_geo by expected work

  void validate() const;
};

/// Throws ConfigError naming the offending key or invariant.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Resolved configuration in the same format; parse_config(to_text(c))
/// reproduces c.
std::string to_text(const RunConfig& cfg);

/// Builds the problem (and its dataset, if any) described by the config.
std::shared_ptr<const StochasticProblem> build_problem(const RunConfig& cfg);

}  // namespace ghostsa
