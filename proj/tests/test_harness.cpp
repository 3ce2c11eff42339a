#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "ghostsa/config.hpp"
#include "ghostsa/output.hpp"
#include "ghostsa/trials.hpp"

using namespace ghostsa;

namespace {

const std::string kMinimal = "[problem]\nkind = circle_toy\n[run]\niterations = 10\n";

RunConfig small_circle(int trials, long iterations) {
  RunConfig cfg = parse_config(kMinimal);
  cfg.trials = trials;
  cfg.driver.iterations = iterations;
  cfg.driver.diag_cadence = 20;
  cfg.driver.hi_samples = 64;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Sort-based quantile computed from scratch: position (n - 1) q between
// neighbouring order statistics.
double brute_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const double lo = std::floor(pos), hi = std::ceil(pos);
  const double a = v[static_cast<std::size_t>(lo)], b = v[static_cast<std::size_t>(hi)];
  return a + (pos - lo) * (b - a);
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ghostsa_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("omitted optional keys take the documented defaults") {
  const RunConfig cfg = parse_config(kMinimal);
  CHECK(cfg.driver.ghost.tau == 1.0);
  CHECK(cfg.driver.ghost.beta == 10.0);
  CHECK(cfg.driver.ghost.rho == 0.8);
  CHECK(cfg.driver.ghost.lambda == 0.5);
  CHECK(cfg.trials == 21);
  CHECK(cfg.driver.iterations == 10);
  CHECK_FALSE(cfg.network);
}

TEST_CASE("configuration errors name the key or the invariant") {
  CHECK_THROWS_WITH_AS(parse_config(kMinimal + "[ghost]\nrho = 12\nbeta = 10\n"), doctest::Contains("0 < rho < beta"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(kMinimal + "[ghost]\nmomentum = 1\n"), doctest::Contains("ghost.momentum"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[run]\niterations = 10\n"), doctest::Contains("problem.kind"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[problem]\nkind = circle_toy\n"), doctest::Contains("run.iterations"),
                       ConfigError);
  CHECK_THROWS_AS(parse_config(kMinimal + "[run]\ntrials = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[problem]\nkind = network\n[run]\niterations = 1\n[network]\nexperiment = validation\n"),
                  ConfigError);
}

TEST_CASE("resolved text parses back to the same configuration") {
  RunConfig cfg = parse_config(kMinimal + "[ghost]\nlambda = 0.25\n[schedule]\nkind = incremental\n"
                                          "[run]\np_geo = 0.9\nx1 = 0.5,-1.25\n[plot]\nlog_columns = obj_est,W_eps\n");
  const std::string text = to_text(cfg);
  CHECK(to_text(parse_config(text)) == text);
  const RunConfig back = parse_config(text);
  CHECK(back.driver.ghost.lambda == 0.25);
  CHECK(back.driver.schedule.kind == ScheduleKind::incremental);
  CHECK(back.driver.p_geo == 0.9);
  REQUIRE(back.x1);
  CHECK((*back.x1)(1) == -1.25);
  CHECK(back.log_columns == std::vector<std::string>{"obj_est", "W_eps"});
}

TEST_CASE("type-7 quantiles") {
  CHECK(quantile_sorted({1.0, 2.0, 3.0}, 0.25) == 1.5);
  CHECK(quantile_sorted({1.0, 2.0, 3.0}, 0.5) == 2.0);
  CHECK(quantile_sorted({1.0, 2.0, 3.0}, 0.75) == 2.5);
  CHECK(quantile_sorted({4.0}, 0.25) == 4.0);
  CHECK_THROWS_AS(quantile_sorted({}, 0.5), InvalidArgument);

  std::mt19937_64 gen(99);
  std::normal_distribution<double> N(0.0, 3.0);
  std::vector<double> v(100);
  for (double& x : v) x = N(gen);
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (double q : {0.25, 0.5, 0.75, 0.1, 0.9}) CHECK(std::abs(quantile_sorted(sorted, q) - brute_quantile(v, q)) <= 1e-12);
}

TEST_CASE("single trial quantiles collapse to the value") {
  const TrialSet ts = run_trials(small_circle(1, 30));
  for (long i = 0; i <= 30; i += 10) {
    const auto q = aggregate_quantiles(ts, "W_eps", i);
    REQUIRE(q);
    const double v = ts.records[0].rows[static_cast<std::size_t>(i)].W_eps;
    CHECK(q->q25 == v);
    CHECK(q->median == v);
    CHECK(q->q75 == v);
  }
}

TEST_CASE("trials are reproducible and independent of the worker count") {
  const RunConfig cfg = small_circle(1, 60);
  CHECK(trials_csv(run_trials(cfg)) == trials_csv(run_trials(cfg)));

  const RunConfig three = small_circle(3, 60);
  const TrialSet serial = run_trials(three, 1), parallel = run_trials(three, 4);
  CHECK(trials_csv(serial) == trials_csv(parallel));
  CHECK(summary_csv(serial) == summary_csv(parallel));
  CHECK(serial.seeds == parallel.seeds);
  CHECK(serial.seeds[0] != serial.seeds[1]);
}

TEST_CASE("21 circle-toy trials keep the quartiles ordered") {
  const TrialSet ts = run_trials(small_circle(21, 200));
  for (long i = 0; i <= 200; ++i) {
    for (std::string_view c : {"obj_est", "cons_max_est", "W_eps", "d_tilde_norm"}) {
      const auto q = aggregate_quantiles(ts, c, i);
      REQUIRE(q);
      CHECK(q->q25 <= q->median);
      CHECK(q->median <= q->q75);
    }
  }
}

TEST_CASE("excluded trials never enter a quantile") {
  TrialSet ts = run_trials(small_circle(3, 20));
  ts.records[1].rows[5].W_eps = 1e9;
  ts.excluded[1] = true;
  const auto q = aggregate_quantiles(ts, "W_eps", 5);
  REQUIRE(q);
  CHECK(q->q75 < 1e9);
  CHECK(trials_csv(ts).find("\n1,") == std::string::npos);

  ts.excluded.assign(3, true);
  CHECK_THROWS_AS(aggregate_quantiles(ts, "W_eps", 5), InvalidArgument);
  CHECK_THROWS_AS(emit_outputs(ts, scratch_dir("empty")), InvalidArgument);
  CHECK_THROWS_AS(emit_outputs(TrialSet{}, scratch_dir("empty")), InvalidArgument);
}

TEST_CASE("emitted files: header, charts, config echo and recomputable summary") {
  const TrialSet ts = run_trials(small_circle(5, 40));
  const auto dir = scratch_dir("emit");
  const auto manifest = emit_outputs(ts, dir);
  CHECK(manifest.size() == 4 + kPlotColumns.size());

  const std::string trials = slurp(dir / "trials.csv");
  CHECK(trials.substr(0, trials.find('\n')) ==
        "trial,iter,gamma,obj_est,cons_max_est,kappa,theta,d_tilde_norm,d_hi_norm,W_eps,level,samples_used,wall_ms");

  for (std::string_view c : kPlotColumns) {
    const std::string svg = slurp(dir / "plots" / (std::string(c) + ".svg"));
    for (const char* series : {"data-series=\"median\"", "data-series=\"q25\"", "data-series=\"q75\""})
      CHECK(svg.find(series) != std::string::npos);
  }
  CHECK(parse_config(slurp(dir / "config.resolved.ini")).trials == 5);

  // Rebuild the quartiles from trials.csv alone and compare with summary.csv.
  std::istringstream tin(trials);
  std::string line;
  std::getline(tin, line);
  const auto header = split(line);
  std::map<std::pair<long, std::string>, std::vector<double>> values;
  while (std::getline(tin, line)) {
    const auto cells = split(line);
    REQUIRE(cells.size() == header.size());
    const long iter = std::stol(cells[1]);
    for (std::size_t k = 2; k < cells.size(); ++k)
      if (!cells[k].empty()) values[{iter, header[k]}].push_back(std::stod(cells[k]));
  }

  std::istringstream sin(slurp(dir / "summary.csv"));
  std::getline(sin, line);
  const auto sheader = split(line);
  std::size_t checked = 0;
  while (std::getline(sin, line)) {
    const auto cells = split(line);
    const long iter = std::stol(cells[0]);
    for (std::size_t k = 1; k < cells.size(); ++k) {
      const std::string& name = sheader[k];
      const auto cut = name.rfind('_');
      const std::string column = name.substr(0, cut), which = name.substr(cut + 1);
      const auto it = values.find({iter, column});
      if (it == values.end()) {
        CHECK(cells[k].empty());
        continue;
      }
      const double q = which == "q25" ? 0.25 : which == "median" ? 0.5 : 0.75;
      CHECK(std::abs(std::stod(cells[k]) - brute_quantile(it->second, q)) <= 1e-12 * std::max(1.0, std::abs(std::stod(cells[k]))));
      ++checked;
    }
  }
  CHECK(checked > 41 * 30);
}

TEST_CASE("relative output directories honour the root variable") {
  ::setenv(kOutputRootEnv, "/tmp/ghostsa_root", 1);
  CHECK(resolve_output_dir("runs/a") == std::filesystem::path("/tmp/ghostsa_root/runs/a"));
  CHECK(resolve_output_dir("/abs/b") == std::filesystem::path("/abs/b"));
  ::unsetenv(kOutputRootEnv);
  CHECK(resolve_output_dir("runs/a") == std::filesystem::path("runs/a"));
}

TEST_CASE("an unwritable directory is an I/O error") {
  const TrialSet ts = run_trials(small_circle(1, 5));
  const auto blocker = scratch_dir("blocker");
  std::ofstream(blocker) << "file";
  CHECK_THROWS_AS(emit_outputs(ts, blocker / "sub"), std::runtime_error);
  std::filesystem::remove(blocker);
}
