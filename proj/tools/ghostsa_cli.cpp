// ghostsa command line: run experiments, invariant suites and the estimator
// sweep. Everything except the worker count and output location lives in the
// config file.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ghostsa/checks.hpp"
#include "ghostsa/config.hpp"
#include "ghostsa/mlmc.hpp"
#include "ghostsa/output.hpp"
#include "ghostsa/trials.hpp"

using namespace ghostsa;

namespace {

struct Overrides {
  std::optional<int> workers;
  std::optional<std::string> output;
};

RunConfig load_with(const std::string& path, const Overrides& o) {
  RunConfig cfg = load_config(path);
  if (o.workers) cfg.workers = *o.workers;
  if (o.output) cfg.output_dir = *o.output;
  cfg.validate();
  return cfg;
}

int cmd_run(const std::string& path, const Overrides& o) {
  const RunConfig cfg = load_with(path, o);
  const auto dir = resolve_output_dir(cfg.output_dir);
  // Fail on an unusable output directory before spending time on trials.
  std::filesystem::create_directories(dir);
  std::cout << "running " << cfg.trials << " trial(s) of " << build_problem(cfg)->name() << " for "
            << cfg.driver.iterations << " iterations on " << cfg.workers << " worker(s)\n";
  const TrialSet ts = run_trials(cfg);
  for (std::size_t t = 0; t < ts.records.size(); ++t) {
    if (ts.excluded[t])
      std::cout << "excluded trial " << t << " (seed " << ts.seeds[t] << "): " << ts.records[t].abort_reason << "\n";
  }
  if (ts.included() == 0) {
    std::cerr << "error: every trial aborted; nothing to aggregate\n";
    return 1;
  }
  for (const auto& p : emit_outputs(ts, dir)) std::cout << "wrote " << p.string() << "\n";
  const long last = cfg.driver.iterations;
  for (std::string_view c : {"obj_est", "cons_max_est", "d_hi_norm", "W_eps"}) {
    if (const auto q = aggregate_quantiles(ts, c, last))
      std::printf("final %-13s median %.6g  IQR [%.6g, %.6g]\n", std::string(c).c_str(), q->median, q->q25, q->q75);
  }
  return 0;
}

int cmd_check(const std::string& suite, std::uint64_t seed) {
  std::vector<std::string_view> suites;
  if (suite == "all") {
    suites.assign(std::begin(kCheckSuites), std::end(kCheckSuites));
  } else {
    suites.push_back(suite);
  }
  bool ok = true;
  for (std::string_view s : suites) {
    for (const CheckResult& r : run_check_suite(s, seed)) {
      std::cout << (r.passed ? "PASS " : "FAIL ") << s << "/" << r.name << ": " << r.detail << "\n";
      ok = ok && r.passed;
    }
  }
  return ok ? 0 : 1;
}

int cmd_bench(const std::string& path, const Overrides& o) {
  const RunConfig cfg = load_with(path, o);
  const auto problem = build_problem(cfg);
  Rng init(derive_seed(cfg.seed, 0));
  const Vector x = cfg.x1 ? *cfg.x1 : problem->initial_point(init);
  const GhostConfig& ghost = cfg.driver.ghost;

  // Reference direction: exact expectations when available, otherwise a
  // large-sample average on its own stream.
  Rng ref_rng(derive_seed(cfg.seed, 1));
  const HighFidelity hf = high_fidelity_direction(*problem, x, cfg.driver.hi_samples, ghost, ref_rng);
  const Vector ref = hf.exact ? hf.exact->d : hf.sampled.d;
  std::cout << "reference direction from " << (hf.exact ? "exact expectations" : "high-fidelity SAA") << "\n";

  const EstimatorMoments naive = sample_moments(cfg.bench_draws, derive_seed(cfg.seed, 2), cfg.workers,
                                                [&](Rng& rng, double& work) {
                                                  work = 1.0;
                                                  return naive_direction(*problem, x, ghost, rng).d;
                                                });

  std::ostringstream csv;
  csv << "estimator,p_geo,draws,bias_inf,max_abs_z,cov_trace,work_mean,work_series,capped_redraws\n";
  auto row = [&](const std::string& name, double p, const EstimatorMoments& m, double series) {
    const Vector bias = m.mean - ref;
    const double z = bias.cwiseQuotient(m.std_error()).cwiseAbs().maxCoeff();
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", name.c_str(), p, m.draws,
                  bias.lpNorm<Eigen::Infinity>(), z, m.cov_trace, m.work_mean, series, m.capped_redraws);
    csv << buf;
    std::printf("%-6s p=%-5.2f bias_inf %.3e  |z| %6.2f  cov_trace %.3e  work %.2f\n", name.c_str(), p,
                bias.lpNorm<Eigen::Infinity>(), z, m.cov_trace, m.work_mean);
  };
  row("naive", 1.0, naive, 1.0);

  const int cap = cfg.driver.estimator.level_cap;
  for (double p : {0.05, 0.1, 0.2, 0.4, 0.7, 0.9}) {
    if (p <= 0.5)
      std::cerr << "warning: p_geo = " << p << " has unbounded expected work without the level cap; figures depend on "
                << "level_cap = " << cap << "\n";
    // Small p makes each draw expensive, so the draw count follows the budget.
    const double series = expected_work(p, cap);
    const auto affordable = static_cast<std::size_t>(cfg.bench_sample_budget / series);
    const std::size_t draws = std::max<std::size_t>(2, std::min(cfg.bench_draws, affordable));
    if (draws < cfg.bench_draws)
      std::cerr << "warning: p_geo = " << p << " limited to " << draws << " draws by bench.sample_budget\n";
    const EstimatorMoments m =
        estimator_moments(*problem, x, ghost, p, draws, derive_seed(cfg.seed, 3), cfg.workers, cfg.driver.estimator);
    row("mlmc", p, m, series);
  }

  const auto dir = resolve_output_dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "bench.csv", std::ios::binary);
  out << csv.str();
  if (!out) throw std::runtime_error("cannot write " + (dir / "bench.csv").string());
  std::cout << "wrote " << (dir / "bench.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ghostsa: ghost-relaxed stochastic approximation with a debiased direction estimator"};
  app.require_subcommand(1);

  std::string config_path, suite = "all";
  std::uint64_t check_seed = 1;
  Overrides o;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option_function<int>("--workers", [&](int w) { o.workers = w; }, "worker threads (overrides run.workers)");
    sub->add_option_function<std::string>("--output", [&](const std::string& d) { o.output = d; },
                                          "output directory (overrides run.output_dir)");
  };

  auto* run = app.add_subcommand("run", "run the configured experiment and write trials, summary and charts");
  run->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  add_overrides(run);

  auto* check = app.add_subcommand("check", "run an invariant suite");
  check->add_option("--suite", suite, "kernel, estimator, gradients or all")
      ->check(CLI::IsMember({"kernel", "estimator", "gradients", "all"}));
  check->add_option("--seed", check_seed, "seed for the randomized cases");

  auto* bench = app.add_subcommand("bench-estimator", "bias, variance and work of the estimator across p_geo");
  bench->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  add_overrides(bench);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, o);
    if (*check) return cmd_check(suite, check_seed);
    if (*bench) return cmd_bench(config_path, o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
