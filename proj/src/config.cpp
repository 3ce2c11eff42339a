#include "ghostsa/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace ghostsa {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Consumes keys from the parsed table; whatever is left over is unknown.
class Table {
 public:
  explicit Table(const std::string& text) {
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
        section = trim(std::string_view(t).substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      }
      const std::string key = (section.empty() ? "" : section + ".") + trim(std::string_view(t).substr(0, eq));
      if (values_.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
      values_[key] = trim(std::string_view(t).substr(eq + 1));
    }
  }

  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    std::string v = it->second;
    values_.erase(it);
    return v;
  }

  std::string required(const std::string& key) {
    auto v = take(key);
    if (!v || v->empty()) throw ConfigError("config: missing required key '" + key + "'");
    return *v;
  }

  double number(const std::string& key, double def) {
    auto v = take(key);
    return v ? to_double(key, *v) : def;
  }

  template <class Int>
  Int integer(const std::string& key, Int def) {
    auto v = take(key);
    return v ? to_int<Int>(key, *v) : def;
  }

  bool boolean(const std::string& key, bool def) {
    auto v = take(key);
    if (!v) return def;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw ConfigError("config: key '" + key + "' expects true|false, got '" + *v + "'");
  }

  std::string string(const std::string& key, const std::string& def) { return take(key).value_or(def); }

  void reject_unknown() const {
    if (!values_.empty()) throw ConfigError("config: unknown key '" + values_.begin()->first + "'");
  }

  static double to_double(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }

  template <class Int>
  static Int to_int(const std::string& key, const std::string& v) {
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace

void RunConfig::validate() const {
  if (trials < 1) throw ConfigError("config: invariant trials >= 1 violated");
  if (workers < 1) throw ConfigError("config: invariant workers >= 1 violated");
  if (bench_draws < 2) throw ConfigError("config: invariant bench.draws >= 2 violated");
  if (!(bench_sample_budget > 0.0)) throw ConfigError("config: invariant bench.sample_budget > 0 violated");
  driver.validate();
  if (network) {
    net.validate();
    if (static_cast<int>(data.targets.size()) < net.heads) {
      throw ConfigError("config: data.targets needs one entry per network head");
    }
  } else if (x1 && x1->size() != (synthetic.kind == SyntheticKind::quadratic_affine ? synthetic.n : 2)) {
    throw ConfigError("config: run.x1 has the wrong dimension");
  }
}

RunConfig parse_config(const std::string& text) {
  Table t(text);
  RunConfig cfg;

  const std::string kind = t.required("problem.kind");
  cfg.network = kind == "network";
  if (!cfg.network) cfg.synthetic.kind = parse_synthetic_kind(kind);
  cfg.synthetic.n = t.integer("problem.n", cfg.synthetic.n);
  cfg.synthetic.m = t.integer("problem.m", cfg.synthetic.m);
  cfg.synthetic.noise = t.number("problem.noise", cfg.synthetic.noise);
  cfg.synthetic.slack = t.number("problem.slack", cfg.synthetic.slack);
  cfg.synthetic.seed = t.integer<std::uint64_t>("problem.instance_seed", cfg.synthetic.seed);

  NetSpec& net = cfg.net;
  net.experiment = parse_experiment(t.string("network.experiment", std::string(to_string(net.experiment))));
  net.heads = net.experiment == Experiment::multitask ? 2 : 1;
  net.input_dim = t.integer("network.input_dim", net.input_dim);
  net.hidden = t.integer("network.hidden", net.hidden);
  net.a_w = t.number("network.a_w", net.a_w);
  net.a_b = t.number("network.a_b", net.a_b);
  net.c_level = t.number("network.c_level", net.c_level);
  if (auto th = t.take("network.threshold"); th && !th->empty()) net.threshold = Table::to_double("network.threshold", *th);
  net.loss = parse_loss_mode(t.string("network.loss", std::string(to_string(net.loss))));
  net.init_scale = t.number("network.init_scale", net.init_scale);

  DataConfig& data = cfg.data;
  const std::string source = t.string("data.source", "blobs");
  if (source == "blobs") {
    data.source = DataSource::blobs;
  } else if (source == "idx") {
    data.source = DataSource::idx;
  } else {
    throw ConfigError("config: data.source must be blobs|idx, got '" + source + "'");
  }
  data.images = t.string("data.images", data.images);
  data.labels = t.string("data.labels", data.labels);
  data.rows = t.integer<std::size_t>("data.rows", data.rows);
  data.classes = t.integer("data.classes", data.classes);
  if (auto tg = t.take("data.targets")) {
    data.targets.clear();
    for (const auto& s : split_list(*tg)) data.targets.push_back(Table::to_int<int>("data.targets", s));
  } else if (net.heads == 2) {
    data.targets = {0, 1};
  }
  data.spread = t.number("data.spread", data.spread);
  data.validation_fraction = t.number("data.validation_fraction", data.validation_fraction);
  data.seed = t.integer<std::uint64_t>("data.seed", data.seed);
  if (cfg.network && data.source == DataSource::idx && data.images.empty()) {
    throw ConfigError("config: missing required key 'data.images'");
  }

  DriverConfig& d = cfg.driver;
  d.ghost.tau = t.number("ghost.tau", d.ghost.tau);
  d.ghost.beta = t.number("ghost.beta", d.ghost.beta);
  d.ghost.rho = t.number("ghost.rho", d.ghost.rho);
  d.ghost.lambda = t.number("ghost.lambda", d.ghost.lambda);

  d.schedule.kind = parse_schedule_kind(t.string("schedule.kind", std::string(to_string(d.schedule.kind))));
  d.schedule.gamma1 = t.number("schedule.gamma1", d.schedule.gamma1);
  d.schedule.zeta = t.number("schedule.zeta", d.schedule.zeta);

  d.iterations = Table::to_int<long>("run.iterations", t.required("run.iterations"));
  d.p_geo = t.number("run.p_geo", d.p_geo);
  cfg.trials = t.integer("run.trials", cfg.trials);
  cfg.seed = t.integer<std::uint64_t>("run.seed", cfg.seed);
  d.eps = t.number("run.eps_diag", d.eps);
  d.diag_cadence = t.integer("run.diag_cadence", d.diag_cadence);
  d.hi_samples = t.integer<std::size_t>("run.hi_samples", d.hi_samples);
  d.monitor_samples = t.integer<std::size_t>("run.monitor_samples", d.monitor_samples);
  d.snapshot_every = t.integer("run.snapshot_every", d.snapshot_every);
  d.max_retries = t.integer("run.max_retries", d.max_retries);
  d.iterate_guard = t.number("run.iterate_guard", d.iterate_guard);
  d.record_timing = t.boolean("run.record_timing", d.record_timing);
  d.estimator.level_cap = t.integer("run.level_cap", d.estimator.level_cap);
  d.estimator.kernel.tol = t.number("run.kernel_tol", d.estimator.kernel.tol);
  d.estimator.kernel.max_iter = t.integer("run.kernel_max_iter", d.estimator.kernel.max_iter);
  cfg.workers = t.integer("run.workers", cfg.workers);
  cfg.output_dir = t.string("run.output_dir", cfg.output_dir);
  if (auto x1 = t.take("run.x1"); x1 && !x1->empty()) {
    const auto parts = split_list(*x1);
    Vector v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = Table::to_double("run.x1", parts[i]);
    cfg.x1 = v;
  }
  if (auto lc = t.take("plot.log_columns")) cfg.log_columns = split_list(*lc);
  cfg.bench_draws = t.integer<std::size_t>("bench.draws", cfg.bench_draws);
  cfg.bench_sample_budget = t.number("bench.sample_budget", cfg.bench_sample_budget);

  t.reject_unknown();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const RunConfig& cfg) {
  std::ostringstream os;
  auto list = [](const auto& items) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) s += ",";
      if constexpr (std::is_same_v<std::decay_t<decltype(items[i])>, std::string>) {
        s += items[i];
      } else {
        s += std::to_string(items[i]);
      }
    }
    return s;
  };
  const auto& d = cfg.driver;
  os << "[problem]\n"
     << "kind = " << (cfg.network ? std::string("network") : std::string(to_string(cfg.synthetic.kind))) << "\n"
     << "n = " << cfg.synthetic.n << "\n"
     << "m = " << cfg.synthetic.m << "\n"
     << "noise = " << fmt_double(cfg.synthetic.noise) << "\n"
     << "slack = " << fmt_double(cfg.synthetic.slack) << "\n"
     << "instance_seed = " << cfg.synthetic.seed << "\n\n";
  os << "[network]\n"
     << "experiment = " << to_string(cfg.net.experiment) << "\n"
     << "input_dim = " << cfg.net.input_dim << "\n"
     << "hidden = " << cfg.net.hidden << "\n"
     << "a_w = " << fmt_double(cfg.net.a_w) << "\n"
     << "a_b = " << fmt_double(cfg.net.a_b) << "\n"
     << "c_level = " << fmt_double(cfg.net.c_level) << "\n"
     << "threshold = " << (cfg.net.threshold ? fmt_double(*cfg.net.threshold) : std::string()) << "\n"
     << "loss = " << to_string(cfg.net.loss) << "\n"
     << "init_scale = " << fmt_double(cfg.net.init_scale) << "\n\n";
  os << "[data]\n"
     << "source = " << (cfg.data.source == DataSource::blobs ? "blobs" : "idx") << "\n"
     << "images = " << cfg.data.images << "\n"
     << "labels = " << cfg.data.labels << "\n"
     << "rows = " << cfg.data.rows << "\n"
     << "classes = " << cfg.data.classes << "\n"
     << "targets = " << list(cfg.data.targets) << "\n"
     << "spread = " << fmt_double(cfg.data.spread) << "\n"
     << "validation_fraction = " << fmt_double(cfg.data.validation_fraction) << "\n"
     << "seed = " << cfg.data.seed << "\n\n";
  os << "[ghost]\n"
     << "tau = " << fmt_double(d.ghost.tau) << "\n"
     << "beta = " << fmt_double(d.ghost.beta) << "\n"
     << "rho = " << fmt_double(d.ghost.rho) << "\n"
     << "lambda = " << fmt_double(d.ghost.lambda) << "\n\n";
  os << "[schedule]\n"
     << "kind = " << to_string(d.schedule.kind) << "\n"
     << "gamma1 = " << fmt_double(d.schedule.gamma1) << "\n"
     << "zeta = " << fmt_double(d.schedule.zeta) << "\n\n";
  std::string x1;
  if (cfg.x1) {
    for (Eigen::Index i = 0; i < cfg.x1->size(); ++i) x1 += (i ? "," : "") + fmt_double((*cfg.x1)(i));
  }
  os << "[run]\n"
     << "iterations = " << d.iterations << "\n"
     << "p_geo = " << fmt_double(d.p_geo) << "\n"
     << "trials = " << cfg.trials << "\n"
     << "seed = " << cfg.seed << "\n"
     << "eps_diag = " << fmt_double(d.eps) << "\n"
     << "diag_cadence = " << d.diag_cadence << "\n"
     << "hi_samples = " << d.hi_samples << "\n"
     << "monitor_samples = " << d.monitor_samples << "\n"
     << "snapshot_every = " << d.snapshot_every << "\n"
     << "max_retries = " << d.max_retries << "\n"
     << "iterate_guard = " << fmt_double(d.iterate_guard) << "\n"
     << "record_timing = " << (d.record_timing ? "true" : "false") << "\n"
     << "level_cap = " << d.estimator.level_cap << "\n"
     << "kernel_tol = " << fmt_double(d.estimator.kernel.tol) << "\n"
     << "kernel_max_iter = " << d.estimator.kernel.max_iter << "\n"
     << "workers = " << cfg.workers << "\n"
     << "output_dir = " << cfg.output_dir << "\n"
     << "x1 = " << x1 << "\n\n";
  os << "[plot]\n"
     << "log_columns = " << list(cfg.log_columns) << "\n\n";
  os << "[bench]\n"
     << "draws = " << cfg.bench_draws << "\n"
     << "sample_budget = " << fmt_double(cfg.bench_sample_budget) << "\n";
  return os.str();
}

std::shared_ptr<const StochasticProblem> build_problem(const RunConfig& cfg) {
  if (!cfg.network) return make_problem(cfg.synthetic);

  std::shared_ptr<Dataset> data;
  if (cfg.data.source == DataSource::idx) {
    IdxLoadOptions opts;
    opts.input_dim = cfg.net.input_dim;
    opts.target_digits = cfg.data.targets;
    opts.validation_fraction = cfg.data.validation_fraction;
    opts.max_rows = cfg.data.rows;
    data = std::make_shared<Dataset>(load_idx(cfg.data.images, cfg.data.labels, opts));
  } else {
    BlobSpec b;
    b.rows = cfg.data.rows;
    b.input_dim = cfg.net.input_dim;
    b.classes = cfg.data.classes;
    b.target_classes = cfg.data.targets;
    b.spread = cfg.data.spread;
    b.validation_fraction = cfg.data.validation_fraction;
    b.seed = cfg.data.seed;
    data = std::make_shared<Dataset>(make_blob_dataset(b));
  }
  return make_problem(cfg.net, std::move(data));
}

}  // namespace ghostsa
