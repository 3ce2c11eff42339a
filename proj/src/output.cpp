#include "ghostsa/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ghostsa {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string cell(std::optional<double> v) { return v ? num(*v) : std::string(); }

long row_span(const TrialSet& ts) {
  std::size_t rows = 0;
  for (std::size_t t = 0; t < ts.records.size(); ++t)
    if (!ts.excluded[t]) rows = std::max(rows, ts.records[t].rows.size());
  return static_cast<long>(rows);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::filesystem::path resolve_output_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) return std::filesystem::path(root) / p;
  }
  return p;
}

std::string trials_csv(const TrialSet& ts) {
  std::ostringstream os;
  os << kTrialsHeader << "\n";
  for (std::size_t t = 0; t < ts.records.size(); ++t) {
    if (ts.excluded[t]) continue;
    for (const RunRow& r : ts.records[t].rows) {
      os << t;
      for (std::string_view c : kRowColumns) {
        os << ",";
        if (c == "iter" || c == "level" || c == "samples_used") {
          os << static_cast<long long>(*column_value(r, c));
        } else {
          os << cell(column_value(r, c));
        }
      }
      os << "\n";
    }
  }
  return os.str();
}

std::string summary_csv(const TrialSet& ts) {
  std::ostringstream os;
  os << "iter";
  for (std::string_view c : kRowColumns) {
    if (c == "iter") continue;
    os << "," << c << "_q25," << c << "_median," << c << "_q75";
  }
  os << "\n";
  const long rows = row_span(ts);
  for (long i = 0; i < rows; ++i) {
    os << i;
    for (std::string_view c : kRowColumns) {
      if (c == "iter") continue;
      const auto q = aggregate_quantiles(ts, c, i);
      if (q) {
        os << "," << num(q->q25) << "," << num(q->median) << "," << num(q->q75);
      } else {
        os << ",,,";
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string quantile_chart_svg(const TrialSet& ts, std::string_view column, bool log_scale) {
  struct Point {
    double x, lo, mid, hi;
  };
  std::vector<Point> pts;
  const long rows = row_span(ts);
  for (long i = 0; i < rows; ++i) {
    if (auto q = aggregate_quantiles(ts, column, i)) pts.push_back({static_cast<double>(i), q->q25, q->median, q->q75});
  }
  if (log_scale) {
    log_scale = !pts.empty() && std::all_of(pts.begin(), pts.end(), [](const Point& p) { return p.lo > 0.0; });
    if (log_scale) {
      for (auto& p : pts) {
        p.lo = std::log10(p.lo);
        p.mid = std::log10(p.mid);
        p.hi = std::log10(p.hi);
      }
    }
  }

  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!pts.empty()) {
    xmin = pts.front().x;
    xmax = std::max(pts.back().x, xmin + 1.0);
    ymin = pts.front().lo;
    ymax = pts.front().hi;
    for (const auto& p : pts) {
      ymin = std::min({ymin, p.lo, p.mid});
      ymax = std::max({ymax, p.hi, p.mid});
    }
    if (ymax - ymin < 1e-12) {
      ymin -= 0.5;
      ymax += 0.5;
    }
  }
  auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  auto coord = [&](double x, double y) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f,%.2f", sx(x), sy(y));
    return std::string(buf);
  };
  auto polyline = [&](const char* series, const char* color, double Point::*field, const char* dash) {
    std::string s = "<polyline data-series=\"" + std::string(series) + "\" fill=\"none\" stroke=\"" + color +
                    "\" stroke-width=\"1.5\"" + (dash ? std::string(" stroke-dasharray=\"") + dash + "\"" : "") +
                    " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? " " : "") + coord(pts[i].x, pts[i].*field);
    return s + "\"/>\n";
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << column << (log_scale ? " (log10)" : "") << ": median and interquartile range</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  auto label = [&](double x, double y, const std::string& text, const char* anchor) {
    os << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << text << "</text>\n";
  };
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", ymin);
  label(L - 6, H - B, buf, "end");
  std::snprintf(buf, sizeof buf, "%.4g", ymax);
  label(L - 6, T + 4, buf, "end");
  label(L, H - B + 16, num(xmin), "middle");
  label(W - R, H - B + 16, num(xmax), "middle");
  label((L + W - R) / 2, H - 12, "iteration", "middle");

  if (!pts.empty()) {
    os << "<polygon data-series=\"iqr\" fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? " " : "") << coord(pts[i].x, pts[i].hi);
    for (std::size_t i = pts.size(); i-- > 0;) os << " " << coord(pts[i].x, pts[i].lo);
    os << "\"/>\n";
  }
  os << polyline("q25", "#1f77b4", &Point::lo, "4,3");
  os << polyline("q75", "#1f77b4", &Point::hi, "4,3");
  os << polyline("median", "#d62728", &Point::mid, nullptr);
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> emit_outputs(const TrialSet& ts, const std::filesystem::path& dir) {
  if (ts.records.empty() || ts.included() == 0) throw InvalidArgument("emit_outputs: empty trial set");
  std::error_code ec;
  std::filesystem::create_directories(dir / "plots", ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> manifest;
  auto emit = [&](const std::filesystem::path& p, const std::string& content) {
    write_file(p, content);
    manifest.push_back(p);
  };
  emit(dir / "trials.csv", trials_csv(ts));
  emit(dir / "summary.csv", summary_csv(ts));

  std::ostringstream ex;
  ex << "trial,seed,reason\n";
  for (std::size_t t = 0; t < ts.records.size(); ++t) {
    if (!ts.excluded[t]) continue;
    std::string reason = ts.records[t].abort_reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    ex << t << "," << ts.seeds[t] << "," << reason << "\n";
  }
  emit(dir / "excluded_trials.csv", ex.str());

  for (std::string_view c : kPlotColumns) {
    const bool log_scale = std::find(ts.config.log_columns.begin(), ts.config.log_columns.end(), c) !=
                           ts.config.log_columns.end();
    emit(dir / "plots" / (std::string(c) + ".svg"), quantile_chart_svg(ts, c, log_scale));
  }
  emit(dir / "config.resolved.ini", to_text(ts.config));
  return manifest;
}

}  // namespace ghostsa
