#include "asdopt/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "asdopt/errors.hpp"

namespace asdopt {

namespace {

std::string optional_field(const std::optional<double>& x) {
  return x ? format_double(*x) : std::string();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double quantile7(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<HistoryRow> history_rows(const std::string& scenario,
                                     const RunResult& run, int replication) {
  std::vector<HistoryRow> rows;
  rows.reserve(run.history.size());
  const bool grid = run.method == Method::kGrid || run.method == Method::kGridSmall;
  for (const auto& rec : run.history) {
    HistoryRow row;
    row.scenario = scenario;
    row.method = std::string(to_string(run.method));
    row.replication = grid ? rec.replicate : replication;
    row.iteration = rec.iteration;
    row.strategy = std::string(to_string(rec.point.strategy));
    row.r = rec.point.r;
    row.eps = rec.point.eps;
    row.tau = rec.point.tau;
    row.n1 = rec.allocation.n_stage1;
    row.n2 = rec.allocation.n_stage2;
    row.k2_hat = rec.allocation.k2_hat;
    row.y = rec.y.value;
    row.seed = rec.seed;
    row.millis = rec.wall_ms;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_history(std::ostream& out, const std::vector<HistoryRow>& rows) {
  out << kHistoryHeader << '\n';
  for (const auto& row : rows) {
    out << row.scenario << ',' << row.method << ',' << row.replication << ','
        << row.iteration << ',' << row.strategy << ',' << format_double(row.r) << ','
        << optional_field(row.eps) << ',' << optional_field(row.tau) << ',' << row.n1
        << ',' << row.n2 << ',' << format_double(row.k2_hat) << ','
        << format_double(row.y) << ',' << row.seed << ',' << format_double(row.millis)
        << '\n';
  }
}

std::vector<HistoryRow> read_history(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHistoryHeader) {
    throw ConfigError("history line 1: unexpected header");
  }
  std::vector<HistoryRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 14) {
      throw ConfigError("history line " + std::to_string(line_no) + ": expected 14 fields");
    }
    try {
      HistoryRow row;
      row.scenario = f[0];
      row.method = f[1];
      row.replication = std::stoi(f[2]);
      row.iteration = std::stoi(f[3]);
      row.strategy = f[4];
      row.r = std::stod(f[5]);
      if (!f[6].empty()) row.eps = std::stod(f[6]);
      if (!f[7].empty()) row.tau = std::stod(f[7]);
      row.n1 = std::stoi(f[8]);
      row.n2 = std::stoi(f[9]);
      row.k2_hat = std::stod(f[10]);
      row.y = std::stod(f[11]);
      row.seed = std::stoull(f[12]);
      row.millis = std::stod(f[13]);
      rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw ConfigError("history line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

std::vector<CurvePoint> power_curves(const std::vector<HistoryRow>& rows) {
  // (scenario, method) -> strategy -> param -> r -> outcomes
  using ByR = std::map<double, std::vector<double>>;
  using ByParam = std::map<double, ByR>;
  std::map<std::pair<std::string, std::string>, std::map<std::string, ByParam>> groups;
  for (const auto& row : rows) {
    const double param = row.eps ? *row.eps : (row.tau ? *row.tau : 0.0);
    groups[{row.scenario, row.method}][row.strategy][param][row.r].push_back(row.y);
  }

  std::vector<CurvePoint> curves;
  for (const auto& [key, strategies] : groups) {
    for (const auto& [strategy, by_param] : strategies) {
      const bool has_param = strategy == "eps" || strategy == "thresh";
      // Slice whose curve reaches the highest mean; ties keep the smaller
      // parameter.
      const ByR* slice = nullptr;
      double slice_param = 0.0;
      double slice_best = -1.0;
      for (const auto& [param, by_r] : by_param) {
        for (const auto& [r, ys] : by_r) {
          const double m = mean_of(ys);
          if (m > slice_best) {
            slice_best = m;
            slice = &by_r;
            slice_param = param;
          }
        }
      }
      if (slice == nullptr) continue;
      for (const auto& [r, ys] : *slice) {
        CurvePoint p;
        p.scenario = key.first;
        p.method = key.second;
        p.strategy = strategy;
        if (has_param) p.param = slice_param;
        p.r = r;
        p.mean = mean_of(ys);
        double ss = 0.0;
        for (double y : ys) ss += (y - p.mean) * (y - p.mean);
        p.sd = ys.size() > 1 ? std::sqrt(ss / static_cast<double>(ys.size() - 1)) : 0.0;
        p.count = static_cast<int>(ys.size());
        curves.push_back(std::move(p));
      }
    }
  }
  return curves;
}

void write_curves(std::ostream& out, const std::vector<CurvePoint>& curves) {
  out << "scenario,method,strategy,param,r,mean_y,sd_y,n\n";
  for (const auto& p : curves) {
    out << p.scenario << ',' << p.method << ',' << p.strategy << ','
        << optional_field(p.param) << ',' << format_double(p.r) << ','
        << format_double(p.mean) << ',' << format_double(p.sd) << ',' << p.count << '\n';
  }
}

Quartiles summarize(std::vector<double> values) {
  Quartiles q;
  q.n = values.size();
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  q.min = values.front();
  q.max = values.back();
  q.q1 = quantile7(values, 0.25);
  q.median = quantile7(values, 0.5);
  q.q3 = quantile7(values, 0.75);
  q.mean = mean_of(values);
  return q;
}

std::vector<double> validated_samples(const std::vector<RunResult>& runs) {
  std::vector<double> out;
  for (const auto& run : runs) {
    if (run.method == Method::kGrid || run.method == Method::kGridSmall) {
      for (const auto& y : run.y_valid) out.push_back(y.value);
    } else if (!run.y_valid.empty()) {
      out.push_back(run.validated_mean());
    }
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace asdopt
