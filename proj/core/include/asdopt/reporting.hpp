#pragma once

// Plain-text artifacts of a run: the evaluation history table, power
// curves for grid runs, and summary statistics.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "asdopt/optimizer.hpp"

namespace asdopt {

/// One line of the evaluation history file.
struct HistoryRow {
  std::string scenario;
  std::string method;
  int replication = 0;
  int iteration = 0;
  std::string strategy;
  double r = 0.0;
  std::optional<double> eps;
  std::optional<double> tau;
  int n1 = 0;
  int n2 = 0;
  double k2_hat = 0.0;
  double y = 0.0;
  std::uint64_t seed = 0;
  /// Wall time; the only non-reproducible column.
  double millis = 0.0;

  friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

inline constexpr const char* kHistoryHeader =
    "scenario,method,replication,iteration,strategy,r,eps,tau,n1,n2,k2_hat,y,seed,millis";

/// %.17g; enough digits to reload every double bit for bit.
std::string format_double(double x);

std::vector<HistoryRow> history_rows(const std::string& scenario,
                                     const RunResult& run, int replication);

void write_history(std::ostream& out, const std::vector<HistoryRow>& rows);
/// Throws ConfigError naming the offending line.
std::vector<HistoryRow> read_history(std::istream& in);

struct CurvePoint {
  std::string scenario;
  std::string method;
  std::string strategy;
  /// eps or tau of the displayed slice.
  std::optional<double> param;
  double r = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  int count = 0;
};

/// Mean outcome against r per strategy for every (scenario, method) in the
/// rows. For eps and thresh only the parameter slice containing the
/// highest mean is kept.
std::vector<CurvePoint> power_curves(const std::vector<HistoryRow>& rows);
void write_curves(std::ostream& out, const std::vector<CurvePoint>& curves);

struct Quartiles {
  std::size_t n = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
  double iqr() const { return q3 - q1; }
};

/// Linear-interpolation quantiles (type 7).
Quartiles summarize(std::vector<double> values);

/// Validated power values of a set of runs of one method: each grid
/// replicate's held-out value, and each other run's mean validation.
std::vector<double> validated_samples(const std::vector<RunResult>& runs);

/// Writes content to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace asdopt
