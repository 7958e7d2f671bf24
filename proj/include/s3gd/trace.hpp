#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace s3gd {

struct TraceRecord {
  std::int64_t iter = 0;
  double wall_s = 0.0;
  double train_obj = 0.0;
  std::optional<double> test_obj;
  std::optional<double> grad_corr;
  std::optional<double> est_var;
};

/// Checkpointed history of one optimizer run. Iteration indices are strictly
/// increasing and wall times non-decreasing.
struct Trace {
  std::string algorithm;
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::string config;  // free-form echo of the run configuration
  std::vector<TraceRecord> records;
  bool diverged = false;
  std::string diagnostic;
  std::int64_t iterations = 0;  // stochastic updates actually performed
  double setup_s = 0.0;         // preprocessing outside the timed loop
  Eigen::VectorXd final_w;
  std::vector<Eigen::VectorXd> iterates;  // only when RunConfig::keep_iterates

  /// Throws ValidationError when the ordering invariants are violated.
  void validate() const;
};

inline constexpr const char* kTraceHeader = "iter,wall_s,train_obj,test_obj,grad_corr,est_var";

/// Shortest round-trip decimal, locale independent.
std::string format_number(double v);

std::string format_trace_csv(const Trace& trace);
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);

/// Reads records only; metadata stays default.
Trace parse_trace_csv(const std::string& text);
Trace read_trace_csv(const std::filesystem::path& path);

}  // namespace s3gd
