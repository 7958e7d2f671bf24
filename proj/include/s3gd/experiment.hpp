#pragma once

#include "s3gd/anchors.hpp"
#include "s3gd/dataset.hpp"
#include "s3gd/optimizers.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace s3gd {

enum class Weighting { uniform, classes };

/// Sectioned key=value configuration. Sections and keys:
///
///   [data]     source (synthetic|libsvm), path, test_path, n, d, clusters,
///              separation, seed, test_n, intercept, unit_norm, weighting
///   [model]    loss, beta, regularizer, lambda, alpha, regularize_intercept
///   [anchors]  m, k, kmeans_iter, seed, sigma_rule
///   [run]      algorithms, etas, seeds | trials, batch, inner_s3gd,
///              inner_svrg, iterations, checkpoint_every, snapshot,
///              track_correlation, variance_trials, epsilon, tail_window,
///              output, workers
struct ExperimentConfig {
  // data
  bool synthetic = true;
  SyntheticSpec synth;
  Index test_n = 0;
  std::filesystem::path path;
  std::filesystem::path test_path;
  LoadOptions load;
  Weighting weighting = Weighting::uniform;
  // model
  LossModel loss;
  Regularizer reg;
  bool regularize_intercept = false;
  // anchors
  AnchorParams anchors;
  // run
  std::vector<Algorithm> algorithms;
  std::vector<double> etas;
  std::vector<std::uint64_t> seeds;
  Index batch = 10;
  Index inner_s3gd = 20;
  Index inner_svrg = 50;
  std::int64_t iterations = 20000;
  std::int64_t checkpoint_every = 50;
  SnapshotRule snapshot = SnapshotRule::last;
  bool track_correlation = false;
  Index variance_trials = 0;
  double epsilon = 0.01;
  std::int64_t tail_window = 0;  // 0: min(5000, iterations / 4)
  std::filesystem::path output = "results";
  int workers = 1;

  /// Throws ValidationError naming the offending key.
  void validate() const;
  RunConfig run_config(Algorithm algo, double eta, std::uint64_t seed) const;
};

/// Throws ParseError (with line) or ValidationError.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Parses `key=value` pairs separated by commas, whitespace or newlines
/// (keys n, d, clusters, separation, seed, intercept).
SyntheticSpec parse_synthetic_spec(const std::string& text);

/// S3GD_WORKERS when set to a positive integer, else `configured`.
int resolve_workers(int configured);

struct RunRow {
  std::string algorithm;
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::int64_t iterations = 0;
  bool diverged = false;
  double setup_s = 0.0;
  std::string trace_file;
  std::string note;
};

struct SummaryRow {
  std::string algorithm;
  double eta = 0.0;
  int runs = 0;
  int diverged = 0;
  double tail_obj = 0.0;       // mean over non-diverged runs
  double grad_corr = 0.0;      // NaN when not tracked
  double time_per_50 = 0.0;    // seconds per 50 iterations, mean over runs
  double setup_s = 0.0;
  bool stable = false;
  bool selected = false;
  bool warning = false;
};

struct ExperimentResult {
  double f_star = 0.0;
  std::vector<RunRow> runs;
  std::vector<SummaryRow> summary;
  int failures = 0;
};

/// Executes every (algorithm, eta, seed) triple, writes
///   traces/<algo>_eta<eta>_seed<seed>.csv, runs.csv, meta.csv, summary.csv
/// under cfg.output. Diverged runs are recorded, not fatal; other run
/// failures count in `failures`.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Rebuilds summary rows from runs.csv, meta.csv and the trace files.
std::vector<SummaryRow> summarize(const std::filesystem::path& dir);
std::string format_summary_csv(const std::vector<SummaryRow>& rows);

std::string trace_file_name(const std::string& algorithm, double eta, std::uint64_t seed);

}  // namespace s3gd
