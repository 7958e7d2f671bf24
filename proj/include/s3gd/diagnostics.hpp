#pragma once

#include "s3gd/estimators.hpp"
#include "s3gd/trace.hpp"

#include <string>
#include <vector>

namespace s3gd {

struct Correlation {
  double value = 0.0;
  bool degenerate = false;  // one side had zero variance; value is 0
};

/// Sample Pearson coefficient over coordinate pairs.
Correlation pearson_correlation(const Eigen::VectorXd& g, const Eigen::VectorXd& g_exact);

struct VarianceEstimate {
  double mean = 0.0;  // Monte-Carlo mean of ||g - exact||^2
  double std_error = 0.0;
  Index trials = 0;
};

VarianceEstimate estimator_variance(const GradientEstimator& estimator, const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& exact, Index trials, Rng& rng);

/// Both estimators evaluated on the same batches (drawn by `a`). The paired
/// difference a - b carries its own standard error.
struct VarianceComparison {
  VarianceEstimate a;
  VarianceEstimate b;
  double diff_mean = 0.0;
  double diff_std_error = 0.0;
};

VarianceComparison compare_variance(const GradientEstimator& a, const GradientEstimator& b, const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& exact, Index trials, Rng& rng);

/// min(5000, iterations / 4), at least 1.
std::int64_t default_tail_window(std::int64_t iterations);

/// Mean train objective over the records whose iteration lies in the final
/// `window` iterations; the last record alone when none do.
double tail_average(const Trace& trace, std::int64_t window);

/// Mean of the recorded correlations over the same window; NaN when none.
double tail_correlation(const Trace& trace, std::int64_t window);

struct StepsizeCandidate {
  double eta = 0.0;
  double tail_objective = 0.0;
  bool diverged = false;
};

struct StepsizeChoice {
  double eta = 0.0;
  bool warning = false;  // nothing passed; smallest candidate returned
  std::vector<bool> passed;
};

/// tail <= (1 + epsilon) F_star, or tail <= F_star + 1e-8 when F_star == 0.
bool stable_enough(double tail_objective, double f_star, double epsilon);

/// Largest non-diverged candidate passing stable_enough. Throws on an empty set.
StepsizeChoice select_stable_stepsize(const std::vector<StepsizeCandidate>& candidates, double f_star,
                                      double epsilon);
StepsizeChoice select_stable_stepsize(const std::vector<Trace>& traces, double f_star, double epsilon,
                                      std::int64_t window = 0);

}  // namespace s3gd
