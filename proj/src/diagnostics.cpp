#include "s3gd/diagnostics.hpp"

#include "s3gd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace s3gd {

Correlation pearson_correlation(const Eigen::VectorXd& g, const Eigen::VectorXd& g_exact) {
  if (g.size() != g_exact.size()) throw ValidationError("pearson_correlation: dimension mismatch");
  if (g.size() < 2) throw ValidationError("pearson_correlation needs at least two coordinates");
  const Eigen::ArrayXd a = g.array() - g.mean();
  const Eigen::ArrayXd b = g_exact.array() - g_exact.mean();
  const double saa = (a * a).sum();
  const double sbb = (b * b).sum();
  if (saa == 0.0 || sbb == 0.0) return {0.0, true};
  const double r = (a * b).sum() / std::sqrt(saa * sbb);
  return {std::clamp(r, -1.0, 1.0), false};
}

namespace {

struct Moments {
  double sum = 0.0, sum_sq = 0.0;
  Index count = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++count;
  }
  double mean() const { return sum / static_cast<double>(count); }
  double std_error() const {
    if (count < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - count * m * m) / static_cast<double>(count - 1));
    return std::sqrt(var / static_cast<double>(count));
  }
  VarianceEstimate estimate() const { return {mean(), std_error(), count}; }
};

}  // namespace

VarianceEstimate estimator_variance(const GradientEstimator& estimator, const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& exact, Index trials, Rng& rng) {
  if (trials < 2) throw ValidationError("estimator_variance needs at least two trials");
  Moments acc;
  Eigen::VectorXd g;
  for (Index t = 0; t < trials; ++t) {
    const auto batch = estimator.draw(rng);
    estimator.evaluate(w, batch, g);
    acc.add((g - exact).squaredNorm());
  }
  return acc.estimate();
}

VarianceComparison compare_variance(const GradientEstimator& a, const GradientEstimator& b, const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& exact, Index trials, Rng& rng) {
  if (trials < 2) throw ValidationError("compare_variance needs at least two trials");
  Moments ma, mb, diff;
  Eigen::VectorXd ga, gb;
  for (Index t = 0; t < trials; ++t) {
    const auto batch = a.draw(rng);
    a.evaluate(w, batch, ga);
    b.evaluate(w, batch, gb);
    const double ea = (ga - exact).squaredNorm();
    const double eb = (gb - exact).squaredNorm();
    ma.add(ea);
    mb.add(eb);
    diff.add(ea - eb);
  }
  return {ma.estimate(), mb.estimate(), diff.mean(), diff.std_error()};
}

std::int64_t default_tail_window(std::int64_t iterations) {
  return std::max<std::int64_t>(1, std::min<std::int64_t>(5000, iterations / 4));
}

namespace {

std::int64_t tail_start(const Trace& trace, std::int64_t window) {
  return trace.records.back().iter - std::max<std::int64_t>(window, 1);
}

}  // namespace

double tail_average(const Trace& trace, std::int64_t window) {
  if (trace.records.empty()) throw ValidationError("tail_average of an empty trace");
  const auto start = tail_start(trace, window);
  double sum = 0.0;
  std::int64_t count = 0;
  for (const auto& r : trace.records) {
    if (r.iter > start) {
      sum += r.train_obj;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

double tail_correlation(const Trace& trace, std::int64_t window) {
  if (trace.records.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto start = tail_start(trace, window);
  double sum = 0.0;
  std::int64_t count = 0;
  for (const auto& r : trace.records) {
    if (r.iter > start && r.grad_corr) {
      sum += *r.grad_corr;
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

bool stable_enough(double tail_objective, double f_star, double epsilon) {
  if (!std::isfinite(tail_objective)) return false;
  if (f_star == 0.0) return tail_objective <= 1e-8;
  return tail_objective <= (1.0 + epsilon) * f_star;
}

StepsizeChoice select_stable_stepsize(const std::vector<StepsizeCandidate>& candidates, double f_star,
                                      double epsilon) {
  if (candidates.empty()) throw ValidationError("no step size candidates");
  StepsizeChoice choice;
  choice.passed.resize(candidates.size());
  bool any = false;
  double smallest = candidates.front().eta;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    smallest = std::min(smallest, c.eta);
    choice.passed[i] = !c.diverged && stable_enough(c.tail_objective, f_star, epsilon);
    if (choice.passed[i] && (!any || c.eta > choice.eta)) {
      choice.eta = c.eta;
      any = true;
    }
  }
  if (!any) {
    choice.eta = smallest;
    choice.warning = true;
  }
  return choice;
}

StepsizeChoice select_stable_stepsize(const std::vector<Trace>& traces, double f_star, double epsilon,
                                      std::int64_t window) {
  std::vector<StepsizeCandidate> candidates;
  candidates.reserve(traces.size());
  for (const auto& t : traces) {
    const auto w = window > 0 ? window : default_tail_window(t.iterations);
    const bool diverged = t.diverged || t.records.empty();
    candidates.push_back({t.eta, diverged ? std::numeric_limits<double>::infinity() : tail_average(t, w), diverged});
  }
  return select_stable_stepsize(candidates, f_star, epsilon);
}

}  // namespace s3gd
