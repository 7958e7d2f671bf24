#pragma once

#include "s3gd/anchors.hpp"
#include "s3gd/gradients.hpp"

#include <memory>
#include <span>
#include <vector>

namespace s3gd {

/// A stochastic estimate of grad P, split into drawing a batch and evaluating
/// on it so that two estimators can be compared on identical draws.
///
/// Nested estimators (SVRG, S3GD) must be `refresh`ed with a snapshot before
/// the first `evaluate`.
class GradientEstimator {
 public:
  virtual ~GradientEstimator() = default;

  virtual std::vector<Index> draw(Rng& rng) const = 0;
  virtual void evaluate(const Eigen::VectorXd& w, std::span<const Index> batch, Eigen::VectorXd& out) const = 0;
  virtual void refresh(const Eigen::VectorXd& /*w_tilde*/) {}
  virtual bool nested() const { return false; }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& w, std::span<const Index> batch) const {
    Eigen::VectorXd out;
    evaluate(w, batch, out);
    return out;
  }
};

/// Uniform batches without replacement, (1/p) sum n weight_i grad psi_i.
class MinibatchEstimator : public GradientEstimator {
 public:
  MinibatchEstimator(const Dataset& ds, const LossModel& loss, Index batch);
  std::vector<Index> draw(Rng& rng) const override;
  void evaluate(const Eigen::VectorXd& w, std::span<const Index> batch, Eigen::VectorXd& out) const override;
  using GradientEstimator::evaluate;

 protected:
  const Dataset& ds_;
  LossModel loss_;
  Index batch_;
};

/// SGD baseline: p i.i.d. draws with probability proportional to weight,
/// averaged and scaled by the total weight.
class WeightedSamplingEstimator : public GradientEstimator {
 public:
  WeightedSamplingEstimator(const Dataset& ds, const LossModel& loss, Index batch);
  std::vector<Index> draw(Rng& rng) const override;
  void evaluate(const Eigen::VectorXd& w, std::span<const Index> batch, Eigen::VectorXd& out) const override;
  using GradientEstimator::evaluate;

 private:
  const Dataset& ds_;
  LossModel loss_;
  Index batch_;
  // Vose alias table: slot j keeps itself with probability keep_[j], else alias_[j].
  std::vector<double> keep_;
  std::vector<Index> alias_;
  double total_ = 0.0;
};

/// SSGD: one uniform sample per stratum; stratum c contributes
/// |S_c| * weight_i * grad psi_i.
class StratifiedEstimator : public GradientEstimator {
 public:
  StratifiedEstimator(const Dataset& ds, const LossModel& loss, const std::vector<Index>& stratum_of);
  std::vector<Index> draw(Rng& rng) const override;
  void evaluate(const Eigen::VectorXd& w, std::span<const Index> batch, Eigen::VectorXd& out) const override;
  using GradientEstimator::evaluate;

  Index strata() const { return static_cast<Index>(members_.size()); }
  const std::vector<Index>& stratum_of() const { return stratum_of_; }

 private:
  const Dataset& ds_;
  LossModel loss_;
  std::vector<Index> stratum_of_;
  std::vector<std::vector<Index>> members_;
  std::vector<double> population_;  // size of each sample's stratum
};

/// SCV: control variate c_i(w) = psi'(w' xbar_{y_i}; y_i) x_i built on the
/// weighted class means, whose weighted expectation is
/// sum_c psi'(w' xbar_c; c) * S_c with S_c the weighted class sum of x.
class ScvEstimator : public MinibatchEstimator {
 public:
  ScvEstimator(const Dataset& ds, const LossModel& loss, Index batch);
  void evaluate(const Eigen::VectorXd& w, std::span<const Index> batch, Eigen::VectorXd& out) const override;
  using GradientEstimator::evaluate;

  const Eigen::VectorXd& class_mean(bool positive) const { return positive ? mean_pos_ : mean_neg_; }

 private:
  Eigen::VectorXd mean_pos_, mean_neg_;
  Eigen::VectorXd sum_pos_, sum_neg_;
};

/// Prox-SVRG: the snapshot holds the exact grad P(w_tilde).
class SvrgEstimator : public MinibatchEstimator {
 public:
  SvrgEstimator(const Dataset& ds, const LossModel& loss, Index batch);
  void refresh(const Eigen::VectorXd& w_tilde) override;
  bool nested() const override { return true; }
  void evaluate(const Eigen::VectorXd& w, std::span<const Index> batch, Eigen::VectorXd& out) const override;
  using GradientEstimator::evaluate;

  const Eigen::VectorXd& snapshot_gradient() const { return full_; }

 private:
  Eigen::VectorXd w_tilde_;
  Eigen::VectorXd full_;
  mutable std::vector<double> coef_;
};

/// S3GD: the snapshot holds anchor derivatives and grad H(w_tilde) from the
/// propagation cache; per-sample corrections cost O(k) scalar work.
class S3gdEstimator : public MinibatchEstimator {
 public:
  S3gdEstimator(const Dataset& ds, const LossModel& loss, Index batch, const AnchorModel& model);
  void refresh(const Eigen::VectorXd& w_tilde) override;
  bool nested() const override { return true; }
  void evaluate(const Eigen::VectorXd& w, std::span<const Index> batch, Eigen::VectorXd& out) const override;
  using GradientEstimator::evaluate;

  const GradientSnapshot& snapshot() const { return snap_; }

 private:
  const AnchorModel& model_;
  GradientSnapshot snap_;
  bool fresh_ = false;
  mutable std::vector<double> coef_;
};

}  // namespace s3gd
