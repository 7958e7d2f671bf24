#include "s3gd/estimators.hpp"

#include "s3gd/errors.hpp"

#include <algorithm>

namespace s3gd {

MinibatchEstimator::MinibatchEstimator(const Dataset& ds, const LossModel& loss, Index batch)
    : ds_(ds), loss_(loss), batch_(batch) {
  if (batch < 1 || batch > ds.size()) throw ValidationError("batch size must lie in [1, n]");
}

std::vector<Index> MinibatchEstimator::draw(Rng& rng) const { return sample_minibatch(ds_.size(), batch_, rng); }

void MinibatchEstimator::evaluate(const Eigen::VectorXd& w, std::span<const Index> batch,
                                  Eigen::VectorXd& out) const {
  const double per = static_cast<double>(ds_.size()) / static_cast<double>(batch.size());
  out.setZero(ds_.dims());
  for (Index i : batch) {
    const auto x = ds_.features.col(i);
    const double c = atomic_derivative(loss_, x.dot(w), ds_.labels[i]);
    out.noalias() += (ds_.weights[i] * per * c) * x;
  }
}

WeightedSamplingEstimator::WeightedSamplingEstimator(const Dataset& ds, const LossModel& loss, Index batch)
    : ds_(ds), loss_(loss), batch_(batch) {
  if (batch < 1) throw ValidationError("batch size must be >= 1");
  const Index n = ds.size();
  total_ = ds.weights.sum();
  if (!(total_ > 0.0)) throw ValidationError("weights sum to zero");
  keep_.assign(n, 1.0);
  alias_.resize(n);
  std::vector<double> scaled(n);
  std::vector<Index> small, large;
  for (Index i = 0; i < n; ++i) {
    alias_[i] = i;
    scaled[i] = ds.weights[i] * static_cast<double>(n) / total_;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const Index s = small.back(), l = large.back();
    small.pop_back();
    keep_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // leftovers are 1 up to rounding
}

std::vector<Index> WeightedSamplingEstimator::draw(Rng& rng) const {
  const auto n = static_cast<std::uint64_t>(keep_.size());
  std::vector<Index> out(batch_);
  for (auto& idx : out) {
    const auto slot = static_cast<Index>(rng.below(n));
    idx = rng.uniform() < keep_[slot] ? slot : alias_[slot];
  }
  return out;
}

void WeightedSamplingEstimator::evaluate(const Eigen::VectorXd& w, std::span<const Index> batch,
                                         Eigen::VectorXd& out) const {
  const double scale = total_ / static_cast<double>(batch.size());
  out.setZero(ds_.dims());
  for (Index i : batch) {
    const auto x = ds_.features.col(i);
    out.noalias() += (scale * atomic_derivative(loss_, x.dot(w), ds_.labels[i])) * x;
  }
}

StratifiedEstimator::StratifiedEstimator(const Dataset& ds, const LossModel& loss,
                                         const std::vector<Index>& stratum_of)
    : ds_(ds), loss_(loss), stratum_of_(stratum_of) {
  if (static_cast<Index>(stratum_of.size()) != ds.size()) throw ValidationError("one stratum label per sample");
  Index count = 0;
  for (Index s : stratum_of) {
    if (s < 0) throw ValidationError("negative stratum label");
    count = std::max(count, s + 1);
  }
  members_.resize(count);
  for (Index i = 0; i < ds.size(); ++i) members_[stratum_of[i]].push_back(i);
  population_.resize(ds.size());
  for (Index i = 0; i < ds.size(); ++i) population_[i] = static_cast<double>(members_[stratum_of[i]].size());
  members_.erase(std::remove_if(members_.begin(), members_.end(), [](const auto& v) { return v.empty(); }),
                 members_.end());
}

std::vector<Index> StratifiedEstimator::draw(Rng& rng) const {
  std::vector<Index> out;
  out.reserve(members_.size());
  for (const auto& m : members_) out.push_back(m[rng.below(m.size())]);
  return out;
}

void StratifiedEstimator::evaluate(const Eigen::VectorXd& w, std::span<const Index> batch,
                                   Eigen::VectorXd& out) const {
  out.setZero(ds_.dims());
  for (Index i : batch) {
    const auto x = ds_.features.col(i);
    out.noalias() += (population_[i] * ds_.weights[i] * atomic_derivative(loss_, x.dot(w), ds_.labels[i])) * x;
  }
}

ScvEstimator::ScvEstimator(const Dataset& ds, const LossModel& loss, Index batch)
    : MinibatchEstimator(ds, loss, batch) {
  sum_pos_ = Eigen::VectorXd::Zero(ds.dims());
  sum_neg_ = Eigen::VectorXd::Zero(ds.dims());
  double w_pos = 0.0, w_neg = 0.0;
  for (Index i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] > 0.0) {
      sum_pos_ += ds.weights[i] * ds.features.col(i);
      w_pos += ds.weights[i];
    } else {
      sum_neg_ += ds.weights[i] * ds.features.col(i);
      w_neg += ds.weights[i];
    }
  }
  mean_pos_ = w_pos > 0.0 ? Eigen::VectorXd(sum_pos_ / w_pos) : Eigen::VectorXd::Zero(ds.dims());
  mean_neg_ = w_neg > 0.0 ? Eigen::VectorXd(sum_neg_ / w_neg) : Eigen::VectorXd::Zero(ds.dims());
}

void ScvEstimator::evaluate(const Eigen::VectorXd& w, std::span<const Index> batch, Eigen::VectorXd& out) const {
  const double per = static_cast<double>(ds_.size()) / static_cast<double>(batch.size());
  const double cv_pos = atomic_derivative(loss_, mean_pos_.dot(w), 1.0);
  const double cv_neg = atomic_derivative(loss_, mean_neg_.dot(w), -1.0);
  out.setZero(ds_.dims());
  for (Index i : batch) {
    const auto x = ds_.features.col(i);
    const double y = ds_.labels[i];
    const double c = atomic_derivative(loss_, x.dot(w), y) - (y > 0.0 ? cv_pos : cv_neg);
    out.noalias() += (ds_.weights[i] * per * c) * x;
  }
  out += cv_pos * sum_pos_ + cv_neg * sum_neg_;
}

SvrgEstimator::SvrgEstimator(const Dataset& ds, const LossModel& loss, Index batch)
    : MinibatchEstimator(ds, loss, batch) {}

void SvrgEstimator::refresh(const Eigen::VectorXd& w_tilde) {
  w_tilde_ = w_tilde;
  full_ = full_gradient(w_tilde, ds_, loss_);
}

void SvrgEstimator::evaluate(const Eigen::VectorXd& w, std::span<const Index> batch, Eigen::VectorXd& out) const {
  if (w_tilde_.size() != ds_.dims()) throw StaleStateError("SVRG snapshot not initialized");
  coef_.resize(batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const Index i = batch[t];
    coef_[t] = atomic_derivative(loss_, ds_.features.col(i).dot(w_tilde_), ds_.labels[i]);
  }
  detail::variance_reduced(w, batch, coef_, full_, ds_, loss_, out);
}

S3gdEstimator::S3gdEstimator(const Dataset& ds, const LossModel& loss, Index batch, const AnchorModel& model)
    : MinibatchEstimator(ds, loss, batch), model_(model) {
  if (model.graph.samples() != ds.size() || model.cache.weights_used.size() != ds.size())
    throw StaleStateError("anchor model was built for a different dataset");
  if (model.cache.weights_used != ds.weights)
    throw StaleStateError("propagation cache was built with different sample weights");
  if (model.cache.anchors() != model.anchors.size() || model.graph.m != model.anchors.size())
    throw StaleStateError("propagation cache does not match anchor count");
}

void S3gdEstimator::refresh(const Eigen::VectorXd& w_tilde) {
  snap_ = make_snapshot(w_tilde, model_, loss_);
  fresh_ = true;
}

void S3gdEstimator::evaluate(const Eigen::VectorXd& w, std::span<const Index> batch, Eigen::VectorXd& out) const {
  if (!fresh_) throw StaleStateError("S3GD snapshot not initialized");
  coef_.resize(batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t)
    coef_[t] = approx_sample_coefficient(batch[t], ds_, model_.graph, snap_.anchor_derivs);
  detail::variance_reduced(w, batch, coef_, snap_.H_grad, ds_, loss_, out);
}

}  // namespace s3gd
