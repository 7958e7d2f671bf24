#include "s3gd/gradients.hpp"

#include "s3gd/errors.hpp"

#include <algorithm>
#include <unordered_set>

namespace s3gd {

namespace detail {

void variance_reduced(const Eigen::VectorXd& w, std::span<const Index> batch, std::span<const double> snapshot_coef,
                      const Eigen::VectorXd& snapshot_mean, const Dataset& ds, const LossModel& loss,
                      Eigen::VectorXd& out) {
  const double per = static_cast<double>(ds.size()) / static_cast<double>(batch.size());
  out.setZero(ds.dims());
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const Index i = batch[t];
    const auto x = ds.features.col(i);
    const double scale = ds.weights[i] * per;
    const double now = atomic_derivative(loss, x.dot(w), ds.labels[i]);
    out.noalias() += (scale * now) * x;
    out.noalias() -= (scale * snapshot_coef[t]) * x;
  }
  out += snapshot_mean;
}

}  // namespace detail

namespace {

void check_dims(const Eigen::VectorXd& w, const Dataset& ds) {
  if (w.size() != ds.dims()) throw ValidationError("parameter dimension does not match dataset");
}

void check_batch(std::span<const Index> batch, const Dataset& ds) {
  if (batch.empty()) throw ValidationError("empty mini-batch");
  for (Index i : batch)
    if (i < 0 || i >= ds.size()) throw ValidationError("mini-batch index out of range");
}

}  // namespace

Eigen::VectorXd full_gradient(const Eigen::VectorXd& w, const Dataset& ds, const LossModel& loss) {
  check_dims(w, ds);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(ds.dims());
  for (Index i = 0; i < ds.size(); ++i) {
    const auto x = ds.features.col(i);
    const double c = atomic_derivative(loss, x.dot(w), ds.labels[i]);
    detail::add_weighted_sample(g, c, ds.weights[i], x);
  }
  return g;
}

std::vector<Index> sample_minibatch(Index n, Index p, Rng& rng) {
  if (p < 1) throw ValidationError("batch size must be >= 1");
  if (p > n) throw ValidationError("batch size exceeds sample count");
  std::vector<Index> out;
  out.reserve(p);
  // Floyd: for j in [n-p, n), take a uniform t in [0, j]; if taken, take j.
  if (p <= 32) {
    for (Index j = n - p; j < n; ++j) {
      const Index t = static_cast<Index>(rng.below(static_cast<std::uint64_t>(j + 1)));
      out.push_back(std::find(out.begin(), out.end(), t) == out.end() ? t : j);
    }
  } else {
    std::unordered_set<Index> seen;
    seen.reserve(static_cast<std::size_t>(p) * 2);
    for (Index j = n - p; j < n; ++j) {
      const Index t = static_cast<Index>(rng.below(static_cast<std::uint64_t>(j + 1)));
      const Index pick = seen.insert(t).second ? t : j;
      if (pick == j) seen.insert(j);
      out.push_back(pick);
    }
  }
  return out;
}

Eigen::VectorXd minibatch_gradient(const Eigen::VectorXd& w, std::span<const Index> batch, const Dataset& ds,
                                   const LossModel& loss) {
  check_dims(w, ds);
  check_batch(batch, ds);
  const double per = static_cast<double>(ds.size()) / static_cast<double>(batch.size());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(ds.dims());
  for (Index i : batch) {
    const auto x = ds.features.col(i);
    const double c = atomic_derivative(loss, x.dot(w), ds.labels[i]);
    g.noalias() += (ds.weights[i] * per * c) * x;
  }
  return g;
}

AnchorDerivatives anchor_derivatives(const Eigen::VectorXd& w, const AnchorSet& anchors, const LossModel& loss) {
  if (anchors.size() < 1) throw ValidationError("anchor set is empty");
  if (w.size() != anchors.vectors.rows()) throw ValidationError("parameter dimension does not match anchors");
  AnchorDerivatives out;
  out.label_free.resize(anchors.size());
  out.negative.resize(anchors.size());
  for (Index j = 0; j < anchors.size(); ++j) {
    const double u = anchors.vectors.col(j).dot(w);
    out.label_free[j] = label_free_derivative(loss, u);
    out.negative[j] = atomic_derivative(loss, u, -1.0);
  }
  return out;
}

double approx_sample_coefficient(Index i, const Dataset& ds, const AnchorSampleGraph& asg,
                                 const AnchorDerivatives& derivs) {
  if (i < 0 || i >= asg.samples()) throw ValidationError("sample index out of range");
  if (derivs.size() != asg.m) throw StaleStateError("anchor derivatives do not match the anchor graph");
  double acc = 0.0;
  if (ds.labels[i] > 0.0) {
    for (Index t = 0; t < asg.k; ++t) acc += asg.coefficients(t, i) * derivs.label_free[asg.neighbors(t, i)];
    return -acc;
  }
  for (Index t = 0; t < asg.k; ++t) acc += asg.coefficients(t, i) * derivs.negative[asg.neighbors(t, i)];
  return acc;
}

Eigen::VectorXd approx_sample_gradient(Index i, const Dataset& ds, const AnchorSampleGraph& asg,
                                       const AnchorDerivatives& derivs) {
  if (asg.samples() != ds.size()) throw StaleStateError("anchor-sample graph was built for a different dataset");
  return approx_sample_coefficient(i, ds, asg, derivs) * ds.features.col(i);
}

Eigen::VectorXd approx_full_gradient(const PropagationCache& cache, const AnchorDerivatives& derivs) {
  if (derivs.size() != cache.anchors()) throw StaleStateError("propagation cache does not match anchor count");
  const Index d = cache.xm_pos.rows();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  double* acc = g.data();
  // Column by column, positives before negatives, so that with one anchor
  // per sample the accumulation order matches full_gradient.
  for (Index j = 0; j < cache.anchors(); ++j) {
    const double pos = -derivs.label_free[j];
    const double neg = derivs.negative[j];
    const double* xp = cache.xm_pos.col(j).data();
    const double* xn = cache.xm_neg.col(j).data();
    for (Index r = 0; r < d; ++r) acc[r] += pos * xp[r];
    for (Index r = 0; r < d; ++r) acc[r] += neg * xn[r];
  }
  return g;
}

Eigen::VectorXd approx_full_gradient_decoupled(const PropagationCache& cache, const Eigen::VectorXd& label_free) {
  if (label_free.size() != cache.anchors()) throw StaleStateError("propagation cache does not match anchor count");
  return -(cache.xm_pos + cache.xm_neg) * label_free + cache.neg_correction;
}

GradientSnapshot make_snapshot(const Eigen::VectorXd& w_tilde, const AnchorModel& model, const LossModel& loss) {
  GradientSnapshot s;
  s.w_tilde = w_tilde;
  s.anchor_derivs = anchor_derivatives(w_tilde, model.anchors, loss);
  s.H_grad = approx_full_gradient(model.cache, s.anchor_derivs);
  return s;
}

Eigen::VectorXd semi_stochastic_gradient(const Eigen::VectorXd& w, const GradientSnapshot& snap,
                                         std::span<const Index> batch, const Dataset& ds, const LossModel& loss,
                                         const AnchorModel& model) {
  check_dims(w, ds);
  check_batch(batch, ds);
  if (snap.w_tilde.size() != ds.dims() || snap.H_grad.size() != ds.dims() ||
      snap.anchor_derivs.size() != model.anchors.size())
    throw StaleStateError("gradient snapshot is not current");
  if (model.graph.samples() != ds.size()) throw StaleStateError("anchor-sample graph was built for a different dataset");
  std::vector<double> coef(batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t)
    coef[t] = approx_sample_coefficient(batch[t], ds, model.graph, snap.anchor_derivs);
  Eigen::VectorXd out;
  detail::variance_reduced(w, batch, coef, snap.H_grad, ds, loss, out);
  return out;
}

Eigen::VectorXd svrg_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& w_tilde,
                              const Eigen::VectorXd& full_grad_tilde, std::span<const Index> batch,
                              const Dataset& ds, const LossModel& loss) {
  check_dims(w, ds);
  check_dims(w_tilde, ds);
  check_batch(batch, ds);
  std::vector<double> coef(batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const Index i = batch[t];
    coef[t] = atomic_derivative(loss, ds.features.col(i).dot(w_tilde), ds.labels[i]);
  }
  Eigen::VectorXd out;
  detail::variance_reduced(w, batch, coef, full_grad_tilde, ds, loss, out);
  return out;
}

}  // namespace s3gd
