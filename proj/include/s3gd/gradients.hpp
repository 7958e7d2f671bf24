#pragma once

#include "s3gd/anchors.hpp"
#include "s3gd/dataset.hpp"
#include "s3gd/loss.hpp"
#include "s3gd/random.hpp"

#include <span>
#include <vector>

namespace s3gd {

/// Exact gradient of the smooth part: sum_i weight_i * psi'(x_i'w) * x_i.
Eigen::VectorXd full_gradient(const Eigen::VectorXd& w, const Dataset& ds, const LossModel& loss);

/// p distinct indices drawn uniformly from [0, n) (Floyd's algorithm).
std::vector<Index> sample_minibatch(Index n, Index p, Rng& rng);

/// (1/p) sum_{i in I} n * weight_i * grad psi_i(w). Its expectation over
/// uniform batches is full_gradient; with weights 1/n it is the plain average.
Eigen::VectorXd minibatch_gradient(const Eigen::VectorXd& w, std::span<const Index> batch, const Dataset& ds,
                                   const LossModel& loss);

/// Derivative scalars of every anchor at a fixed w.
///
/// `label_free[j]` is the interpolated quantity d_Z(w): sigmoid(-w'z_j) for
/// logistic. `negative[j]` is the folded derivative psi'(w'z_j; y = -1), used
/// for negative-label samples. For logistic, negative = 1 - label_free.
struct AnchorDerivatives {
  Eigen::VectorXd label_free;
  Eigen::VectorXd negative;

  Index size() const { return label_free.size(); }
};

AnchorDerivatives anchor_derivatives(const Eigen::VectorXd& w, const AnchorSet& anchors, const LossModel& loss);

/// Interpolated folded derivative of sample i: the scalar c with grad h_i = c * x_i.
/// Positives use -sum_t gamma_t label_free, negatives sum_t gamma_t negative.
double approx_sample_coefficient(Index i, const Dataset& ds, const AnchorSampleGraph& asg,
                                 const AnchorDerivatives& derivs);

/// grad h_i(w) for the w the derivatives were computed at.
Eigen::VectorXd approx_sample_gradient(Index i, const Dataset& ds, const AnchorSampleGraph& asg,
                                       const AnchorDerivatives& derivs);

/// grad H(w) = sum_i weight_i grad h_i(w) from the cache, label-partitioned:
/// xm_pos * (-label_free) + xm_neg * negative.
Eigen::VectorXd approx_full_gradient(const PropagationCache& cache, const AnchorDerivatives& derivs);

/// Logistic-only single-vector form: -(xm_pos + xm_neg) * label_free + neg_correction.
Eigen::VectorXd approx_full_gradient_decoupled(const PropagationCache& cache, const Eigen::VectorXd& label_free);

/// Outer-loop state of the manifold-propagated estimator.
struct GradientSnapshot {
  Eigen::VectorXd w_tilde;
  Eigen::VectorXd H_grad;
  AnchorDerivatives anchor_derivs;
};

GradientSnapshot make_snapshot(const Eigen::VectorXd& w_tilde, const AnchorModel& model, const LossModel& loss);

/// g_I = grad psi_I(w) - [grad h_I(w_tilde) - grad H(w_tilde)].
Eigen::VectorXd semi_stochastic_gradient(const Eigen::VectorXd& w, const GradientSnapshot& snap,
                                         std::span<const Index> batch, const Dataset& ds, const LossModel& loss,
                                         const AnchorModel& model);

/// Prox-SVRG estimator: grad psi_I(w) - grad psi_I(w_tilde) + grad P(w_tilde).
Eigen::VectorXd svrg_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& w_tilde,
                              const Eigen::VectorXd& full_grad_tilde, std::span<const Index> batch,
                              const Dataset& ds, const LossModel& loss);

namespace detail {

/// acc += coef * (weight * x), elementwise in that association.
inline void add_weighted_sample(Eigen::VectorXd& acc, double coef, double weight,
                                const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Index d = acc.size();
  double* a = acc.data();
  const double* p = x.data();
  for (Index r = 0; r < d; ++r) a[r] += coef * (weight * p[r]);
}

/// Shared body of every snapshot-corrected estimator:
/// out = sum_t s_i [psi'_i(w) - snapshot_coef[t]] x_i + snapshot_mean,
/// with s_i = n * weight_i / p.
void variance_reduced(const Eigen::VectorXd& w, std::span<const Index> batch, std::span<const double> snapshot_coef,
                      const Eigen::VectorXd& snapshot_mean, const Dataset& ds, const LossModel& loss,
                      Eigen::VectorXd& out);

}  // namespace detail

}  // namespace s3gd
