#pragma once

#include "s3gd/anchors.hpp"
#include "s3gd/estimators.hpp"
#include "s3gd/loss.hpp"
#include "s3gd/prox.hpp"
#include "s3gd/trace.hpp"

#include <cstdint>
#include <string>

namespace s3gd {

enum class Algorithm { sgd, ssgd, svrg, scv, s3gd };

Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm algo);
bool is_nested(Algorithm algo);

enum class SnapshotRule {
  last,  // w_tilde <- final inner iterate
  best,  // w_tilde <- inner iterate with the lowest objective
};

SnapshotRule parse_snapshot_rule(const std::string& name);
std::string to_string(SnapshotRule rule);

struct RunConfig {
  Algorithm algorithm = Algorithm::s3gd;
  double eta = 0.1;
  Index batch = 10;
  Index inner = 0;  // 0 picks 20 for s3gd, 50 for svrg
  std::int64_t iterations = 1000;
  std::uint64_t seed = 1;
  std::int64_t checkpoint_every = 50;
  SnapshotRule snapshot = SnapshotRule::last;
  bool track_correlation = false;
  Index variance_trials = 0;  // > 1 records est_var at checkpoints
  bool keep_iterates = false;
  double divergence_factor = 1e3;
  int kmeans_iter = 20;  // ssgd strata

  Index inner_length() const;
  /// eta may be 0 here (a frozen run); the experiment harness demands eta > 0.
  void validate() const;
};

/// F = P + R over a training set, with an optional held-out set for the
/// test objective.
struct Problem {
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
  LossModel loss;
  Regularizer reg;

  const Dataset& data() const { return *train; }
};

double composite_objective(const Eigen::VectorXd& w, const Dataset& ds, const LossModel& loss,
                           const Regularizer& reg);
double composite_objective(const Eigen::VectorXd& w, const Problem& problem);

/// Shared loop: w_0 = 0, w <- prox(w - eta * g, eta). Nested estimators are
/// refreshed every `inner` steps and restart the inner loop from the snapshot.
Trace run_with(GradientEstimator& estimator, const RunConfig& cfg, const Problem& problem);

Trace run_sgd(const RunConfig& cfg, const Problem& problem);
Trace run_ssgd(const RunConfig& cfg, const Problem& problem);
Trace run_svrg(const RunConfig& cfg, const Problem& problem);
Trace run_scv(const RunConfig& cfg, const Problem& problem);
Trace run_s3gd(const RunConfig& cfg, const Problem& problem, const AnchorModel& model);

/// Dispatch on cfg.algorithm; `model` is required for s3gd only.
Trace run(const RunConfig& cfg, const Problem& problem, const AnchorModel* model = nullptr);

/// Contraction factor and residual multiplier of the nested-loop bound,
/// with mu = mu_P + mu_R and m the inner-loop length.
struct Certificate {
  double rho = 0.0;
  double delta_coeff = 0.0;
  bool feasible = false;
};

Certificate certificate(double mu_P, double mu_R, double L, double eta, std::int64_t m_inner);

struct ReferenceSolution {
  Eigen::VectorXd w;
  double objective = 0.0;
  double grad_map_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Accelerated proximal gradient with adaptive restart, run until the
/// gradient-mapping norm drops to `tol`.
ReferenceSolution solve_reference(const Dataset& ds, const LossModel& loss, const Regularizer& reg,
                                  double tol = 1e-10, int max_iter = 200000);

/// Lipschitz constant of grad P: lipschitz_factor * lambda_max(X diag(weights) X').
double global_lipschitz(const Dataset& ds, const LossModel& loss);

}  // namespace s3gd
