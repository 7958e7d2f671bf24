#pragma once

#include "s3gd/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace s3gd {

struct KMeansResult {
  Eigen::MatrixXd centers;        // d x m
  std::vector<Index> assignment;  // cluster of each sample
  std::vector<double> wcss;       // within-cluster sum of squares after each assignment step
  int iterations = 0;
};

/// Lloyd's algorithm on the columns of `points` from k-means++ seeding.
/// Stops after `max_iter` assignment steps or when assignments stop changing.
/// Empty clusters are re-seeded with the sample farthest from its center.
KMeansResult kmeans(const Eigen::MatrixXd& points, Index m, std::uint64_t seed, int max_iter);
KMeansResult kmeans(const Dataset& ds, Index m, std::uint64_t seed, int max_iter);

/// Interpolation nodes: real training samples, never centroids.
struct AnchorSet {
  Eigen::MatrixXd vectors;           // d x m, column j == sample source_indices[j]
  std::vector<Index> source_indices; // distinct

  Index size() const { return vectors.cols(); }
};

/// For each center in order, the nearest not-yet-used sample (ties to the
/// lowest sample index).
AnchorSet select_anchors(const Dataset& ds, const Eigen::MatrixXd& centers);

/// Anchors taken verbatim from the given samples, in the given order.
AnchorSet anchors_from_samples(const Dataset& ds, const std::vector<Index>& indices);

enum class SigmaRule {
  as_printed,  // sigma = max(eps, min_j sqrt(||x - z_j||))
  unrooted,    // sigma = max(eps, min_j ||x - z_j||)
};

SigmaRule parse_sigma_rule(const std::string& name);
std::string to_string(SigmaRule rule);

struct AsgOptions {
  Index k = 3;
  SigmaRule sigma_rule = SigmaRule::as_printed;
  double epsilon = 1e-4;
};

/// Row-sparse anchor-sample graph M, stored column-per-sample:
/// sample i links to anchors neighbors(0..k-1, i) with coefficients that are
/// nonnegative and sum to one.
struct AnchorSampleGraph {
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> neighbors;  // k x n
  Eigen::MatrixXd coefficients;                                    // k x n
  Index k = 0;
  Index m = 0;

  Index samples() const { return neighbors.cols(); }
  /// n x m dense view of M, for tests and diagnostics.
  Eigen::MatrixXd dense() const;
};

/// Gaussian-kernel coefficients over each sample's k nearest anchors
/// (exhaustive search, ties to the lowest anchor index).
AnchorSampleGraph build_asg(const Dataset& ds, const AnchorSet& anchors, const AsgOptions& opts);

/// Label-partitioned products X diag(weights) M.
///
/// Column j of `xm_pos` is sum over positive samples of weight_i * M(i,j) * x_i,
/// `xm_neg` likewise over negatives. `neg_correction` is sum over negatives of
/// weight_i * x_i: the constant left over when the negative-label logistic
/// derivative is rewritten through sigmoid(u) = 1 - sigmoid(-u).
struct PropagationCache {
  Eigen::MatrixXd xm_pos;
  Eigen::MatrixXd xm_neg;
  Eigen::VectorXd neg_correction;
  Eigen::VectorXd weights_used;

  Index anchors() const { return xm_pos.cols(); }
};

PropagationCache precompute_propagation(const Dataset& ds, const AnchorSampleGraph& asg);

struct AnchorParams {
  Index m = 100;
  Index k = 3;
  int kmeans_iter = 20;
  std::uint64_t seed = 1;
  SigmaRule sigma_rule = SigmaRule::as_printed;
};

/// Everything the manifold-propagated gradient needs, built once per dataset.
struct AnchorModel {
  AnchorSet anchors;
  AnchorSampleGraph graph;
  PropagationCache cache;
  double preprocess_seconds = 0.0;
};

AnchorModel build_anchor_model(const Dataset& ds, const AnchorParams& params);

/// Exact-interpolation configuration: every sample is its own anchor, k = 1.
AnchorModel identity_anchor_model(const Dataset& ds);

}  // namespace s3gd
