#include "s3gd/anchors.hpp"

#include "s3gd/errors.hpp"
#include "s3gd/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace s3gd {

namespace {

double sq_dist(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  return (a - b).squaredNorm();
}

std::vector<Index> kmeanspp_seed(const Eigen::MatrixXd& x, Index m, Rng& rng) {
  const Index n = x.cols();
  std::vector<Index> chosen;
  chosen.reserve(m);
  std::vector<char> used(n, 0);
  Eigen::VectorXd best = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());

  Index next = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  for (;;) {
    chosen.push_back(next);
    used[next] = 1;
    if (static_cast<Index>(chosen.size()) == m) break;
    const auto c = x.col(next);
    for (Index i = 0; i < n; ++i) best[i] = std::min(best[i], sq_dist(x.col(i), c));

    double total = 0.0;
    for (Index i = 0; i < n; ++i)
      if (!used[i]) total += best[i];
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      next = -1;
      Index last_positive = -1;
      for (Index i = 0; i < n; ++i) {
        if (used[i] || best[i] <= 0.0) continue;
        last_positive = i;
        acc += best[i];
        if (acc > target) {
          next = i;
          break;
        }
      }
      if (next < 0) next = last_positive;
    } else {
      // every remaining sample duplicates a chosen one
      std::vector<Index> free;
      for (Index i = 0; i < n; ++i)
        if (!used[i]) free.push_back(i);
      next = free[rng.below(free.size())];
    }
  }
  return chosen;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& x, Index m, std::uint64_t seed, int max_iter) {
  const Index n = x.cols();
  if (m < 1) throw ValidationError("k-means needs at least one cluster");
  if (m > n) throw ValidationError("k-means: more clusters than samples");
  Rng rng(seed);

  KMeansResult res;
  const auto seeds = kmeanspp_seed(x, m, rng);
  res.centers.resize(x.rows(), m);
  for (Index j = 0; j < m; ++j) res.centers.col(j) = x.col(seeds[j]);
  res.assignment.assign(n, -1);

  const Eigen::VectorXd x_sq = x.colwise().squaredNorm().transpose();
  Eigen::VectorXd own_dist(n);
  for (int it = 0; it < std::max(max_iter, 1); ++it) {
    // Candidate nearest centers from the expanded form, then confirmed with
    // exact distances so the objective can never increase through rounding.
    const Eigen::VectorXd c_sq = res.centers.colwise().squaredNorm().transpose();
    const Eigen::MatrixXd cross = x.transpose() * res.centers;  // n x m
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index cand = 0;
      double cand_val = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < m; ++j) {
        const double v = x_sq[i] - 2.0 * cross(i, j) + c_sq[j];
        if (v < cand_val) {
          cand_val = v;
          cand = j;
        }
      }
      const Index prev = res.assignment[i];
      Index pick = cand;
      double pick_dist = sq_dist(x.col(i), res.centers.col(cand));
      if (prev >= 0 && prev != cand) {
        const double prev_dist = sq_dist(x.col(i), res.centers.col(prev));
        if (prev_dist < pick_dist || (prev_dist == pick_dist && prev < cand)) {
          pick = prev;
          pick_dist = prev_dist;
        }
      }
      if (pick != prev) changed = true;
      res.assignment[i] = pick;
      own_dist[i] = pick_dist;
    }
    res.wcss.push_back(own_dist.sum());
    res.iterations = it + 1;
    if (!changed && it > 0) break;
    if (it + 1 == std::max(max_iter, 1)) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(x.rows(), m);
    std::vector<Index> counts(m, 0);
    for (Index i = 0; i < n; ++i) {
      sums.col(res.assignment[i]) += x.col(i);
      ++counts[res.assignment[i]];
    }
    std::vector<char> taken(n, 0);
    for (Index j = 0; j < m; ++j) {
      if (counts[j] > 0) {
        res.centers.col(j) = sums.col(j) / static_cast<double>(counts[j]);
        continue;
      }
      Index far = -1;
      for (Index i = 0; i < n; ++i)
        if (!taken[i] && (far < 0 || own_dist[i] > own_dist[far])) far = i;
      taken[far] = 1;
      res.centers.col(j) = x.col(far);
    }
  }
  return res;
}

KMeansResult kmeans(const Dataset& ds, Index m, std::uint64_t seed, int max_iter) {
  return kmeans(ds.features, m, seed, max_iter);
}

AnchorSet select_anchors(const Dataset& ds, const Eigen::MatrixXd& centers) {
  if (!centers.allFinite()) throw ValidationError("non-finite anchor center");
  if (centers.rows() != ds.dims()) throw ValidationError("center dimension does not match dataset");
  const Index m = centers.cols();
  if (m > ds.size()) throw ValidationError("more centers than samples");

  AnchorSet out;
  out.vectors.resize(ds.dims(), m);
  std::vector<char> used(ds.size(), 0);
  for (Index j = 0; j < m; ++j) {
    const Eigen::VectorXd dist = (ds.features.colwise() - centers.col(j)).colwise().squaredNorm().transpose();
    Index best = -1;
    for (Index i = 0; i < ds.size(); ++i) {
      if (used[i]) continue;
      if (best < 0 || dist[i] < dist[best]) best = i;
    }
    used[best] = 1;
    out.source_indices.push_back(best);
    out.vectors.col(j) = ds.features.col(best);
  }
  return out;
}

AnchorSet anchors_from_samples(const Dataset& ds, const std::vector<Index>& indices) {
  AnchorSet out;
  out.vectors.resize(ds.dims(), static_cast<Index>(indices.size()));
  std::vector<char> used(ds.size(), 0);
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const Index i = indices[j];
    if (i < 0 || i >= ds.size()) throw ValidationError("anchor sample index out of range");
    if (used[i]) throw ValidationError("duplicate anchor sample");
    used[i] = 1;
    out.vectors.col(static_cast<Index>(j)) = ds.features.col(i);
  }
  out.source_indices = indices;
  return out;
}

SigmaRule parse_sigma_rule(const std::string& name) {
  if (name == "as-printed" || name == "as_printed") return SigmaRule::as_printed;
  if (name == "unrooted") return SigmaRule::unrooted;
  throw ValidationError("unknown sigma rule '" + name + "'");
}

std::string to_string(SigmaRule rule) { return rule == SigmaRule::as_printed ? "as-printed" : "unrooted"; }

Eigen::MatrixXd AnchorSampleGraph::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(samples(), m);
  for (Index i = 0; i < samples(); ++i)
    for (Index t = 0; t < k; ++t) out(i, neighbors(t, i)) += coefficients(t, i);
  return out;
}

AnchorSampleGraph build_asg(const Dataset& ds, const AnchorSet& anchors, const AsgOptions& opts) {
  const Index m = anchors.size();
  const Index k = opts.k;
  if (m < 1) throw ValidationError("anchor set is empty");
  if (k < 1 || k > m) throw ValidationError("k must satisfy 1 <= k <= number of anchors");
  if (anchors.vectors.rows() != ds.dims()) throw ValidationError("anchor dimension does not match dataset");

  AnchorSampleGraph g;
  g.k = k;
  g.m = m;
  g.neighbors.resize(k, ds.size());
  g.coefficients.resize(k, ds.size());
  std::vector<Index> order(m);
  Eigen::VectorXd dist(m);
  for (Index i = 0; i < ds.size(); ++i) {
    dist = (anchors.vectors.colwise() - ds.features.col(i)).colwise().squaredNorm().transpose();
    std::iota(order.begin(), order.end(), Index{0});
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    });
    const double nearest = dist[order[0]];
    const double root = opts.sigma_rule == SigmaRule::as_printed ? std::sqrt(std::sqrt(nearest)) : std::sqrt(nearest);
    const double sigma = std::max(opts.epsilon, root);
    const double inv_sigma_sq = 1.0 / (sigma * sigma);

    // exp(-D/sigma^2) shifted by the nearest distance; identical after normalization
    double total = 0.0;
    for (Index t = 0; t < k; ++t) {
      const double gamma = std::exp(-(dist[order[t]] - nearest) * inv_sigma_sq);
      g.neighbors(t, i) = order[t];
      g.coefficients(t, i) = gamma;
      total += gamma;
    }
    g.coefficients.col(i) /= total;
  }
  return g;
}

PropagationCache precompute_propagation(const Dataset& ds, const AnchorSampleGraph& asg) {
  if (asg.samples() != ds.size()) throw StaleStateError("anchor-sample graph was built for a different dataset");
  const Index d = ds.dims();
  PropagationCache c;
  c.xm_pos = Eigen::MatrixXd::Zero(d, asg.m);
  c.xm_neg = Eigen::MatrixXd::Zero(d, asg.m);
  c.neg_correction = Eigen::VectorXd::Zero(d);
  c.weights_used = ds.weights;
  for (Index i = 0; i < ds.size(); ++i) {
    const bool positive = ds.labels[i] > 0.0;
    const auto x = ds.features.col(i);
    Eigen::MatrixXd& target = positive ? c.xm_pos : c.xm_neg;
    for (Index t = 0; t < asg.k; ++t) {
      const double scale = ds.weights[i] * asg.coefficients(t, i);
      auto col = target.col(asg.neighbors(t, i));
      for (Index r = 0; r < d; ++r) col[r] += scale * x[r];
    }
    if (!positive) c.neg_correction += ds.weights[i] * x;
  }
  return c;
}

AnchorModel build_anchor_model(const Dataset& ds, const AnchorParams& params) {
  const auto start = std::chrono::steady_clock::now();
  AnchorModel model;
  const auto km = kmeans(ds, params.m, params.seed, params.kmeans_iter);
  model.anchors = select_anchors(ds, km.centers);
  model.graph = build_asg(ds, model.anchors, {params.k, params.sigma_rule, 1e-4});
  model.cache = precompute_propagation(ds, model.graph);
  model.preprocess_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return model;
}

AnchorModel identity_anchor_model(const Dataset& ds) {
  AnchorModel model;
  std::vector<Index> all(ds.size());
  std::iota(all.begin(), all.end(), Index{0});
  model.anchors = anchors_from_samples(ds, all);
  model.graph = build_asg(ds, model.anchors, {1, SigmaRule::as_printed, 1e-4});
  model.cache = precompute_propagation(ds, model.graph);
  return model;
}

}  // namespace s3gd
