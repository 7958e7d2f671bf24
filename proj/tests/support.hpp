#pragma once

#include "s3gd/dataset.hpp"
#include "s3gd/random.hpp"

#include <cmath>

namespace testing {

using s3gd::Index;

// Gaussian features, random +-1 labels (both classes present), weights 1/n.
inline s3gd::Dataset random_dataset(Index n, Index d, std::uint64_t seed, bool intercept = false) {
  s3gd::Rng rng(seed);
  s3gd::Dataset ds;
  ds.has_intercept = intercept;
  ds.features.resize(d + (intercept ? 1 : 0), n);
  ds.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) ds.features(j, i) = rng.normal();
    if (intercept) ds.features(d, i) = 1.0;
    ds.labels[i] = (i % 2 == 0 || rng.uniform() < 0.3) ? 1.0 : -1.0;
  }
  ds.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return ds;
}

inline Eigen::VectorXd random_vector(Index d, s3gd::Rng& rng, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (Index j = 0; j < d; ++j) v[j] = scale * rng.normal();
  return v;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({1e-300, a.norm(), b.norm()});
}

}  // namespace testing
