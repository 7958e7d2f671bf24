#include "s3gd/errors.hpp"
#include "s3gd/estimators.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>

using namespace s3gd;

namespace {

// Componentwise |mean - exact| <= 4 standard errors over `draws` batches.
bool unbiased(const GradientEstimator& est, const Eigen::VectorXd& w, const Eigen::VectorXd& exact, int draws,
              std::uint64_t seed) {
  Rng rng(seed);
  const Index d = exact.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sum_sq = Eigen::VectorXd::Zero(d), g;
  for (int t = 0; t < draws; ++t) {
    est.evaluate(w, est.draw(rng), g);
    sum += g;
    sum_sq += g.cwiseProduct(g);
  }
  const Eigen::ArrayXd mean = sum.array() / draws;
  const Eigen::ArrayXd var = (sum_sq.array() / draws - mean * mean).max(0.0) * draws / (draws - 1.0);
  const Eigen::ArrayXd se = (var / draws).sqrt();
  const Eigen::ArrayXd gap = (mean - exact.array()).abs();
  return (gap <= 4.0 * se + 1e-12).all();
}

}  // namespace

TEST_CASE("every estimator is unbiased") {
  Dataset ds = testing::random_dataset(200, 5, 61, true);
  ds.weights = class_weights(ds);
  const LossModel loss;
  Rng rng(62);
  const Eigen::VectorXd w = testing::random_vector(6, rng, 0.3), wt = testing::random_vector(6, rng, 0.3);
  const Eigen::VectorXd exact = full_gradient(w, ds, loss);

  MinibatchEstimator plain(ds, loss, 10);
  WeightedSamplingEstimator sgd(ds, loss, 10);
  const auto km = kmeans(ds, 10, 3, 10);
  StratifiedEstimator ssgd(ds, loss, km.assignment);
  ScvEstimator scv(ds, loss, 10);
  SvrgEstimator svrg(ds, loss, 10);
  svrg.refresh(wt);
  const AnchorModel model = build_anchor_model(ds, {15, 3, 10, 1, SigmaRule::as_printed});
  S3gdEstimator s3gd(ds, loss, 10, model);
  s3gd.refresh(wt);

  CHECK(unbiased(plain, w, exact, 5000, 1));
  CHECK(unbiased(sgd, w, exact, 5000, 2));
  CHECK(unbiased(ssgd, w, exact, 5000, 3));
  CHECK(unbiased(scv, w, exact, 5000, 4));
  CHECK(unbiased(svrg, w, exact, 5000, 5));
  CHECK(unbiased(s3gd, w, exact, 5000, 6));
}

TEST_CASE("stratified batches take one index per stratum") {
  const Dataset ds = testing::random_dataset(120, 3, 63);
  const auto km = kmeans(ds, 7, 2, 10);
  StratifiedEstimator est(ds, LossModel{}, km.assignment);
  CHECK(est.strata() == 7);
  Rng rng(64);
  for (int t = 0; t < 1000; ++t) {
    const auto batch = est.draw(rng);
    CHECK(batch.size() == 7);
    std::set<Index> seen;
    for (Index i : batch) seen.insert(km.assignment[i]);
    CHECK(seen.size() == 7);
  }
  // one stratum: a single sample scaled by n w_i, i.e. plain SGD with p = 1
  StratifiedEstimator single(ds, LossModel{}, std::vector<Index>(120, 0));
  MinibatchEstimator plain(ds, LossModel{}, 1);
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(3, 0.2);
  const std::vector<Index> pick{17};
  CHECK(testing::rel_err(single.evaluate(w, pick), plain.evaluate(w, pick)) <= 1e-15);
}

TEST_CASE("control variate cancels when samples equal their class means") {
  Dataset ds = testing::random_dataset(40, 3, 65);
  for (Index i = 0; i < ds.size(); ++i) ds.features.col(i) = ds.labels[i] > 0 ? Eigen::Vector3d(1, 2, -1) : Eigen::Vector3d(-0.5, 0.3, 2);
  ScvEstimator scv(ds, LossModel{}, 4);
  Rng rng(66);
  const Eigen::VectorXd w = testing::random_vector(3, rng);
  const Eigen::VectorXd exact = full_gradient(w, ds, LossModel{});
  for (int t = 0; t < 20; ++t) CHECK((scv.evaluate(w, scv.draw(rng)) - exact).norm() <= 1e-14);
}

TEST_CASE("weighted sampling follows the weights") {
  Dataset ds = testing::random_dataset(4, 2, 67);
  ds.weights = Eigen::Vector4d(0.1, 0.2, 0.3, 0.4);
  WeightedSamplingEstimator est(ds, LossModel{}, 1);
  Rng rng(68);
  std::vector<int> hits(4, 0);
  const int draws = 200000;
  for (int t = 0; t < draws; ++t) ++hits[est.draw(rng)[0]];
  for (Index i = 0; i < 4; ++i) {
    const double p = ds.weights[i];
    CHECK(std::abs(hits[i] - draws * p) <= 5.0 * std::sqrt(draws * p * (1 - p)));
  }

  // skewed, unnormalized, with a zero-weight sample
  Dataset skew = testing::random_dataset(6, 2, 70);
  skew.weights << 5.0, 0.0, 0.01, 1.0, 0.5, 2.49;
  WeightedSamplingEstimator heavy(skew, LossModel{}, 1);
  std::vector<int> seen(6, 0);
  for (int t = 0; t < draws; ++t) ++seen[heavy.draw(rng)[0]];
  CHECK(seen[1] == 0);
  for (Index i = 0; i < 6; ++i) {
    const double p = skew.weights[i] / 9.0;
    CHECK(std::abs(seen[i] - draws * p) <= 5.0 * std::sqrt(draws * p * (1 - p)) + 1e-9);
  }
}

TEST_CASE("nested estimators refuse to run without a snapshot or with stale caches") {
  const Dataset ds = testing::random_dataset(30, 3, 69);
  const LossModel loss;
  const std::vector<Index> batch{1, 2};
  SvrgEstimator svrg(ds, loss, 2);
  CHECK(svrg.nested());
  CHECK_THROWS_AS(svrg.evaluate(Eigen::VectorXd::Zero(3), batch), StaleStateError);
  const AnchorModel model = build_anchor_model(ds, {5, 2, 10, 1, SigmaRule::as_printed});
  S3gdEstimator s3gd(ds, loss, 2, model);
  CHECK_THROWS_AS(s3gd.evaluate(Eigen::VectorXd::Zero(3), batch), StaleStateError);

  Dataset reweighted = ds;
  reweighted.weights = class_weights(ds);
  CHECK_THROWS_AS(S3gdEstimator(reweighted, loss, 2, model), StaleStateError);
  const Dataset other = testing::random_dataset(31, 3, 70);
  CHECK_THROWS_AS(S3gdEstimator(other, loss, 2, model), StaleStateError);
  CHECK_THROWS_AS(MinibatchEstimator(ds, loss, 31), ValidationError);
}

TEST_CASE("exact-interpolation S3GD estimator equals SVRG on every draw") {
  const Dataset ds = testing::random_dataset(60, 4, 71);
  const LossModel loss;
  Rng rng(72);
  const Eigen::VectorXd w = testing::random_vector(4, rng), wt = testing::random_vector(4, rng);
  const AnchorModel exact = identity_anchor_model(ds);
  SvrgEstimator svrg(ds, loss, 10);
  S3gdEstimator s3gd(ds, loss, 10, exact);
  svrg.refresh(wt);
  s3gd.refresh(wt);
  CHECK(s3gd.snapshot().H_grad == svrg.snapshot_gradient());
  for (int t = 0; t < 100; ++t) {
    const auto batch = svrg.draw(rng);
    CHECK(s3gd.evaluate(w, batch) == svrg.evaluate(w, batch));
  }
}
