#include "s3gd/dataset.hpp"
#include "s3gd/errors.hpp"
#include "s3gd/optimizers.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>

using namespace s3gd;

TEST_CASE("libsvm text becomes columns with an intercept row") {
  const Dataset ds = parse_libsvm("+1 1:2.0\n-1 2:3.0\n");
  CHECK(ds.dims() == 3);
  CHECK(ds.size() == 2);
  CHECK(ds.features.col(0) == Eigen::Vector3d(2, 0, 1));
  CHECK(ds.features.col(1) == Eigen::Vector3d(0, 3, 1));
  CHECK(ds.labels == Eigen::Vector2d(1, -1));
  CHECK(ds.weights == Eigen::Vector2d(0.5, 0.5));
  CHECK(ds.has_intercept);
}

TEST_CASE("libsvm rejects empty input, bad labels and malformed tokens") {
  CHECK_THROWS_WITH_AS(parse_libsvm(""), "no samples", ValidationError);
  CHECK_THROWS_WITH_AS(parse_libsvm("# only a comment\n\n"), "no samples", ValidationError);
  CHECK_THROWS_AS(parse_libsvm("2 1:1\n"), ValidationError);
  try {
    parse_libsvm("+1 1:1\n-1 2:abc\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_libsvm("+1 2:1 1:1\n"), ParseError);
  CHECK_THROWS_AS(parse_libsvm("+1 0:1\n"), ParseError);
}

TEST_CASE("libsvm write then read reproduces features and labels exactly") {
  SyntheticSpec spec;
  spec.n = 40;
  spec.d = 6;
  spec.clusters = 3;
  const Dataset ds = synth_gaussian(spec);
  const Dataset back = parse_libsvm(format_libsvm(ds));
  CHECK(back.features == ds.features);
  CHECK(back.labels == ds.labels);

  const auto path = std::filesystem::temp_directory_path() / "s3gd_roundtrip.libsvm";
  write_libsvm(ds, path);
  const Dataset from_file = load_libsvm(path);
  CHECK(from_file.features == ds.features);
  std::filesystem::remove(path);
}

TEST_CASE("class weights") {
  Dataset ds = parse_libsvm("+1 1:1\n+1 1:2\n-1 1:3\n-1 1:4\n");
  CHECK(class_weights(ds) == Eigen::Vector4d(0.5, 0.5, 0.5, 0.5));

  ds = parse_libsvm("+1 1:1\n-1 1:2\n-1 1:3\n");
  CHECK(class_weights(ds) == Eigen::Vector3d(1.0, 0.5, 0.5));

  ds = parse_libsvm("+1 1:1\n+1 1:2\n");
  CHECK_THROWS_WITH_AS(class_weights(ds), "cannot balance one class", ValidationError);
}

TEST_CASE("class weights sum to one per class on random imbalanced data") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Dataset ds = testing::random_dataset(37 + seed, 3, seed);
    const Eigen::VectorXd w = class_weights(ds);
    double pos = 0.0, neg = 0.0;
    for (Index i = 0; i < ds.size(); ++i) (ds.labels[i] > 0 ? pos : neg) += w[i];
    CHECK(std::abs(pos - 1.0) <= 1e-12);
    CHECK(std::abs(neg - 1.0) <= 1e-12);
    CHECK((w.array() >= 0.0).all());
  }
}

TEST_CASE("synthetic generator is deterministic per seed") {
  SyntheticSpec spec;
  spec.n = 100;
  spec.d = 2;
  spec.clusters = 2;
  spec.separation = 4;
  spec.seed = 7;
  const Dataset a = synth_gaussian(spec), b = synth_gaussian(spec);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  spec.seed = 8;
  CHECK(synth_gaussian(spec).features != a.features);
}

TEST_CASE("synthetic cluster means sit `separation` apart") {
  SyntheticSpec spec;
  spec.n = 20000;
  spec.d = 3;
  spec.clusters = 2;
  spec.separation = 6.0;
  spec.intercept = false;
  const Dataset ds = synth_gaussian(spec);
  Eigen::VectorXd m0 = Eigen::VectorXd::Zero(3), m1 = Eigen::VectorXd::Zero(3);
  for (Index i = 0; i < ds.size(); ++i) (i % 2 == 0 ? m0 : m1) += ds.features.col(i);
  m0 /= spec.n / 2.0;
  m1 /= spec.n / 2.0;
  CHECK((m0 - m1).norm() == doctest::Approx(6.0).epsilon(0.02));
}

TEST_CASE("widely separated clusters are linearly separable") {
  SyntheticSpec spec;
  spec.n = 200;
  spec.d = 5;
  spec.clusters = 2;
  spec.separation = 100.0;
  const Dataset ds = synth_gaussian(spec);
  Regularizer reg;
  reg.lambda = 1e-4;
  reg.skip_intercept = true;
  const auto sol = solve_reference(ds, LossModel{}, reg, 1e-8, 20000);
  Index errors = 0;
  for (Index i = 0; i < ds.size(); ++i)
    if (ds.labels[i] * ds.features.col(i).dot(sol.w) <= 0.0) ++errors;
  CHECK(errors == 0);
}

TEST_CASE("unit-norm option scales samples but not the intercept") {
  LoadOptions opts;
  opts.unit_norm = true;
  const Dataset ds = parse_libsvm("+1 1:3 2:4\n-1 2:2\n", opts);
  CHECK(ds.features.col(0).head(2).norm() == doctest::Approx(1.0));
  CHECK(ds.features(2, 0) == 1.0);
  CHECK(ds.features.col(1) == Eigen::Vector3d(0, 1, 1));
}
