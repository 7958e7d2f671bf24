#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace s3gd {

using Index = Eigen::Index;

/// Binary classification data, one sample per column.
///
/// `features` is d x n. When `has_intercept` is set, the last feature row is
/// the constant 1 appended at load time and is never serialized back out.
/// `weights` multiply each sample's loss: P(w) = sum_i weights[i] * psi_i(w).
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;
  Eigen::VectorXd weights;
  bool has_intercept = false;
  std::vector<std::string> names;

  Index dims() const { return features.rows(); }
  Index size() const { return features.cols(); }
  Index count_positive() const;
  Index count_negative() const { return size() - count_positive(); }

  /// Throws ValidationError unless the invariants hold.
  void validate() const;
};

struct LoadOptions {
  bool intercept = true;
  bool unit_norm = false;
  /// 0 means "max index seen in the file".
  Index min_features = 0;
};

/// Reads `label idx:val ...` lines with 1-based ascending indices.
/// Labels must be +1/-1 (a bare `1` is accepted as +1); weights are 1/n.
Dataset load_libsvm(const std::filesystem::path& path, const LoadOptions& opts = {});
Dataset parse_libsvm(const std::string& text, const LoadOptions& opts = {});

/// Writes features (excluding any intercept row) and labels in LIBSVM format.
/// Zero entries are omitted; values are printed with round-trip precision.
void write_libsvm(const Dataset& ds, const std::filesystem::path& path);
std::string format_libsvm(const Dataset& ds);

/// 1/|Y+| for positives, 1/|Y-| for negatives; each class sums to 1.
Eigen::VectorXd class_weights(const Dataset& ds);

/// Scales every sample (excluding the intercept row) to unit Euclidean norm.
void normalize_rows_to_unit(Dataset& ds);

struct SyntheticSpec {
  Index n = 1000;
  Index d = 10;
  Index clusters = 2;
  double separation = 4.0;
  std::uint64_t seed = 7;
  bool intercept = true;
};

/// Isotropic unit-variance Gaussian mixture. Cluster c has its mean at
/// radius separation/2 along a seeded random direction, with clusters 0 and 1
/// pointing in opposite directions so that their means are `separation` apart.
/// Labels follow cluster parity (even -> +1, odd -> -1); sample i belongs to
/// cluster i % clusters.
Dataset synth_gaussian(const SyntheticSpec& spec);

/// Subset of columns, keeping weights as they are.
Dataset select_samples(const Dataset& ds, const std::vector<Index>& indices);

}  // namespace s3gd
