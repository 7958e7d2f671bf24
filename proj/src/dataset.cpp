#include "s3gd/dataset.hpp"

#include "s3gd/errors.hpp"
#include "s3gd/random.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <utility>

namespace s3gd {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_index(std::string_view token, long long& out) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

struct SparseRow {
  double label;
  std::vector<std::pair<Index, double>> entries;
};

}  // namespace

Index Dataset::count_positive() const { return (labels.array() > 0.0).count(); }

void Dataset::validate() const {
  if (size() < 1) throw ValidationError("no samples");
  if (dims() < 1) throw ValidationError("no feature dimensions");
  if (labels.size() != size() || weights.size() != size())
    throw ValidationError("labels and weights must have one entry per sample");
  if (!features.allFinite()) throw ValidationError("non-finite feature value");
  for (Index i = 0; i < size(); ++i) {
    if (labels[i] != 1.0 && labels[i] != -1.0)
      throw ValidationError("label of sample " + std::to_string(i) + " is not +1/-1");
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw ValidationError("weight of sample " + std::to_string(i) + " is negative or non-finite");
  }
}

Dataset parse_libsvm(const std::string& text, const LoadOptions& opts) {
  std::vector<SparseRow> rows;
  Index max_index = 0;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;

    SparseRow row;
    std::size_t pos = line.find_first_of(" \t");
    const std::string_view label_tok = line.substr(0, pos);
    if (!parse_double(label_tok, row.label))
      throw ParseError("cannot parse label '" + std::string(label_tok) + "'", line_no);
    if (row.label != 1.0 && row.label != -1.0)
      throw ValidationError("line " + std::to_string(line_no) + ": label '" + std::string(label_tok) +
                            "' is not +1/-1");

    long long prev = 0;
    while (pos != std::string_view::npos) {
      const auto start = line.find_first_not_of(" \t", pos);
      if (start == std::string_view::npos) break;
      pos = line.find_first_of(" \t", start);
      const std::string_view tok = line.substr(start, pos == std::string_view::npos ? pos : pos - start);
      const auto colon = tok.find(':');
      long long idx = 0;
      double val = 0.0;
      if (colon == std::string_view::npos || !parse_index(tok.substr(0, colon), idx) ||
          !parse_double(tok.substr(colon + 1), val))
        throw ParseError("malformed feature '" + std::string(tok) + "'", line_no);
      if (idx < 1) throw ParseError("feature index must be >= 1", line_no);
      if (idx <= prev) throw ParseError("feature indices must be strictly ascending", line_no);
      if (!std::isfinite(val)) throw ParseError("non-finite feature value", line_no);
      prev = idx;
      row.entries.emplace_back(static_cast<Index>(idx - 1), val);
      max_index = std::max<Index>(max_index, static_cast<Index>(idx));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("no samples");

  const Index d_raw = std::max(max_index, opts.min_features);
  const Index n = static_cast<Index>(rows.size());
  Dataset ds;
  ds.has_intercept = opts.intercept;
  ds.features = Eigen::MatrixXd::Zero(d_raw + (opts.intercept ? 1 : 0), n);
  ds.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    ds.labels[i] = rows[i].label;
    for (const auto& [j, v] : rows[i].entries) ds.features(j, i) = v;
  }
  if (opts.unit_norm) normalize_rows_to_unit(ds);
  if (opts.intercept) ds.features.row(d_raw).setOnes();
  ds.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (ds.dims() < 1) throw ValidationError("no feature dimensions");
  return ds;
}

Dataset load_libsvm(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_libsvm(buf.str(), opts);
}

std::string format_libsvm(const Dataset& ds) {
  std::ostringstream out;
  const Index d = ds.dims() - (ds.has_intercept ? 1 : 0);
  char buf[64];
  for (Index i = 0; i < ds.size(); ++i) {
    out << (ds.labels[i] > 0 ? "+1" : "-1");
    for (Index j = 0; j < d; ++j) {
      const double v = ds.features(j, i);
      if (v == 0.0) continue;
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out << ' ' << (j + 1) << ':' << std::string_view(buf, ptr - buf);
    }
    out << '\n';
  }
  return out.str();
}

void write_libsvm(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << format_libsvm(ds);
}

Eigen::VectorXd class_weights(const Dataset& ds) {
  const Index pos = ds.count_positive();
  const Index neg = ds.size() - pos;
  if (pos == 0 || neg == 0) throw ValidationError("cannot balance one class");
  Eigen::VectorXd w(ds.size());
  for (Index i = 0; i < ds.size(); ++i)
    w[i] = ds.labels[i] > 0 ? 1.0 / static_cast<double>(pos) : 1.0 / static_cast<double>(neg);
  return w;
}

void normalize_rows_to_unit(Dataset& ds) {
  const Index d = ds.dims() - (ds.has_intercept ? 1 : 0);
  for (Index i = 0; i < ds.size(); ++i) {
    auto x = ds.features.col(i).head(d);
    const double norm = x.norm();
    if (norm > 0.0) x /= norm;
  }
}

Dataset synth_gaussian(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.d < 1 || spec.clusters < 1)
    throw ValidationError("synth_gaussian needs n, d, clusters >= 1");
  Rng rng(spec.seed);
  Eigen::MatrixXd means(spec.d, spec.clusters);
  for (Index c = 0; c < spec.clusters; ++c) {
    Eigen::VectorXd dir(spec.d);
    if (c == 1) {
      dir = -means.col(0);
    } else {
      do {
        for (Index j = 0; j < spec.d; ++j) dir[j] = rng.normal();
      } while (dir.norm() == 0.0);
      dir *= 0.5 * spec.separation / dir.norm();
    }
    means.col(c) = dir;
  }

  Dataset ds;
  ds.has_intercept = spec.intercept;
  ds.features.resize(spec.d + (spec.intercept ? 1 : 0), spec.n);
  ds.labels.resize(spec.n);
  for (Index i = 0; i < spec.n; ++i) {
    const Index c = i % spec.clusters;
    for (Index j = 0; j < spec.d; ++j) ds.features(j, i) = means(j, c) + rng.normal();
    if (spec.intercept) ds.features(spec.d, i) = 1.0;
    ds.labels[i] = (c % 2 == 0) ? 1.0 : -1.0;
  }
  ds.weights = Eigen::VectorXd::Constant(spec.n, 1.0 / static_cast<double>(spec.n));
  return ds;
}

Dataset select_samples(const Dataset& ds, const std::vector<Index>& indices) {
  Dataset out;
  out.has_intercept = ds.has_intercept;
  const Index n = static_cast<Index>(indices.size());
  out.features.resize(ds.dims(), n);
  out.labels.resize(n);
  out.weights.resize(n);
  for (Index t = 0; t < n; ++t) {
    const Index i = indices[t];
    out.features.col(t) = ds.features.col(i);
    out.labels[t] = ds.labels[i];
    out.weights[t] = ds.weights[i];
    if (!ds.names.empty()) out.names.push_back(ds.names[i]);
  }
  return out;
}

}  // namespace s3gd
