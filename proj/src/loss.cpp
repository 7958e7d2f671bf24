#include "s3gd/loss.hpp"

#include "s3gd/errors.hpp"

#include <algorithm>
#include <cmath>

namespace s3gd {

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace

void LossModel::validate() const {
  if (kind == LossKind::smoothed_hinge && !(beta > 0.0))
    throw ValidationError("smoothed hinge requires beta > 0");
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "logistic") return LossKind::logistic;
  if (name == "smoothed-hinge" || name == "smoothed_hinge") return LossKind::smoothed_hinge;
  if (name == "squared-hinge" || name == "squared_hinge") return LossKind::squared_hinge;
  throw ValidationError("unknown loss '" + name + "'");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::logistic: return "logistic";
    case LossKind::smoothed_hinge: return "smoothed-hinge";
    case LossKind::squared_hinge: return "squared-hinge";
  }
  return "?";
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double atomic_value(const LossModel& loss, double u, double y) {
  const double margin = y * u;
  switch (loss.kind) {
    case LossKind::logistic: return softplus(-margin);
    case LossKind::smoothed_hinge: return softplus(-loss.beta * (margin - 1.0)) / loss.beta;
    case LossKind::squared_hinge: {
      const double slack = std::max(0.0, 1.0 - margin);
      return 0.5 * slack * slack;
    }
  }
  return 0.0;
}

double label_free_derivative(const LossModel& loss, double u) {
  switch (loss.kind) {
    case LossKind::logistic: return sigmoid(-u);
    case LossKind::smoothed_hinge: return sigmoid(-loss.beta * (u - 1.0));
    case LossKind::squared_hinge: return std::max(0.0, 1.0 - u);
  }
  return 0.0;
}

double atomic_derivative(const LossModel& loss, double u, double y) {
  return -y * label_free_derivative(loss, y * u);
}

double lipschitz_factor(const LossModel& loss) {
  switch (loss.kind) {
    case LossKind::logistic: return 0.25;
    case LossKind::smoothed_hinge: return 0.25 * loss.beta;
    case LossKind::squared_hinge: return 1.0;
  }
  return 0.0;
}

SmoothnessReport smoothness(const LossModel& loss, const Dataset& ds) {
  if (ds.size() < 1) throw ValidationError("no samples");
  const Eigen::VectorXd sq = ds.features.colwise().squaredNorm().transpose() * lipschitz_factor(loss);
  return {sq.maxCoeff(), sq.mean(), 0.0};
}

double smooth_objective(const Eigen::VectorXd& w, const Dataset& ds, const LossModel& loss) {
  if (w.size() != ds.dims()) throw ValidationError("parameter dimension does not match dataset");
  if (ds.size() < 1) throw ValidationError("no samples");
  double total = 0.0;
  for (Index i = 0; i < ds.size(); ++i) {
    const double u = ds.features.col(i).dot(w);
    total += ds.weights[i] * atomic_value(loss, u, ds.labels[i]);
  }
  return total;
}

}  // namespace s3gd
