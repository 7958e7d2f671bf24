#include "s3gd/prox.hpp"

#include "s3gd/errors.hpp"

#include <cmath>

namespace s3gd {

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

void Regularizer::validate() const {
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
}

RegKind parse_reg_kind(const std::string& name) {
  if (name == "tikhonov" || name == "l2") return RegKind::tikhonov;
  if (name == "l1") return RegKind::l1;
  if (name == "elastic-net" || name == "elastic_net") return RegKind::elastic_net;
  throw ValidationError("unknown regularizer '" + name + "'");
}

std::string to_string(RegKind kind) {
  switch (kind) {
    case RegKind::tikhonov: return "tikhonov";
    case RegKind::l1: return "l1";
    case RegKind::elastic_net: return "elastic-net";
  }
  return "?";
}

double reg_value(const Regularizer& reg, const Eigen::VectorXd& w) {
  const Eigen::Index d = w.size() - (reg.skip_intercept && w.size() > 0 ? 1 : 0);
  const auto v = w.head(d);
  switch (reg.kind) {
    case RegKind::tikhonov: return reg.lambda * v.squaredNorm();
    case RegKind::l1: return reg.lambda * v.lpNorm<1>();
    case RegKind::elastic_net:
      return reg.lambda * (1.0 - reg.alpha) * v.lpNorm<1>() + reg.lambda * reg.alpha * v.squaredNorm();
  }
  return 0.0;
}

void prox_inplace(const Regularizer& reg, Eigen::VectorXd& u, double eta) {
  if (eta < 0.0) throw ValidationError("prox step must be >= 0");
  if (eta == 0.0 || reg.lambda == 0.0) return;
  const Eigen::Index d = u.size() - (reg.skip_intercept && u.size() > 0 ? 1 : 0);
  auto v = u.head(d);
  switch (reg.kind) {
    case RegKind::tikhonov:
      v /= 1.0 + 2.0 * eta * reg.lambda;
      break;
    case RegKind::l1: {
      const double t = eta * reg.lambda;
      for (Eigen::Index j = 0; j < d; ++j) v[j] = soft_threshold(v[j], t);
      break;
    }
    case RegKind::elastic_net: {
      const double t = eta * reg.lambda * (1.0 - reg.alpha);
      const double scale = 1.0 + 2.0 * eta * reg.lambda * reg.alpha;
      for (Eigen::Index j = 0; j < d; ++j) v[j] = soft_threshold(v[j], t) / scale;
      break;
    }
  }
}

Eigen::VectorXd prox(const Regularizer& reg, const Eigen::VectorXd& u, double eta) {
  Eigen::VectorXd out = u;
  prox_inplace(reg, out, eta);
  return out;
}

double strong_convexity(const Regularizer& reg) {
  switch (reg.kind) {
    case RegKind::tikhonov: return 2.0 * reg.lambda;
    case RegKind::l1: return 0.0;
    case RegKind::elastic_net: return 2.0 * reg.lambda * reg.alpha;
  }
  return 0.0;
}

}  // namespace s3gd
