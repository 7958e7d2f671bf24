#pragma once

#include <Eigen/Dense>

#include <string>

namespace s3gd {

enum class RegKind { tikhonov, l1, elastic_net };

/// Non-smooth part R(w).
///
///   tikhonov     lambda ||w||^2
///   l1           lambda ||w||_1
///   elastic_net  lambda (1 - alpha) ||w||_1 + lambda alpha ||w||^2
///
/// With `skip_intercept` the last coordinate is left unpenalized.
struct Regularizer {
  RegKind kind = RegKind::tikhonov;
  double lambda = 1e-3;
  double alpha = 0.5;
  bool skip_intercept = false;

  void validate() const;
};

RegKind parse_reg_kind(const std::string& name);
std::string to_string(RegKind kind);

double reg_value(const Regularizer& reg, const Eigen::VectorXd& w);

/// argmin_w 1/2 ||w - u||^2 + eta R(w). eta = 0 is the identity.
Eigen::VectorXd prox(const Regularizer& reg, const Eigen::VectorXd& u, double eta);
void prox_inplace(const Regularizer& reg, Eigen::VectorXd& u, double eta);

/// Strong-convexity modulus contributed by R: 2 lambda for tikhonov,
/// 2 lambda alpha for elastic net, 0 for l1.
double strong_convexity(const Regularizer& reg);

}  // namespace s3gd
