#pragma once

#include "s3gd/dataset.hpp"

#include <string>

namespace s3gd {

enum class LossKind { logistic, smoothed_hinge, squared_hinge };

/// Smooth atomic loss psi(u; y) of the margin u = w'x.
///
///   logistic        log(1 + exp(-y u))
///   smoothed_hinge  (1/beta) log(1 + exp(-beta (y u - 1)))
///   squared_hinge   1/2 ((1 - y u)_+)^2
struct LossModel {
  LossKind kind = LossKind::logistic;
  double beta = 10.0;

  void validate() const;
};

LossKind parse_loss_kind(const std::string& name);
std::string to_string(LossKind kind);

/// Logistic sigmoid evaluated without overflow for any finite t.
double sigmoid(double t);

double atomic_value(const LossModel& loss, double u, double y);

/// d psi / d u with the label folded in, so grad psi_i(w) = atomic_derivative * x_i.
/// Minimization convention: logistic gives -y * sigmoid(-y u).
double atomic_derivative(const LossModel& loss, double u, double y);

/// The label-free derivative magnitude a(u) = -atomic_derivative(u, +1).
///
/// sigmoid(-u) for logistic. For any label, atomic_derivative(u, y) equals
/// -y * a(y u); the anchor pipeline interpolates a(.) across anchors.
double label_free_derivative(const LossModel& loss, double u);

/// Per-sample Lipschitz constant of grad psi_i, given ||x_i||^2.
double lipschitz_factor(const LossModel& loss);

struct SmoothnessReport {
  double L_max = 0.0;
  double L_avg = 0.0;
  double mu_P = 0.0;
};

SmoothnessReport smoothness(const LossModel& loss, const Dataset& ds);

/// Sum_i weights[i] * psi(x_i' w; y_i).
double smooth_objective(const Eigen::VectorXd& w, const Dataset& ds, const LossModel& loss);

}  // namespace s3gd
