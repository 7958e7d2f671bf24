#include "s3gd/optimizers.hpp"

#include "s3gd/diagnostics.hpp"
#include "s3gd/errors.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace s3gd {

Algorithm parse_algorithm(const std::string& name) {
  if (name == "sgd") return Algorithm::sgd;
  if (name == "ssgd") return Algorithm::ssgd;
  if (name == "svrg" || name == "prox-svrg") return Algorithm::svrg;
  if (name == "scv") return Algorithm::scv;
  if (name == "s3gd") return Algorithm::s3gd;
  throw ValidationError("unknown algorithm '" + name + "'");
}

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::sgd: return "sgd";
    case Algorithm::ssgd: return "ssgd";
    case Algorithm::svrg: return "svrg";
    case Algorithm::scv: return "scv";
    case Algorithm::s3gd: return "s3gd";
  }
  return "?";
}

bool is_nested(Algorithm algo) { return algo == Algorithm::svrg || algo == Algorithm::s3gd; }

SnapshotRule parse_snapshot_rule(const std::string& name) {
  if (name == "last") return SnapshotRule::last;
  if (name == "best") return SnapshotRule::best;
  throw ValidationError("snapshot must be 'last' or 'best', got '" + name + "'");
}

std::string to_string(SnapshotRule rule) { return rule == SnapshotRule::last ? "last" : "best"; }

Index RunConfig::inner_length() const {
  if (inner > 0) return inner;
  return algorithm == Algorithm::svrg ? 50 : 20;
}

void RunConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ValidationError("eta must be finite and >= 0");
  if (batch < 1) throw ValidationError("batch size must be >= 1");
  if (inner < 0) throw ValidationError("inner-loop length must be >= 1");
  if (iterations < 0) throw ValidationError("iterations must be >= 0");
  if (checkpoint_every < 1) throw ValidationError("checkpoint_every must be >= 1");
  if (variance_trials == 1) throw ValidationError("variance_trials must be 0 or >= 2");
  if (!(divergence_factor > 1.0)) throw ValidationError("divergence_factor must exceed 1");
}

double composite_objective(const Eigen::VectorXd& w, const Dataset& ds, const LossModel& loss,
                           const Regularizer& reg) {
  return smooth_objective(w, ds, loss) + reg_value(reg, w);
}

double composite_objective(const Eigen::VectorXd& w, const Problem& problem) {
  return composite_objective(w, problem.data(), problem.loss, problem.reg);
}

namespace {

// Accumulates elapsed time only while running, so evaluation work done at
// checkpoints stays off the clock.
class Stopwatch {
 public:
  void start() { begin_ = clock::now(); }
  void stop() { total_ += std::chrono::duration<double>(clock::now() - begin_).count(); }
  double seconds() const { return total_; }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point begin_;
  double total_ = 0.0;
};

std::string describe(const RunConfig& cfg) {
  std::ostringstream s;
  s << "algorithm=" << to_string(cfg.algorithm) << " eta=" << format_number(cfg.eta) << " batch=" << cfg.batch;
  if (is_nested(cfg.algorithm)) s << " inner=" << cfg.inner_length() << " snapshot=" << to_string(cfg.snapshot);
  s << " iterations=" << cfg.iterations << " seed=" << cfg.seed;
  return s.str();
}

}  // namespace

Trace run_with(GradientEstimator& estimator, const RunConfig& cfg, const Problem& problem) {
  cfg.validate();
  problem.reg.validate();
  const Dataset& ds = problem.data();
  const Index d = ds.dims();
  const Index inner = cfg.inner_length();
  const bool nested = estimator.nested();
  const bool track_best = nested && cfg.snapshot == SnapshotRule::best;

  Trace trace;
  trace.algorithm = to_string(cfg.algorithm);
  trace.eta = cfg.eta;
  trace.seed = cfg.seed;
  trace.config = describe(cfg);

  Rng rng(cfg.seed);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd g(d), w_eval(d), best_w;
  double best_obj = 0.0;

  const double f0 = composite_objective(w, problem);
  const double limit = cfg.divergence_factor * (f0 > 0.0 ? f0 : 1.0);
  auto make_record = [&](std::int64_t iter, double wall, double obj) {
    TraceRecord r;
    r.iter = iter;
    r.wall_s = wall;
    r.train_obj = obj;
    if (problem.test) r.test_obj = composite_objective(w, *problem.test, problem.loss, problem.reg);
    return r;
  };
  trace.records.push_back(make_record(0, 0.0, f0));
  if (cfg.keep_iterates) trace.iterates.push_back(w);

  Stopwatch clock;
  clock.start();
  for (std::int64_t t = 0; t < cfg.iterations; ++t) {
    if (nested && t % inner == 0) {
      if (track_best && t > 0) w = best_w;
      estimator.refresh(w);
      if (track_best) {
        best_w = w;
        best_obj = composite_objective(w, problem);
      }
    }
    const bool checkpoint = (t + 1) % cfg.checkpoint_every == 0 || t + 1 == cfg.iterations;
    const bool instrument = checkpoint && (cfg.track_correlation || cfg.variance_trials > 1);
    if (instrument) w_eval = w;

    const auto batch = estimator.draw(rng);
    estimator.evaluate(w, batch, g);
    w.noalias() -= cfg.eta * g;
    prox_inplace(problem.reg, w, cfg.eta);
    trace.iterations = t + 1;

    if (track_best) {
      const double obj = composite_objective(w, problem);
      if (obj < best_obj) {
        best_obj = obj;
        best_w = w;
      }
    }
    if (cfg.keep_iterates) trace.iterates.push_back(w);

    const bool blown = !w.allFinite();
    if (!checkpoint && !blown) continue;

    clock.stop();
    TraceRecord rec = make_record(t + 1, clock.seconds(), composite_objective(w, problem));
    if (instrument) {
      const Eigen::VectorXd exact = full_gradient(w_eval, ds, problem.loss);
      if (cfg.track_correlation) rec.grad_corr = pearson_correlation(g, exact).value;
      if (cfg.variance_trials > 1) {
        Rng probe(cfg.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t + 1)));
        rec.est_var = estimator_variance(estimator, w_eval, exact, cfg.variance_trials, probe).mean;
      }
    }
    trace.records.push_back(rec);
    if (blown || !std::isfinite(rec.train_obj) || rec.train_obj > limit) {
      trace.diverged = true;
      std::ostringstream msg;
      msg << "diverged at iteration " << (t + 1) << ": objective " << format_number(rec.train_obj)
          << " exceeds " << format_number(cfg.divergence_factor) << " x initial " << format_number(f0);
      trace.diagnostic = msg.str();
      break;
    }
    clock.start();
  }
  if (!trace.diverged) clock.stop();
  trace.final_w = w;
  return trace;
}

Trace run_sgd(const RunConfig& cfg, const Problem& problem) {
  WeightedSamplingEstimator est(problem.data(), problem.loss, cfg.batch);
  return run_with(est, cfg, problem);
}

Trace run_ssgd(const RunConfig& cfg, const Problem& problem) {
  const Dataset& ds = problem.data();
  if (cfg.batch > ds.size()) throw ValidationError("ssgd needs batch (cluster count) <= n");
  const auto t0 = std::chrono::steady_clock::now();
  const KMeansResult km = kmeans(ds, cfg.batch, cfg.seed, cfg.kmeans_iter);
  StratifiedEstimator est(ds, problem.loss, km.assignment);
  const double setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Trace trace = run_with(est, cfg, problem);
  trace.setup_s = setup;
  return trace;
}

Trace run_svrg(const RunConfig& cfg, const Problem& problem) {
  SvrgEstimator est(problem.data(), problem.loss, cfg.batch);
  return run_with(est, cfg, problem);
}

Trace run_scv(const RunConfig& cfg, const Problem& problem) {
  const auto t0 = std::chrono::steady_clock::now();
  ScvEstimator est(problem.data(), problem.loss, cfg.batch);
  const double setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Trace trace = run_with(est, cfg, problem);
  trace.setup_s = setup;
  return trace;
}

Trace run_s3gd(const RunConfig& cfg, const Problem& problem, const AnchorModel& model) {
  S3gdEstimator est(problem.data(), problem.loss, cfg.batch, model);
  Trace trace = run_with(est, cfg, problem);
  trace.setup_s = model.preprocess_seconds;
  return trace;
}

Trace run(const RunConfig& cfg, const Problem& problem, const AnchorModel* model) {
  switch (cfg.algorithm) {
    case Algorithm::sgd: return run_sgd(cfg, problem);
    case Algorithm::ssgd: return run_ssgd(cfg, problem);
    case Algorithm::svrg: return run_svrg(cfg, problem);
    case Algorithm::scv: return run_scv(cfg, problem);
    case Algorithm::s3gd:
      if (!model) throw ValidationError("s3gd needs an anchor model");
      return run_s3gd(cfg, problem, *model);
  }
  throw ValidationError("unknown algorithm");
}

Certificate certificate(double mu_P, double mu_R, double L, double eta, std::int64_t m_inner) {
  const double mu = mu_P + mu_R;
  if (!(L > 0.0)) throw ValidationError("certificate needs L > 0");
  if (!(mu > 0.0)) throw ValidationError("certificate needs mu_P + mu_R > 0");
  if (m_inner < 1) throw ValidationError("certificate needs an inner-loop length >= 1");
  const double m = static_cast<double>(m_inner);
  const double shrink = 1.0 - 4.0 * L * eta;
  Certificate c;
  c.rho = 1.0 / (mu * eta * shrink * m) + 4.0 * L * eta * (m + 1.0) / (shrink * m);
  c.delta_coeff = 8.0 * eta * eta * L * mu * m / (eta * mu * (m - 4.0 * eta * L * (2.0 * m + 1.0)) - 1.0);
  c.feasible = eta > 0.0 && eta < 1.0 / (8.0 * L) && c.rho > 0.0 && c.rho < 1.0;
  return c;
}

double global_lipschitz(const Dataset& ds, const LossModel& loss) {
  const Eigen::MatrixXd xw = ds.features * ds.weights.asDiagonal();
  const Eigen::MatrixXd gram = xw * ds.features.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return lipschitz_factor(loss) * eig.eigenvalues().maxCoeff();
}

ReferenceSolution solve_reference(const Dataset& ds, const LossModel& loss, const Regularizer& reg, double tol,
                                  int max_iter) {
  reg.validate();
  const double L = std::max(global_lipschitz(ds, loss), 1e-12);
  const double step = 1.0 / L;
  const Index d = ds.dims();

  ReferenceSolution sol;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d), y = w, w_next(d), grad(d);
  double t = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    grad = full_gradient(y, ds, loss);
    w_next = prox(reg, y - step * grad, step);
    // Gradient-based restart: drop momentum once it points uphill.
    if ((y - w_next).dot(w_next - w) > 0.0) {
      t = 1.0;
      y = w;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = w_next + ((t - 1.0) / t_next) * (w_next - w);
    w.swap(w_next);
    t = t_next;
    sol.iterations = it;

    if (it % 10 == 0 || it == max_iter) {
      const Eigen::VectorXd gw = full_gradient(w, ds, loss);
      sol.grad_map_norm = L * (w - prox(reg, w - step * gw, step)).norm();
      if (sol.grad_map_norm <= tol) {
        sol.converged = true;
        break;
      }
    }
  }
  sol.w = w;
  sol.objective = composite_objective(w, ds, loss, reg);
  return sol;
}

}  // namespace s3gd
