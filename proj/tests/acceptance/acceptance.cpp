// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Pass criterion ids (A1 .. A11) as arguments to run a subset.

#include "s3gd/anchors.hpp"
#include "s3gd/diagnostics.hpp"
#include "s3gd/errors.hpp"
#include "s3gd/estimators.hpp"
#include "s3gd/experiment.hpp"
#include "s3gd/gradients.hpp"
#include "s3gd/loss.hpp"
#include "s3gd/optimizers.hpp"
#include "s3gd/prox.hpp"
#include "s3gd/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace s3gd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(4) << x;
  return s.str();
}

Eigen::VectorXd gaussian_vector(Index d, Rng& rng, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (Index j = 0; j < d; ++j) v[j] = scale * rng.normal();
  return v;
}

Dataset gaussian_dataset(Index n, Index d, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.features.resize(d, n);
  ds.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) ds.features(j, i) = rng.normal();
    ds.labels[i] = rng.uniform() < 0.5 ? 1.0 : -1.0;
  }
  ds.labels[0] = 1.0;
  ds.labels[1] = -1.0;
  ds.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return ds;
}

Dataset clustered(Index n, Index d, Index clusters, std::uint64_t seed, double separation = 3.0) {
  SyntheticSpec spec;
  spec.n = n;
  spec.d = d;
  spec.clusters = clusters;
  spec.separation = separation;
  spec.seed = seed;
  spec.intercept = false;
  return synth_gaussian(spec);
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  const Dataset ds = gaussian_dataset(50, 10, 101);
  Rng rng(102);
  double worst = 0.0;
  for (auto kind : {LossKind::logistic, LossKind::smoothed_hinge, LossKind::squared_hinge}) {
    const LossModel loss{kind, 10.0};
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd w = gaussian_vector(10, rng, 0.5);
      const Eigen::VectorXd g = full_gradient(w, ds, loss);
      Eigen::VectorXd fd(10);
      for (Index j = 0; j < 10; ++j) {
        const double h = 1e-6;
        Eigen::VectorXd a = w, b = w;
        a[j] += h;
        b[j] -= h;
        fd[j] = (smooth_objective(a, ds, loss) - smooth_objective(b, ds, loss)) / (2.0 * h);
      }
      worst = std::max(worst, (g - fd).norm() / std::max(g.norm(), 1e-12));
    }
  }
  return {worst <= 1e-6, "max relative error " + fmt(worst)};
}

// Scalar prox by a coarse grid refined twice around its best point.
double grid_prox(const Regularizer& reg, double u, double eta) {
  Regularizer one = reg;
  one.skip_intercept = false;
  auto f = [&](double w) { return 0.5 * (w - u) * (w - u) + eta * reg_value(one, Eigen::VectorXd::Constant(1, w)); };
  double center = 0.0, half = std::abs(u) + 1.0;
  for (int level = 0; level < 3; ++level) {
    const double h = half / 1000.0;
    double best = center, best_val = f(center);
    for (int s = -1000; s <= 1000; ++s) {
      const double w = center + s * h;
      const double v = f(w);
      if (v < best_val) {
        best_val = v;
        best = w;
      }
    }
    center = best;
    half = 2.0 * h;
  }
  return center;
}

Outcome prox_check() {
  Rng rng(201);
  double worst_grid = 0.0;
  int beaten = 0;
  for (auto kind : {RegKind::tikhonov, RegKind::l1, RegKind::elastic_net}) {
    for (int t = 0; t < 500; ++t) {
      const Regularizer reg{kind, 2.0 * rng.uniform(), rng.uniform(), false};
      const double eta = 0.01 + 2.0 * rng.uniform();
      const Eigen::VectorXd u = gaussian_vector(4, rng, 3.0);
      const Eigen::VectorXd w = prox(reg, u, eta);
      auto obj = [&](const Eigen::VectorXd& v) { return 0.5 * (v - u).squaredNorm() + eta * reg_value(reg, v); };
      const double best = obj(w);
      for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd delta = gaussian_vector(4, rng);
        delta *= 0.1 * rng.uniform() / delta.norm();
        if (obj(w + delta) < best - 1e-12) ++beaten;
      }
      for (Index j = 0; j < 4; ++j) worst_grid = std::max(worst_grid, std::abs(w[j] - grid_prox(reg, u[j], eta)));
    }
  }
  return {beaten == 0 && worst_grid <= 1e-4,
          std::to_string(beaten) + " perturbations beat the prox, max grid gap " + fmt(worst_grid)};
}

Outcome grad_h_paths() {
  Dataset ds = gaussian_dataset(200, 15, 301);
  ds.weights = class_weights(ds);
  const AnchorModel model = build_anchor_model(ds, {10, 3, 20, 7, SigmaRule::as_printed});
  Rng rng(302);
  double worst = 0.0, worst_decoupled = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd w = gaussian_vector(15, rng, 0.3);
    const AnchorDerivatives derivs = anchor_derivatives(w, model.anchors, LossModel{});
    Eigen::VectorXd direct = Eigen::VectorXd::Zero(15);
    for (Index i = 0; i < ds.size(); ++i)
      direct += ds.weights[i] * approx_sample_gradient(i, ds, model.graph, derivs);
    const Eigen::VectorXd cached = approx_full_gradient(model.cache, derivs);
    const Eigen::VectorXd decoupled = approx_full_gradient_decoupled(model.cache, derivs.label_free);
    const double scale = std::max(1.0, direct.norm());
    worst = std::max(worst, (cached - direct).norm() / scale);
    worst_decoupled = std::max(worst_decoupled, (decoupled - direct).norm() / scale);
  }
  return {worst <= 1e-10 && worst_decoupled <= 1e-10 && ds.count_negative() > 0,
          "partitioned " + fmt(worst) + ", with negative-label correction " + fmt(worst_decoupled)};
}

Outcome unbiasedness() {
  const Index n = 500, d = 10, p = 10, trials = 20000;
  Dataset ds = clustered(n, d, 4, 401);
  const LossModel loss;
  Rng rng(402);
  const Eigen::VectorXd w = gaussian_vector(d, rng, 0.3), w_tilde = gaussian_vector(d, rng, 0.3);
  const Eigen::VectorXd exact = full_gradient(w, ds, loss);

  const KMeansResult strata = kmeans(ds, p, 403, 20);
  const AnchorModel model = build_anchor_model(ds, {50, 3, 20, 404, SigmaRule::as_printed});
  WeightedSamplingEstimator sgd(ds, loss, p);
  StratifiedEstimator ssgd(ds, loss, strata.assignment);
  ScvEstimator scv(ds, loss, p);
  S3gdEstimator s3gd(ds, loss, p, model);
  SvrgEstimator svrg(ds, loss, p);
  s3gd.refresh(w_tilde);
  svrg.refresh(w_tilde);

  const std::vector<std::pair<std::string, const GradientEstimator*>> all{
      {"sgd", &sgd}, {"ssgd", &ssgd}, {"scv", &scv}, {"s3gd", &s3gd}, {"svrg", &svrg}};
  std::string detail;
  bool ok = true;
  for (const auto& [name, est] : all) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d), g;
    for (Index t = 0; t < trials; ++t) {
      est->evaluate(w, est->draw(rng), g);
      sum += g;
      sq += g.cwiseProduct(g);
    }
    const Eigen::VectorXd mean = sum / double(trials);
    const Eigen::VectorXd var = (sq / double(trials) - mean.cwiseProduct(mean)) * (double(trials) / (trials - 1.0));
    double worst = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double se = std::sqrt(std::max(var[j], 0.0) / double(trials));
      const double dev = std::abs(mean[j] - exact[j]);
      if (se > 0.0) {
        worst = std::max(worst, dev / se);
      } else if (dev > 1e-12) {
        worst = INFINITY;
      }
    }
    ok &= worst <= 4.0;
    detail += name + " " + fmt(worst) + "se  ";
  }
  return {ok, "max |mean - grad P| per component: " + detail};
}

Outcome variance_reduction() {
  const Dataset ds = clustered(2000, 20, 10, 501);
  const LossModel loss;
  const Regularizer reg{RegKind::tikhonov, 1e-3, 0.5, false};
  const ReferenceSolution ref = solve_reference(ds, loss, reg);
  Rng rng(502);
  const Eigen::VectorXd w = ref.w + gaussian_vector(20, rng, 1e-3);
  const AnchorModel model = build_anchor_model(ds, {100, 3, 20, 503, SigmaRule::as_printed});
  S3gdEstimator s3gd(ds, loss, 10, model);
  s3gd.refresh(w);
  MinibatchEstimator plain(ds, loss, 10);
  const auto cmp = compare_variance(plain, s3gd, w, full_gradient(w, ds, loss), 20000, rng);
  const double gap = cmp.diff_mean / cmp.diff_std_error;
  return {cmp.b.mean < cmp.a.mean && gap > 3.0,
          "plain " + fmt(cmp.a.mean) + " vs s3gd " + fmt(cmp.b.mean) + ", gap " + fmt(gap) + " se"};
}

Outcome svrg_equivalence() {
  const Dataset ds = clustered(300, 8, 5, 601);
  Problem problem;
  problem.train = &ds;
  problem.reg = {RegKind::elastic_net, 1e-3, 0.5, false};
  const AnchorModel identity = identity_anchor_model(ds);
  RunConfig cfg;
  cfg.eta = 0.5;
  cfg.iterations = 2000;
  cfg.inner = 50;
  cfg.seed = 602;
  cfg.checkpoint_every = 100;
  cfg.keep_iterates = true;
  cfg.algorithm = Algorithm::svrg;
  const Trace a = run(cfg, problem);
  cfg.algorithm = Algorithm::s3gd;
  const Trace b = run(cfg, problem, &identity);
  bool same = a.iterates.size() == 2001 && b.iterates.size() == 2001;
  std::size_t first_diff = 0;
  for (std::size_t k = 0; same && k < a.iterates.size(); ++k) {
    same = std::memcmp(a.iterates[k].data(), b.iterates[k].data(), sizeof(double) * a.iterates[k].size()) == 0;
    if (!same) first_diff = k;
  }
  return {same, same ? "2001 iterates bitwise identical" : "first difference at iterate " + std::to_string(first_diff)};
}

// Gap F(w) - F* at every record of a trace.
std::vector<double> gaps(const Trace& t, double f_star) {
  std::vector<double> out;
  for (const auto& r : t.records) out.push_back(r.train_obj - f_star);
  return out;
}

double plateau_of(const Trace& t, double f_star) {
  // mean gap over the second half of the run
  const std::int64_t half = t.iterations / 2;
  double sum = 0.0;
  int count = 0;
  for (const auto& r : t.records)
    if (r.iter > half) {
      sum += r.train_obj - f_star;
      ++count;
    }
  return sum / count;
}

Outcome geometric_convergence() {
  // Short feature vectors keep the data curvature near 2 lambda, so the
  // certificate-feasible inner loop is short and the descent spans many
  // outer loops.
  Dataset ds = clustered(1000, 10, 10, 701);
  normalize_rows_to_unit(ds);
  ds.features *= 0.1;
  Problem problem;
  problem.train = &ds;
  problem.reg = {RegKind::tikhonov, 1e-3, 0.5, false};
  const ReferenceSolution ref = solve_reference(ds, problem.loss, problem.reg, 1e-12);
  const double f_star = ref.objective;
  const double L = smoothness(problem.loss, ds).L_max;
  const double mu = strong_convexity(problem.reg);

  RunConfig cfg;
  cfg.eta = 10.0;
  cfg.inner = 100;
  cfg.iterations = 200 * cfg.inner;
  cfg.checkpoint_every = cfg.inner;
  cfg.seed = 702;
  const Certificate cert = certificate(0.0, mu, L, cfg.eta, cfg.inner);

  cfg.algorithm = Algorithm::svrg;
  const Trace svrg = run(cfg, problem);
  const double svrg_gap = svrg.records.back().train_obj - f_star;

  auto s3gd_run = [&](Index anchors, std::uint64_t seed, std::int64_t every) {
    const AnchorModel model = build_anchor_model(ds, {anchors, 3, 20, 703, SigmaRule::as_printed});
    RunConfig c = cfg;
    c.algorithm = Algorithm::s3gd;
    c.seed = seed;
    c.checkpoint_every = every;
    return run(c, problem, &model);
  };

  // outer-loop gaps for m = 100
  const Trace main_run = s3gd_run(100, 704, cfg.inner / 10);
  const double plateau = plateau_of(main_run, f_star);
  std::vector<double> outer;
  for (const auto& r : main_run.records)
    if (r.iter % cfg.inner == 0) outer.push_back(r.train_obj - f_star);
  std::size_t descending = 0;
  bool monotone = true;
  for (std::size_t s = 0; s < outer.size() && outer[s] > 2.0 * plateau; ++s) {
    ++descending;
    if (s > 0) monotone &= std::log(outer[s] - 0.9 * plateau) < std::log(outer[s - 1] - 0.9 * plateau);
  }

  // plateau against anchor count, averaged over seeds
  std::vector<double> plateaus;
  for (Index m : {10, 50, 200}) {
    double sum = 0.0;
    for (std::uint64_t seed : {711, 712, 713}) sum += plateau_of(s3gd_run(m, seed, cfg.inner / 10), f_star);
    plateaus.push_back(sum / 3.0);
  }
  const bool shrinking = plateaus[0] > plateaus[1] && plateaus[1] > plateaus[2];

  std::string outer_text;
  for (std::size_t s = 0; s < std::min<std::size_t>(outer.size(), 10); ++s) outer_text += fmt(outer[s]) + " ";
  const bool pass = cert.feasible && !svrg.diverged && svrg_gap < 1e-8 && plateau > 0.0 && descending >= 2 &&
                    monotone && shrinking;
  return {pass, "rho " + fmt(cert.rho) + (cert.feasible ? " feasible" : " infeasible") + ", svrg gap " +
                    fmt(svrg_gap) + ", s3gd plateau " + fmt(plateau) + " after " + std::to_string(descending) +
                    " descending outer loops (" + outer_text + "), plateau m=10/50/200: " + fmt(plateaus[0]) +
                    " / " + fmt(plateaus[1]) + " / " + fmt(plateaus[2])};
}

Outcome stepsize_selection() {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "s3gd_acceptance_a8";
  std::filesystem::remove_all(dir);
  ExperimentConfig cfg;
  cfg.synth = {2000, 10, 6, 3.0, 801, true};
  cfg.load.unit_norm = true;
  cfg.loss.kind = LossKind::squared_hinge;
  cfg.reg = {RegKind::tikhonov, 1e-3, 0.5, true};
  cfg.anchors = {100, 3, 20, 802, SigmaRule::as_printed};
  cfg.algorithms = {Algorithm::sgd, Algorithm::ssgd, Algorithm::svrg, Algorithm::scv, Algorithm::s3gd};
  cfg.etas = {0.1, 1.0, 5.0, 10.0};
  cfg.seeds = {1, 2, 3};
  cfg.iterations = 20000;
  cfg.checkpoint_every = 100;
  cfg.epsilon = 0.01;
  cfg.output = dir;
  const ExperimentResult result = run_experiment(cfg);

  bool ok = result.failures == 0, s3gd_clean = false;
  int diverged_runs = 0;
  std::string picks;
  for (const auto& algo : cfg.algorithms) {
    const std::string name = to_string(algo);
    bool any_passing = false;
    double smallest = INFINITY;
    const SummaryRow* chosen = nullptr;
    for (const auto& row : result.summary) {
      if (row.algorithm != name) continue;
      diverged_runs += row.diverged;
      // a diverged step is never admissible
      if (row.diverged > 0) ok &= !row.stable && !row.selected;
      any_passing |= row.stable;
      smallest = std::min(smallest, row.eta);
      if (row.selected) chosen = &row;
    }
    if (!chosen) {
      ok = false;
      continue;
    }
    if (chosen->warning) {
      // nothing in the grid passed: fallback to the smallest candidate
      ok &= !any_passing && chosen->eta == smallest;
      picks += name + "=" + fmt(chosen->eta) + "(no candidate passes) ";
    } else {
      ok &= chosen->diverged == 0 && stable_enough(chosen->tail_obj, result.f_star, cfg.epsilon);
      picks += name + "=" + fmt(chosen->eta) + " ";
      if (algo == Algorithm::s3gd) s3gd_clean = true;
    }
  }
  std::filesystem::remove_all(dir);
  return {ok && s3gd_clean && diverged_runs > 0,
          "selected " + picks + "with " + std::to_string(diverged_runs) + " diverged runs rejected"};
}

Outcome complexity_ordering() {
  const Index n = 50000, d = 200;
  const Dataset ds = clustered(n, d, 20, 901);
  Problem problem;
  problem.train = &ds;
  problem.reg = {RegKind::tikhonov, 1e-3, 0.5, false};
  const AnchorModel model = build_anchor_model(ds, {100, 3, 10, 902, SigmaRule::as_printed});

  auto per_iter = [&](Algorithm algo, std::int64_t iters, Index inner) {
    RunConfig cfg;
    cfg.algorithm = algo;
    cfg.eta = 0.1;
    cfg.iterations = iters;
    cfg.inner = inner;
    cfg.checkpoint_every = iters;
    cfg.kmeans_iter = 10;
    const Trace t = run(cfg, problem, &model);
    return t.records.back().wall_s / static_cast<double>(t.iterations);
  };
  const double sgd = per_iter(Algorithm::sgd, 40000, 0);
  const double ssgd = per_iter(Algorithm::ssgd, 40000, 0);
  const double s3gd = per_iter(Algorithm::s3gd, 40000, 20);
  const double svrg = per_iter(Algorithm::svrg, 2000, 50);
  const bool ordering = sgd <= ssgd && ssgd <= 2.0 * s3gd && s3gd <= 2.0 * ssgd;
  return {s3gd < 0.25 * svrg, "us/iter sgd " + fmt(1e6 * sgd) + ", ssgd " + fmt(1e6 * ssgd) + ", s3gd " +
                                  fmt(1e6 * s3gd) + ", svrg " + fmt(1e6 * svrg) + "; s3gd/svrg " + fmt(s3gd / svrg) +
                                  (ordering ? "; sgd <= ssgd ~ s3gd holds" : "; sgd <= ssgd ~ s3gd does not hold")};
}

Outcome correlation_diagnostic() {
  // At lambda = 1e-3 the exact gradient near the optimum is ~1e-3 in norm and
  // both correlations sit at noise level; 1e-2 keeps a measurable signal.
  const Dataset ds = clustered(2000, 20, 10, 1001);
  Problem problem;
  problem.train = &ds;
  problem.reg = {RegKind::tikhonov, 1e-2, 0.5, false};
  const AnchorModel model = build_anchor_model(ds, {100, 3, 20, 1002, SigmaRule::as_printed});
  RunConfig cfg;
  cfg.eta = 0.1;
  cfg.iterations = 20000;
  cfg.checkpoint_every = 1;
  cfg.track_correlation = true;
  double sgd = 0.0, s3gd = 0.0;
  for (std::uint64_t seed : {1003, 1004, 1005}) {
    cfg.seed = seed;
    cfg.algorithm = Algorithm::sgd;
    sgd += tail_correlation(run(cfg, problem), 500) / 3.0;
    cfg.algorithm = Algorithm::s3gd;
    s3gd += tail_correlation(run(cfg, problem, &model), 500) / 3.0;
  }
  return {s3gd > sgd, "mean correlation over the last 500 iterations, 3 seeds: s3gd " + fmt(s3gd) + " vs sgd " +
                          fmt(sgd)};
}

Outcome certificate_regression() {
  struct Pin {
    double L, mu, eta;
    std::int64_t m;
    double rho, coeff;
  };
  // exact rationals
  const Pin pins[] = {{1.0, 0.1, 0.05, 1000, 2001.0 / 4000.0, 2000.0 / 1999.0},
                      {0.5, 0.002, 0.1, 10000, 35001.0 / 40000.0, 20000.0 / 4999.0},
                      {2.0, 0.5, 0.01, 500, 3001.0 / 5750.0, 1000.0 / 2749.0}};
  double worst = 0.0;
  for (const auto& p : pins) {
    const Certificate c = certificate(0.0, p.mu, p.L, p.eta, p.m);
    worst = std::max({worst, std::abs(c.rho - p.rho), std::abs(c.delta_coeff - p.coeff)});
  }
  // above the edge nothing is feasible; just below it, long inner loops are
  bool boundary = true;
  for (double L : {0.25, 0.5, 1.0, 2.0, 8.0}) {
    const double edge = 1.0 / (8.0 * L);
    for (double eta : {edge, std::nextafter(edge, 1.0), 1.01 * edge, 1.5 * edge, 2.0 * edge, 4.0 * edge})
      for (std::int64_t m : {10, 1000, 100000000})
        boundary &= !certificate(0.0, L, L, eta, m).feasible;
    boundary &= certificate(0.0, L, L, edge * (1.0 - 1e-6), 100000000).feasible;
  }
  return {worst <= 1e-12 && boundary, "max pin error " + fmt(worst) +
                                          (boundary ? ", feasibility flips at 1/(8L)" : ", boundary check failed")};
}

struct Criterion {
  const char* id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"A1", "gradient correctness", gradient_check},
      {"A2", "prox correctness", prox_check},
      {"A3", "grad H path equivalence", grad_h_paths},
      {"A4", "unbiasedness", unbiasedness},
      {"A5", "variance reduction", variance_reduction},
      {"A6", "SVRG equivalence", svrg_equivalence},
      {"A7", "geometric convergence", geometric_convergence},
      {"A8", "stability selection", stepsize_selection},
      {"A9", "complexity ordering", complexity_ordering},
      {"A10", "correlation diagnostic", correlation_diagnostic},
      {"A11", "certificate regression", certificate_regression},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !out.pass;
    std::cout << (out.pass ? "PASS " : "FAIL ") << std::left << std::setw(4) << c.id << c.name << " ["
              << std::fixed << std::setprecision(1) << secs << "s] " << std::defaultfloat << out.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
