#include "s3gd/anchors.hpp"
#include "s3gd/dataset.hpp"
#include "s3gd/diagnostics.hpp"
#include "s3gd/errors.hpp"
#include "s3gd/experiment.hpp"
#include "s3gd/gradients.hpp"
#include "s3gd/loss.hpp"
#include "s3gd/optimizers.hpp"
#include "s3gd/prox.hpp"
#include "s3gd/trace.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <optional>

namespace py = pybind11;
using namespace s3gd;

namespace {

LossModel make_loss(const std::string& kind, double beta) {
  LossModel loss{parse_loss_kind(kind), beta};
  loss.validate();
  return loss;
}

Regularizer make_reg(const std::string& kind, double lambda, double alpha, bool skip_intercept) {
  Regularizer reg{parse_reg_kind(kind), lambda, alpha, skip_intercept};
  reg.validate();
  return reg;
}

py::object optional_number(const std::optional<double>& v) {
  return v ? py::cast(*v) : py::none();
}

py::dict trace_columns(const Trace& t) {
  const auto n = static_cast<Eigen::Index>(t.records.size());
  Eigen::VectorXd wall(n), train(n), test(n), corr(n), var(n);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> iter(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& r = t.records[k];
    iter[k] = r.iter;
    wall[k] = r.wall_s;
    train[k] = r.train_obj;
    test[k] = r.test_obj.value_or(NAN);
    corr[k] = r.grad_corr.value_or(NAN);
    var[k] = r.est_var.value_or(NAN);
  }
  py::dict out;
  out["iter"] = iter;
  out["wall_s"] = wall;
  out["train_obj"] = train;
  out["test_obj"] = test;
  out["grad_corr"] = corr;
  out["est_var"] = var;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Semi-stochastic gradient descent and baseline solvers for regularized linear classifiers.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<StaleStateError>(m, "StaleStateError", base.ptr());

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                       std::optional<Eigen::VectorXd> weights, bool has_intercept) {
             Dataset ds;
             ds.features = features;
             ds.labels = labels;
             ds.weights = weights ? *weights : Eigen::VectorXd::Constant(labels.size(), 1.0 / labels.size());
             ds.has_intercept = has_intercept;
             ds.validate();
             return ds;
           }),
           py::arg("features"), py::arg("labels"), py::arg("weights") = py::none(), py::arg("has_intercept") = false,
           "features is d x n, one sample per column")
      .def_readwrite("features", &Dataset::features)
      .def_readwrite("labels", &Dataset::labels)
      .def_readwrite("weights", &Dataset::weights)
      .def_readonly("has_intercept", &Dataset::has_intercept)
      .def_property_readonly("dims", &Dataset::dims)
      .def_property_readonly("size", &Dataset::size)
      .def("validate", &Dataset::validate)
      .def("__len__", &Dataset::size)
      .def("__repr__", [](const Dataset& ds) {
        return "<Dataset n=" + std::to_string(ds.size()) + " d=" + std::to_string(ds.dims()) + ">";
      });

  m.def(
      "load_libsvm",
      [](const std::filesystem::path& path, bool intercept, bool unit_norm) {
        return load_libsvm(path, LoadOptions{intercept, unit_norm, 0});
      },
      py::arg("path"), py::arg("intercept") = true, py::arg("unit_norm") = false);
  m.def("write_libsvm", &write_libsvm, py::arg("dataset"), py::arg("path"));
  m.def(
      "synth_gaussian",
      [](Index n, Index d, Index clusters, double separation, std::uint64_t seed, bool intercept) {
        return synth_gaussian(SyntheticSpec{n, d, clusters, separation, seed, intercept});
      },
      py::arg("n") = 1000, py::arg("d") = 10, py::arg("clusters") = 2, py::arg("separation") = 4.0,
      py::arg("seed") = 7, py::arg("intercept") = true);
  m.def("class_weights", &class_weights, py::arg("dataset"));

  m.def(
      "atomic_value",
      [](double u, double y, const std::string& loss, double beta) {
        return atomic_value(make_loss(loss, beta), u, y);
      },
      py::arg("u"), py::arg("y"), py::arg("loss") = "logistic", py::arg("beta") = 10.0);
  m.def(
      "atomic_derivative",
      [](double u, double y, const std::string& loss, double beta) {
        return atomic_derivative(make_loss(loss, beta), u, y);
      },
      py::arg("u"), py::arg("y"), py::arg("loss") = "logistic", py::arg("beta") = 10.0);
  m.def(
      "smooth_objective",
      [](const Eigen::VectorXd& w, const Dataset& ds, const std::string& loss, double beta) {
        return smooth_objective(w, ds, make_loss(loss, beta));
      },
      py::arg("w"), py::arg("dataset"), py::arg("loss") = "logistic", py::arg("beta") = 10.0);
  m.def(
      "full_gradient",
      [](const Eigen::VectorXd& w, const Dataset& ds, const std::string& loss, double beta) {
        return full_gradient(w, ds, make_loss(loss, beta));
      },
      py::arg("w"), py::arg("dataset"), py::arg("loss") = "logistic", py::arg("beta") = 10.0);

  m.def(
      "prox",
      [](const Eigen::VectorXd& u, double eta, const std::string& reg, double lam, double alpha, bool skip_intercept) {
        return prox(make_reg(reg, lam, alpha, skip_intercept), u, eta);
      },
      py::arg("u"), py::arg("eta"), py::arg("regularizer") = "tikhonov", py::arg("lam") = 1e-3,
      py::arg("alpha") = 0.5, py::arg("skip_intercept") = false);
  m.def(
      "reg_value",
      [](const Eigen::VectorXd& w, const std::string& reg, double lam, double alpha, bool skip_intercept) {
        return reg_value(make_reg(reg, lam, alpha, skip_intercept), w);
      },
      py::arg("w"), py::arg("regularizer") = "tikhonov", py::arg("lam") = 1e-3, py::arg("alpha") = 0.5,
      py::arg("skip_intercept") = false);

  py::class_<KMeansResult>(m, "KMeansResult")
      .def_readonly("centers", &KMeansResult::centers)
      .def_readonly("assignment", &KMeansResult::assignment)
      .def_readonly("wcss", &KMeansResult::wcss)
      .def_readonly("iterations", &KMeansResult::iterations);
  m.def(
      "kmeans", [](const Eigen::MatrixXd& points, Index m, std::uint64_t seed, int max_iter) {
        return kmeans(points, m, seed, max_iter);
      },
      py::arg("points"), py::arg("m"), py::arg("seed") = 1, py::arg("max_iter") = 20,
      py::call_guard<py::gil_scoped_release>());

  py::class_<AnchorModel>(m, "AnchorModel")
      .def_property_readonly("anchor_indices", [](const AnchorModel& a) { return a.anchors.source_indices; })
      .def_property_readonly("anchors", [](const AnchorModel& a) { return a.anchors.vectors; })
      .def_property_readonly("neighbors", [](const AnchorModel& a) { return a.graph.neighbors; })
      .def_property_readonly("coefficients", [](const AnchorModel& a) { return a.graph.coefficients; })
      .def_readonly("preprocess_seconds", &AnchorModel::preprocess_seconds)
      .def(
          "approx_full_gradient",
          [](const AnchorModel& a, const Eigen::VectorXd& w, const std::string& loss, double beta) {
            return approx_full_gradient(a.cache, anchor_derivatives(w, a.anchors, make_loss(loss, beta)));
          },
          py::arg("w"), py::arg("loss") = "logistic", py::arg("beta") = 10.0);
  m.def(
      "build_anchor_model",
      [](const Dataset& ds, Index m, Index k, int kmeans_iter, std::uint64_t seed, const std::string& sigma_rule) {
        return build_anchor_model(ds, AnchorParams{m, k, kmeans_iter, seed, parse_sigma_rule(sigma_rule)});
      },
      py::arg("dataset"), py::arg("m") = 100, py::arg("k") = 3, py::arg("kmeans_iter") = 20, py::arg("seed") = 1,
      py::arg("sigma_rule") = "as_printed", py::keep_alive<0, 1>(), py::call_guard<py::gil_scoped_release>());
  m.def("identity_anchor_model", &identity_anchor_model, py::arg("dataset"), py::keep_alive<0, 1>());

  py::class_<Trace>(m, "Trace")
      .def_readonly("algorithm", &Trace::algorithm)
      .def_readonly("eta", &Trace::eta)
      .def_readonly("seed", &Trace::seed)
      .def_readonly("config", &Trace::config)
      .def_readonly("diverged", &Trace::diverged)
      .def_readonly("diagnostic", &Trace::diagnostic)
      .def_readonly("iterations", &Trace::iterations)
      .def_readonly("setup_s", &Trace::setup_s)
      .def_readonly("final_w", &Trace::final_w)
      .def_readonly("iterates", &Trace::iterates)
      .def("columns", &trace_columns, "Records as a dict of numpy arrays; missing values are NaN.")
      .def("to_csv", &format_trace_csv)
      .def("__len__", [](const Trace& t) { return t.records.size(); });

  m.def(
      "run",
      [](const Dataset& train, const std::string& algorithm, double eta, Index batch, Index inner,
         std::int64_t iterations, std::uint64_t seed, std::int64_t checkpoint_every, const std::string& loss,
         double beta, const std::string& regularizer, double lam, double alpha, bool skip_intercept,
         const AnchorModel* anchors, const Dataset* test, bool track_correlation, Index variance_trials,
         const std::string& snapshot, bool keep_iterates) {
        RunConfig cfg;
        cfg.algorithm = parse_algorithm(algorithm);
        cfg.eta = eta;
        cfg.batch = batch;
        cfg.inner = inner;
        cfg.iterations = iterations;
        cfg.seed = seed;
        cfg.checkpoint_every = checkpoint_every;
        cfg.track_correlation = track_correlation;
        cfg.variance_trials = variance_trials;
        cfg.snapshot = parse_snapshot_rule(snapshot);
        cfg.keep_iterates = keep_iterates;
        Problem problem;
        problem.train = &train;
        problem.test = test;
        problem.loss = make_loss(loss, beta);
        problem.reg = make_reg(regularizer, lam, alpha, skip_intercept);
        if (cfg.algorithm == Algorithm::s3gd && !anchors) throw ValidationError("s3gd needs an anchor model");
        py::gil_scoped_release release;
        return run(cfg, problem, anchors);
      },
      py::arg("train"), py::arg("algorithm") = "s3gd", py::arg("eta") = 0.1, py::arg("batch") = 10,
      py::arg("inner") = 0, py::arg("iterations") = 1000, py::arg("seed") = 1, py::arg("checkpoint_every") = 50,
      py::arg("loss") = "logistic", py::arg("beta") = 10.0, py::arg("regularizer") = "tikhonov",
      py::arg("lam") = 1e-3, py::arg("alpha") = 0.5, py::arg("skip_intercept") = false,
      py::arg("anchors") = nullptr, py::arg("test") = nullptr, py::arg("track_correlation") = false,
      py::arg("variance_trials") = 0, py::arg("snapshot") = "last", py::arg("keep_iterates") = false);

  py::class_<ReferenceSolution>(m, "ReferenceSolution")
      .def_readonly("w", &ReferenceSolution::w)
      .def_readonly("objective", &ReferenceSolution::objective)
      .def_readonly("grad_map_norm", &ReferenceSolution::grad_map_norm)
      .def_readonly("iterations", &ReferenceSolution::iterations)
      .def_readonly("converged", &ReferenceSolution::converged);
  m.def(
      "solve_reference",
      [](const Dataset& ds, const std::string& loss, double beta, const std::string& regularizer, double lam,
         double alpha, bool skip_intercept, double tol, int max_iter) {
        const LossModel l = make_loss(loss, beta);
        const Regularizer r = make_reg(regularizer, lam, alpha, skip_intercept);
        py::gil_scoped_release release;
        return solve_reference(ds, l, r, tol, max_iter);
      },
      py::arg("dataset"), py::arg("loss") = "logistic", py::arg("beta") = 10.0, py::arg("regularizer") = "tikhonov",
      py::arg("lam") = 1e-3, py::arg("alpha") = 0.5, py::arg("skip_intercept") = false, py::arg("tol") = 1e-10,
      py::arg("max_iter") = 200000);

  py::class_<Certificate>(m, "Certificate")
      .def_readonly("rho", &Certificate::rho)
      .def_readonly("delta_coeff", &Certificate::delta_coeff)
      .def_readonly("feasible", &Certificate::feasible)
      .def("__repr__", [](const Certificate& c) {
        return "<Certificate rho=" + format_number(c.rho) + " delta_coeff=" + format_number(c.delta_coeff) +
               (c.feasible ? " feasible>" : " infeasible>");
      });
  m.def("certificate", &certificate, py::arg("mu_P"), py::arg("mu_R"), py::arg("L"), py::arg("eta"),
        py::arg("m_inner"));

  m.def(
      "pearson_correlation",
      [](const Eigen::VectorXd& g, const Eigen::VectorXd& exact) { return pearson_correlation(g, exact).value; },
      py::arg("g"), py::arg("g_exact"));

  py::class_<StepsizeChoice>(m, "StepsizeChoice")
      .def_readonly("eta", &StepsizeChoice::eta)
      .def_readonly("warning", &StepsizeChoice::warning)
      .def_readonly("passed", &StepsizeChoice::passed);
  m.def(
      "select_stable_stepsize",
      [](const std::vector<double>& etas, const std::vector<double>& tails, const std::vector<bool>& diverged,
         double f_star, double epsilon) {
        if (etas.size() != tails.size() || etas.size() != diverged.size())
          throw ValidationError("etas, tail objectives and divergence flags differ in length");
        std::vector<StepsizeCandidate> c;
        for (std::size_t k = 0; k < etas.size(); ++k) c.push_back({etas[k], tails[k], diverged[k]});
        return select_stable_stepsize(c, f_star, epsilon);
      },
      py::arg("etas"), py::arg("tail_objectives"), py::arg("diverged"), py::arg("f_star"), py::arg("epsilon") = 0.01);

  m.def(
      "run_experiment",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> output) {
        ExperimentConfig cfg = load_experiment_config(config);
        if (output) cfg.output = *output;
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        return py::make_tuple(r.f_star, r.failures);
      },
      py::arg("config"), py::arg("output") = py::none(),
      "Runs an INI experiment; returns (f_star, failures). Outputs go under the configured directory.");
  m.def(
      "summarize",
      [](const std::filesystem::path& dir) {
        py::list rows;
        for (const auto& r : summarize(dir)) {
          py::dict d;
          d["algorithm"] = r.algorithm;
          d["eta"] = r.eta;
          d["runs"] = r.runs;
          d["diverged"] = r.diverged;
          d["tail_obj"] = r.tail_obj;
          d["grad_corr"] = r.grad_corr;
          d["time_per_50"] = r.time_per_50;
          d["setup_s"] = r.setup_s;
          d["stable"] = r.stable;
          d["selected"] = r.selected;
          d["warning"] = r.warning;
          rows.append(d);
        }
        return rows;
      },
      py::arg("directory"));
}
