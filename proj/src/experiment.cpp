#include "s3gd/experiment.hpp"

#include "s3gd/diagnostics.hpp"
#include "s3gd/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace s3gd {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    auto t = trim(cur);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ValidationError(key + ": expected a number, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw ValidationError(key + ": expected true/false, got '" + text + "'");
}

// One section of the parsed config; every key read is marked so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> get(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }
  std::string qualified(const std::string& key) const { return name_ + "." + key; }

  template <class T>
  void number(const std::string& key, T& out) {
    if (auto v = get(key)) out = parse_number<T>(qualified(key), *v);
  }
  void flag(const std::string& key, bool& out) {
    if (auto v = get(key)) out = parse_bool(qualified(key), *v);
  }

  void check_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_)
      if (!used_.count(key)) throw ValidationError("unknown key " + qualified(key));
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
  std::set<std::string> used_;
};

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

// RFC-4180 record splitting; quoted fields may not span lines here.
std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != header)
    throw ParseError(path.filename().string() + ": unexpected header", 1);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line))
    if (!trim(line).empty()) rows.push_back(csv_split(line));
  return rows;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

constexpr const char* kRunsHeader = "algorithm,eta,seed,iterations,diverged,setup_s,trace_file,note";
constexpr const char* kMetaHeader = "key,value";
constexpr const char* kSummaryHeader =
    "algorithm,eta,runs,diverged,tail_obj,grad_corr,time_per_50,setup_s,stable,selected,warning";

std::string format_optional(double v) { return std::isfinite(v) ? format_number(v) : std::string(); }

}  // namespace

void ExperimentConfig::validate() const {
  if (synthetic) {
    if (synth.n < 1 || synth.d < 1 || synth.clusters < 1) throw ValidationError("data: n, d, clusters must be >= 1");
    if (test_n < 0) throw ValidationError("data.test_n must be >= 0");
  } else if (path.empty()) {
    throw ValidationError("data.path is required for libsvm input");
  }
  loss.validate();
  reg.validate();
  if (algorithms.empty()) throw ValidationError("run.algorithms is empty");
  if (etas.empty()) throw ValidationError("run.etas is empty");
  for (double e : etas)
    if (!(e > 0.0) || !std::isfinite(e)) throw ValidationError("run.etas entries must be positive");
  if (seeds.empty()) throw ValidationError("run.seeds is empty");
  if (batch < 1) throw ValidationError("run.batch must be >= 1");
  if (inner_s3gd < 1 || inner_svrg < 1) throw ValidationError("inner-loop lengths must be >= 1");
  if (iterations < 1) throw ValidationError("run.iterations must be >= 1");
  if (checkpoint_every < 1) throw ValidationError("run.checkpoint_every must be >= 1");
  if (variance_trials == 1 || variance_trials < 0) throw ValidationError("run.variance_trials must be 0 or >= 2");
  if (!(epsilon >= 0.0)) throw ValidationError("run.epsilon must be >= 0");
  if (tail_window < 0) throw ValidationError("run.tail_window must be >= 0");
  if (workers < 1) throw ValidationError("run.workers must be >= 1");
  if (std::find(algorithms.begin(), algorithms.end(), Algorithm::s3gd) != algorithms.end()) {
    if (anchors.m < 1 || anchors.k < 1 || anchors.k > anchors.m)
      throw ValidationError("anchors: need 1 <= k <= m");
  }
}

RunConfig ExperimentConfig::run_config(Algorithm algo, double eta, std::uint64_t seed) const {
  RunConfig rc;
  rc.algorithm = algo;
  rc.eta = eta;
  rc.batch = batch;
  rc.inner = algo == Algorithm::svrg ? inner_svrg : inner_s3gd;
  rc.iterations = iterations;
  rc.seed = seed;
  rc.checkpoint_every = checkpoint_every;
  rc.snapshot = snapshot;
  rc.track_correlation = track_correlation;
  rc.variance_trials = variance_trials;
  return rc;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }
  for (const auto& [name, child] : tree) {
    if (name != "data" && name != "model" && name != "anchors" && name != "run")
      throw ValidationError(child.empty() ? "key '" + name + "' outside any section" : "unknown section [" + name + "]");
  }
  auto section = [&](const char* name) {
    auto it = tree.find(name);
    return Section(name, it == tree.not_found() ? nullptr : &it->second);
  };

  ExperimentConfig cfg;
  Section data = section("data");
  if (auto v = data.get("source")) {
    if (*v == "synthetic") cfg.synthetic = true;
    else if (*v == "libsvm") cfg.synthetic = false;
    else throw ValidationError("data.source must be synthetic or libsvm");
  }
  if (auto v = data.get("path")) {
    cfg.path = *v;
    if (!data.get("source")) cfg.synthetic = false;
  }
  if (auto v = data.get("test_path")) cfg.test_path = *v;
  data.number("n", cfg.synth.n);
  data.number("d", cfg.synth.d);
  data.number("clusters", cfg.synth.clusters);
  data.number("separation", cfg.synth.separation);
  data.number("seed", cfg.synth.seed);
  data.number("test_n", cfg.test_n);
  data.flag("intercept", cfg.load.intercept);
  cfg.synth.intercept = cfg.load.intercept;
  data.flag("unit_norm", cfg.load.unit_norm);
  if (auto v = data.get("weighting")) {
    if (*v == "uniform") cfg.weighting = Weighting::uniform;
    else if (*v == "class") cfg.weighting = Weighting::classes;
    else throw ValidationError("data.weighting must be uniform or class");
  }
  data.check_unknown();

  Section model = section("model");
  if (auto v = model.get("loss")) cfg.loss.kind = parse_loss_kind(*v);
  model.number("beta", cfg.loss.beta);
  if (auto v = model.get("regularizer")) cfg.reg.kind = parse_reg_kind(*v);
  model.number("lambda", cfg.reg.lambda);
  model.number("alpha", cfg.reg.alpha);
  model.flag("regularize_intercept", cfg.regularize_intercept);
  model.check_unknown();

  Section anchors = section("anchors");
  anchors.number("m", cfg.anchors.m);
  anchors.number("k", cfg.anchors.k);
  anchors.number("kmeans_iter", cfg.anchors.kmeans_iter);
  anchors.number("seed", cfg.anchors.seed);
  if (auto v = anchors.get("sigma_rule")) cfg.anchors.sigma_rule = parse_sigma_rule(*v);
  anchors.check_unknown();

  Section run = section("run");
  if (auto v = run.get("algorithms")) {
    for (const auto& a : split_list(*v)) cfg.algorithms.push_back(parse_algorithm(a));
  } else {
    cfg.algorithms = {Algorithm::sgd, Algorithm::ssgd, Algorithm::svrg, Algorithm::scv, Algorithm::s3gd};
  }
  if (auto v = run.get("etas")) {
    for (const auto& e : split_list(*v)) cfg.etas.push_back(parse_number<double>("run.etas", e));
  } else {
    cfg.etas = {0.1, 1.0, 5.0, 10.0};
  }
  auto seeds = run.get("seeds");
  auto trials = run.get("trials");
  if (seeds && trials) throw ValidationError("run.seeds and run.trials are mutually exclusive");
  if (seeds) {
    for (const auto& s : split_list(*seeds)) cfg.seeds.push_back(parse_number<std::uint64_t>("run.seeds", s));
  } else {
    const int count = trials ? parse_number<int>("run.trials", *trials) : 5;
    for (int s = 1; s <= count; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  run.number("batch", cfg.batch);
  run.number("inner_s3gd", cfg.inner_s3gd);
  run.number("inner_svrg", cfg.inner_svrg);
  run.number("iterations", cfg.iterations);
  run.number("checkpoint_every", cfg.checkpoint_every);
  if (auto v = run.get("snapshot")) cfg.snapshot = parse_snapshot_rule(*v);
  run.flag("track_correlation", cfg.track_correlation);
  run.number("variance_trials", cfg.variance_trials);
  run.number("epsilon", cfg.epsilon);
  run.number("tail_window", cfg.tail_window);
  if (auto v = run.get("output")) cfg.output = *v;
  run.number("workers", cfg.workers);
  run.check_unknown();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg = parse_experiment_config(buf.str());
  // Data paths are taken relative to the config file.
  const fs::path base = path.parent_path();
  if (!cfg.path.empty() && cfg.path.is_relative()) cfg.path = base / cfg.path;
  if (!cfg.test_path.empty() && cfg.test_path.is_relative()) cfg.test_path = base / cfg.test_path;
  return cfg;
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  SyntheticSpec spec;
  std::string token;
  std::string normalized = text;
  std::replace_if(normalized.begin(), normalized.end(), [](char c) { return c == ',' || c == ';' || c == '\n'; }, ' ');
  std::istringstream in(normalized);
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ValidationError("expected key=value, got '" + token + "'");
    const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
    if (key == "n") spec.n = parse_number<Index>(key, value);
    else if (key == "d") spec.d = parse_number<Index>(key, value);
    else if (key == "clusters") spec.clusters = parse_number<Index>(key, value);
    else if (key == "separation") spec.separation = parse_number<double>(key, value);
    else if (key == "seed") spec.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "intercept") spec.intercept = parse_bool(key, value);
    else throw ValidationError("unknown synthetic key '" + key + "'");
  }
  if (spec.n < 1 || spec.d < 1 || spec.clusters < 1) throw ValidationError("n, d, clusters must be >= 1");
  return spec;
}

int resolve_workers(int configured) {
  if (const char* env = std::getenv("S3GD_WORKERS")) {
    int v = 0;
    const std::string s = trim(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size() && v > 0) return v;
    throw ValidationError("S3GD_WORKERS must be a positive integer");
  }
  return configured;
}

std::string trace_file_name(const std::string& algorithm, double eta, std::uint64_t seed) {
  return algorithm + "_eta" + format_number(eta) + "_seed" + std::to_string(seed) + ".csv";
}

std::string format_summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.algorithm << ',' << format_number(r.eta) << ',' << r.runs << ',' << r.diverged << ','
        << format_optional(r.tail_obj) << ',' << format_optional(r.grad_corr) << ','
        << format_optional(r.time_per_50) << ',' << format_number(r.setup_s) << ',' << (r.stable ? 1 : 0) << ','
        << (r.selected ? 1 : 0) << ',' << (r.warning ? 1 : 0) << '\n';
  }
  return out.str();
}

std::vector<SummaryRow> summarize(const fs::path& dir) {
  std::map<std::string, std::string> meta;
  for (const auto& row : read_csv(dir / "meta.csv", kMetaHeader)) {
    if (row.size() != 2) throw ParseError("meta.csv: expected 2 fields", 0);
    meta[row[0]] = row[1];
  }
  for (const char* key : {"f_star", "epsilon", "tail_window"})
    if (!meta.count(key)) throw ValidationError(std::string("meta.csv lacks ") + key);
  const double f_star = parse_number<double>("f_star", meta["f_star"]);
  const double epsilon = parse_number<double>("epsilon", meta["epsilon"]);
  const auto window = parse_number<std::int64_t>("tail_window", meta["tail_window"]);

  struct Group {
    SummaryRow row;
    double tail_sum = 0.0, corr_sum = 0.0, time_sum = 0.0, setup_sum = 0.0;
    int tail_n = 0, corr_n = 0, time_n = 0;
  };
  std::vector<Group> groups;
  auto group_for = [&](const std::string& algo, double eta) -> Group& {
    for (auto& g : groups)
      if (g.row.algorithm == algo && g.row.eta == eta) return g;
    groups.emplace_back();
    groups.back().row.algorithm = algo;
    groups.back().row.eta = eta;
    return groups.back();
  };

  for (const auto& f : read_csv(dir / "runs.csv", kRunsHeader)) {
    if (f.size() != 8) throw ParseError("runs.csv: expected 8 fields", 0);
    Group& g = group_for(f[0], parse_number<double>("eta", f[1]));
    const auto iterations = parse_number<std::int64_t>("iterations", f[3]);
    const bool diverged = f[4] == "1";
    g.row.runs += 1;
    g.setup_sum += parse_number<double>("setup_s", f[5]);
    if (f[6].empty()) {  // the run failed before producing a trace
      g.row.diverged += 1;
      continue;
    }
    const Trace trace = read_trace_csv(dir / "traces" / f[6]);
    if (iterations > 0 && !trace.records.empty()) {
      g.time_sum += trace.records.back().wall_s / static_cast<double>(iterations) * 50.0;
      g.time_n += 1;
    }
    if (diverged) {
      g.row.diverged += 1;
      continue;
    }
    const auto w = window > 0 ? window : default_tail_window(iterations);
    g.tail_sum += tail_average(trace, w);
    g.tail_n += 1;
    const double c = tail_correlation(trace, w);
    if (std::isfinite(c)) {
      g.corr_sum += c;
      g.corr_n += 1;
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<SummaryRow> rows;
  for (auto& g : groups) {
    SummaryRow r = g.row;
    r.tail_obj = g.tail_n ? g.tail_sum / g.tail_n : nan;
    r.grad_corr = g.corr_n ? g.corr_sum / g.corr_n : nan;
    r.time_per_50 = g.time_n ? g.time_sum / g.time_n : nan;
    r.setup_s = r.runs ? g.setup_sum / r.runs : 0.0;
    r.stable = r.diverged == 0 && g.tail_n > 0 && stable_enough(r.tail_obj, f_star, epsilon);
    rows.push_back(r);
  }

  std::vector<std::string> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.algorithm) == order.end()) order.push_back(r.algorithm);
  for (const auto& algo : order) {
    std::vector<StepsizeCandidate> cands;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].algorithm != algo) continue;
      const bool bad = rows[i].diverged > 0 || !std::isfinite(rows[i].tail_obj);
      cands.push_back({rows[i].eta, rows[i].tail_obj, bad});
      idx.push_back(i);
    }
    const auto choice = select_stable_stepsize(cands, f_star, epsilon);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      auto& r = rows[idx[j]];
      r.selected = r.eta == choice.eta;
      r.warning = r.selected && choice.warning;
    }
  }
  return rows;
}

namespace {

struct Job {
  Algorithm algo;
  double eta;
  std::uint64_t seed;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  std::mutex log_mutex;
  auto say = [&](const std::string& msg) {
    if (!log) return;
    std::lock_guard lock(log_mutex);
    *log << msg << std::endl;
  };

  Dataset train, test;
  bool has_test = false;
  if (cfg.synthetic) {
    SyntheticSpec spec = cfg.synth;
    spec.n += cfg.test_n;
    Dataset all = synth_gaussian(spec);
    if (cfg.load.unit_norm) normalize_rows_to_unit(all);
    std::vector<Index> head(cfg.synth.n), tail(cfg.test_n);
    for (Index i = 0; i < cfg.synth.n; ++i) head[i] = i;
    for (Index i = 0; i < cfg.test_n; ++i) tail[i] = cfg.synth.n + i;
    train = select_samples(all, head);
    train.weights.setConstant(1.0 / static_cast<double>(train.size()));
    if (cfg.test_n > 0) {
      test = select_samples(all, tail);
      test.weights.setConstant(1.0 / static_cast<double>(test.size()));
      has_test = true;
    }
  } else {
    train = load_libsvm(cfg.path, cfg.load);
    if (!cfg.test_path.empty()) {
      LoadOptions opts = cfg.load;
      opts.min_features = train.dims() - (train.has_intercept ? 1 : 0);
      test = load_libsvm(cfg.test_path, opts);
      if (test.dims() != train.dims()) throw ValidationError("test set has more features than the training set");
      has_test = true;
    }
  }
  if (cfg.weighting == Weighting::classes) {
    train.weights = class_weights(train);
    if (has_test) test.weights = class_weights(test);
  }

  Problem problem;
  problem.train = &train;
  problem.test = has_test ? &test : nullptr;
  problem.loss = cfg.loss;
  problem.reg = cfg.reg;
  problem.reg.skip_intercept = train.has_intercept && !cfg.regularize_intercept;

  say("data: n=" + std::to_string(train.size()) + " d=" + std::to_string(train.dims()));
  const ReferenceSolution ref = solve_reference(train, cfg.loss, problem.reg);
  say("reference objective " + format_number(ref.objective) + " (gradient map " + format_number(ref.grad_map_norm) +
      ")");

  std::optional<AnchorModel> model;
  if (std::find(cfg.algorithms.begin(), cfg.algorithms.end(), Algorithm::s3gd) != cfg.algorithms.end()) {
    if (cfg.anchors.m > train.size()) throw ValidationError("anchors.m exceeds the number of samples");
    model = build_anchor_model(train, cfg.anchors);
    say("anchors built in " + format_number(model->preprocess_seconds) + " s");
  }

  std::vector<Job> jobs;
  for (auto algo : cfg.algorithms)
    for (double eta : cfg.etas)
      for (auto seed : cfg.seeds) jobs.push_back({algo, eta, seed});

  const fs::path out_dir = cfg.output;
  fs::create_directories(out_dir / "traces");

  ExperimentResult result;
  result.f_star = ref.objective;
  result.runs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      const Job& job = jobs[j];
      RunRow& row = result.runs[j];
      row.algorithm = to_string(job.algo);
      row.eta = job.eta;
      row.seed = job.seed;
      try {
        const Trace trace = run(cfg.run_config(job.algo, job.eta, job.seed), problem, model ? &*model : nullptr);
        row.iterations = trace.iterations;
        row.diverged = trace.diverged;
        row.setup_s = trace.setup_s;
        row.note = trace.diagnostic;
        row.trace_file = trace_file_name(row.algorithm, job.eta, job.seed);
        write_trace_csv(trace, out_dir / "traces" / row.trace_file);
        say(row.algorithm + " eta=" + format_number(job.eta) + " seed=" + std::to_string(job.seed) +
            (trace.diverged ? " diverged" : " done"));
      } catch (const std::exception& e) {
        row.trace_file.clear();
        row.note = std::string("failed: ") + e.what();
        failures.fetch_add(1);
        say(row.algorithm + " eta=" + format_number(job.eta) + " seed=" + std::to_string(job.seed) + " " + row.note);
      }
    }
  };
  const int workers = std::max(1, std::min<int>(resolve_workers(cfg.workers), static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  result.failures = failures.load();

  std::ostringstream runs;
  runs << kRunsHeader << '\n';
  for (const auto& r : result.runs) {
    runs << r.algorithm << ',' << format_number(r.eta) << ',' << r.seed << ',' << r.iterations << ','
         << (r.diverged ? 1 : 0) << ',' << format_number(r.setup_s) << ',' << csv_quote(r.trace_file) << ','
         << csv_quote(r.note) << '\n';
  }
  write_text(out_dir / "runs.csv", runs.str());

  std::ostringstream meta;
  meta << kMetaHeader << '\n'
       << "f_star," << format_number(ref.objective) << '\n'
       << "epsilon," << format_number(cfg.epsilon) << '\n'
       << "tail_window," << cfg.tail_window << '\n'
       << "reference_grad_map," << format_number(ref.grad_map_norm) << '\n'
       << "anchor_preprocess_s," << format_number(model ? model->preprocess_seconds : 0.0) << '\n';
  write_text(out_dir / "meta.csv", meta.str());

  result.summary = summarize(out_dir);
  write_text(out_dir / "summary.csv", format_summary_csv(result.summary));
  return result;
}

}  // namespace s3gd
