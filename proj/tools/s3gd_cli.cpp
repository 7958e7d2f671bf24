// Benchmark harness front end.
//
//   s3gd run <config>          run every (algorithm, eta, seed) in the config
//   s3gd summarize <dir>       rebuild summary.csv from an output directory
//   s3gd gen-data <spec> <out> write a synthetic LIBSVM file
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime failure.
// S3GD_WORKERS overrides the configured worker count.

#include "s3gd/errors.hpp"
#include "s3gd/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

std::string read_spec(const std::string& arg) {
  if (std::filesystem::is_regular_file(arg)) {
    std::ifstream in(arg);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  return arg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-stochastic gradient benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, output_override;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("-o,--output", output_override, "override [run] output");
  run->add_flag("-q,--quiet", quiet, "no progress log");

  std::string summary_dir;
  auto* summarize = app.add_subcommand("summarize", "re-aggregate an output directory");
  summarize->add_option("dir", summary_dir, "experiment output directory")->required();

  std::string spec_arg, out_path;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic Gaussian-mixture dataset");
  gen->add_option("spec", spec_arg, "key=value list (n, d, clusters, separation, seed) or a file holding one")
      ->required();
  gen->add_option("out", out_path, "output LIBSVM path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  s3gd::ExperimentConfig cfg;
  try {
    if (*run) {
      cfg = s3gd::load_experiment_config(config_path);
      if (!output_override.empty()) cfg.output = output_override;
      s3gd::resolve_workers(cfg.workers);
    }
  } catch (const s3gd::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*run) {
      const auto result = s3gd::run_experiment(cfg, quiet ? nullptr : &std::cerr);
      std::cout << s3gd::format_summary_csv(result.summary);
      if (result.failures > 0) {
        std::cerr << result.failures << " run(s) failed; see runs.csv\n";
        return kRuntimeError;
      }
    } else if (*summarize) {
      const auto rows = s3gd::summarize(summary_dir);
      const std::string text = s3gd::format_summary_csv(rows);
      std::ofstream(std::filesystem::path(summary_dir) / "summary.csv", std::ios::binary) << text;
      std::cout << text;
    } else if (*gen) {
      s3gd::SyntheticSpec spec;
      try {
        spec = s3gd::parse_synthetic_spec(read_spec(spec_arg));
      } catch (const s3gd::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
      }
      const auto ds = s3gd::synth_gaussian(spec);
      s3gd::write_libsvm(ds, out_path);
      std::cout << "wrote " << ds.size() << " samples with " << spec.d << " features to " << out_path << '\n';
    }
  } catch (const s3gd::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
