// Command line driver: run / compare / audit / constants subcommands over the
// experiment harness.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <sstream>

#include "stiefel_dgt/experiment.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool audit = false;
  std::optional<long> audit_stride;
  std::string format;
  bool header = false;
  std::string alpha;
  std::string lambda;
  std::optional<long> max_iters;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Path to a config file");
  cmd->add_option("--preset", opts.preset_name, "Named preset (paper-synthetic, desk-pca)");
  cmd->add_option("--seed", opts.seed, "Override the problem seed");
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_flag("--audit", opts.audit, "Enable inequality audits and snapshots");
  cmd->add_option("--audit-stride", opts.audit_stride, "Audit/snapshot every k iterations");
  cmd->add_option("--format", opts.format, "Trace format: csv, jsonl or both");
  cmd->add_flag("--header", opts.header, "CSV dataset has a header line");
  cmd->add_option("--alpha", opts.alpha, "Step size (number, auto-safe or auto-stable)");
  cmd->add_option("--lambda", opts.lambda, "Penalty weight (number, auto or ratio:<c>)");
  cmd->add_option("--max-iters", opts.max_iters, "Iteration cap");
}

stiefel_dgt::ExperimentConfig assemble(const CommonOptions& opts) {
  using stiefel_dgt::ConfigError;
  stiefel_dgt::ExperimentConfig config;
  if (!opts.config_path.empty() && !opts.preset_name.empty())
    throw ConfigError("--config and --preset are mutually exclusive");
  if (!opts.config_path.empty())
    config = stiefel_dgt::parse_config_file(opts.config_path);
  else if (!opts.preset_name.empty())
    config = stiefel_dgt::preset(opts.preset_name);
  else
    throw ConfigError("need --config or --preset");

  if (opts.seed.has_value()) config.problem.seed = *opts.seed;
  if (!opts.out_dir.empty()) config.output.directory = opts.out_dir;
  if (opts.audit) config.output.audit = true;
  if (opts.audit_stride.has_value()) config.output.audit_stride = *opts.audit_stride;
  if (!opts.format.empty()) config.output.format = opts.format;
  if (opts.header) config.problem.header = true;
  if (!opts.alpha.empty()) config.algorithm.alpha = opts.alpha;
  if (!opts.lambda.empty()) config.algorithm.lambda = opts.lambda;
  if (opts.max_iters.has_value()) config.algorithm.max_iters = *opts.max_iters;
  return config;
}

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) items.push_back(item);
  return items;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized retraction-free gradient tracking on the Stiefel manifold"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "Run one algorithm and write traces");
  add_common(run_cmd, run_opts);

  CommonOptions compare_opts;
  std::string algorithms_csv;
  CLI::App* compare_cmd =
      app.add_subcommand("compare", "Run several algorithms from one initial point");
  add_common(compare_cmd, compare_opts);
  compare_cmd->add_option("--algorithms", algorithms_csv,
                          "Comma-separated list (drfgt, centralized-landing, retraction-dgt)");

  std::string audit_run_dir;
  double gamma_scale = 1.0;
  double audit_delta = 0.5;
  std::optional<double> audit_mu;
  bool fit_mu = false;
  CLI::App* audit_cmd = app.add_subcommand("audit", "Replay stored snapshots through the audits");
  audit_cmd->add_option("--run", audit_run_dir, "Completed run directory")->required();
  audit_cmd->add_option("--gamma-scale", gamma_scale, "Scale the resolved gamma (sentinel)");
  audit_cmd->add_option("--mu", audit_mu, "Supply a PL factor");
  audit_cmd->add_flag("--fit-mu", fit_mu, "Fit the PL factor near the reference solution");
  audit_cmd->add_option("--delta", audit_delta, "Neighborhood radius for the PL checks");

  CommonOptions constants_opts;
  CLI::App* constants_cmd =
      app.add_subcommand("constants", "Print the resolved constants and exit");
  add_common(constants_cmd, constants_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return stiefel_dgt::run_experiment(assemble(run_opts));
    if (compare_cmd->parsed()) {
      if (algorithms_csv.empty())
        throw stiefel_dgt::ConfigError("compare needs --algorithms a,b[,c]");
      return stiefel_dgt::run_compare(assemble(compare_opts), split_csv_list(algorithms_csv));
    }
    if (audit_cmd->parsed()) {
      stiefel_dgt::AuditOptions options;
      options.gamma_scale = gamma_scale;
      options.mu = audit_mu;
      options.fit_mu = fit_mu;
      options.delta = audit_delta;
      return stiefel_dgt::run_audit(audit_run_dir, options, std::cout);
    }
    if (constants_cmd->parsed())
      return stiefel_dgt::print_constants(assemble(constants_opts), std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
