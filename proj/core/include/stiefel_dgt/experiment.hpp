#pragma once

#include <iosfwd>
#include <vector>

#include "stiefel_dgt/config.hpp"
#include "stiefel_dgt/diagnostics.hpp"

namespace stiefel_dgt {

// Everything a run needs, resolved deterministically from a config:
// instance, mixing matrix, constants, step size and the shared initial point.
struct ResolvedSetup {
  ProblemInstance problem;
  MixingMatrix mixing;
  LandingParams params;
  MeritConstants consts;
  AlgorithmConfig algorithm_config;
  Algorithm algorithm;
  Matrix x0;
  double alpha_safe = 0.0;
  double alpha_stable = 0.0;
};

ResolvedSetup resolve(const ExperimentConfig& config);

// Audit context wired to the problem's reference solution (if any).
AuditContext audit_context_for(const ProblemInstance& problem, double delta = 0.5);

// Exit codes: 0 converged / max_iters, 2 diverged. Configuration problems
// throw before any output is written.
int run_experiment(const ExperimentConfig& config);

// Same initial point, W and step size for every named algorithm; one
// subdirectory per algorithm plus comparison.json.
int run_compare(const ExperimentConfig& config, const std::vector<std::string>& algorithms);

struct AuditOptions {
  double gamma_scale = 1.0;
  std::optional<double> mu;  // overrides the config
  bool fit_mu = false;       // empirical PL fit near the reference solution
  double delta = 0.5;
};

// Replays stored snapshots through the inequality audits; 0 when every
// applicable check passes, 3 otherwise.
int run_audit(const std::filesystem::path& run_dir, const AuditOptions& options,
              std::ostream& out);

// Prints the resolved constants as JSON.
int print_constants(const ExperimentConfig& config, std::ostream& out);

}  // namespace stiefel_dgt
