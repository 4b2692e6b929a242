#include "stiefel_dgt/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>

#include "stiefel_dgt/linalg_count.hpp"
#include "stiefel_dgt/matrix_io.hpp"
#include "stiefel_dgt/warnings.hpp"

namespace stiefel_dgt {

using nlohmann::json;

namespace {

constexpr std::uint64_t kInitSeedSalt = 0x9e3779b97f4a7c15ull;

MixingMatrix build_mixing(const NetworkSpec& spec) {
  if (spec.topology == "complete") return build_complete(spec.n);
  if (spec.topology == "ring") {
    if (spec.weights == "self") return build_ring(spec.n, spec.self_weight);
    return build_metropolis(ring_edges(spec.n), spec.n);
  }
  if (spec.topology == "star") return build_metropolis(star_edges(spec.n), spec.n);
  if (spec.topology == "path") return build_metropolis(path_edges(spec.n), spec.n);
  if (spec.topology == "edges") {
    if (spec.edges.empty()) throw ConfigError("network.topology = edges needs network.edges");
    return build_metropolis(spec.edges, spec.n);
  }
  if (spec.topology == "explicit") {
    if (spec.w_explicit.size() == 0)
      throw ConfigError("network.topology = explicit needs network.w_inline");
    return MixingMatrix::from_dense(spec.w_explicit);
  }
  throw ConfigError("unknown network.topology '" + spec.topology + "'");
}

ProblemInstance build_problem(const ProblemSpec& spec, int n) {
  std::shared_ptr<PcaInstance> pca;
  if (spec.type == "synthetic-pca") {
    auto [inst, problem] = generate_synthetic_pca(n, spec.d, spec.r, spec.m_per_agent,
                                                  spec.condition_target, spec.seed);
    inst.sign = spec.sign;
    pca = std::make_shared<PcaInstance>(std::move(inst));
  } else if (spec.type == "dataset-pca") {
    if (spec.dataset.empty()) throw ConfigError("dataset-pca needs problem.dataset");
    if (!std::filesystem::exists(spec.dataset))
      throw ConfigError("dataset file '" + spec.dataset + "' does not exist");
    pca = std::make_shared<PcaInstance>(load_dataset_matrix(
        spec.dataset, n, spec.partition, spec.r, spec.sign, spec.center, spec.header, 1.0));
  } else {
    throw ConfigError("unknown problem.type '" + spec.type + "'");
  }

  if (spec.covariance_scale == "auto") {
    scale_covariances(*pca, 1.0 / static_cast<double>(std::max(1, spec.m_per_agent)));
  } else if (spec.covariance_scale != "raw") {
    double factor = 0.0;
    try {
      factor = std::stod(spec.covariance_scale);
    } catch (const std::exception&) {
      throw ConfigError("covariance_scale must be raw, auto or a number");
    }
    scale_covariances(*pca, factor);
  }

  ProblemInstance problem = make_problem(std::shared_ptr<const PcaInstance>(pca));
  if (spec.validate_gradients) validate_gradients(problem, 10, 1e-5, spec.seed + 17);
  return problem;
}

json constants_json(const ResolvedSetup& setup) {
  const MeritConstants& c = setup.consts;
  json j{{"alpha", setup.algorithm_config.alpha},
         {"lambda", c.lambda},
         {"gamma", c.gamma},
         {"rho", c.rho},
         {"C", c.C},
         {"L_prime", c.L_prime},
         {"L_hat", c.L_hat},
         {"s", c.s},
         {"G", c.grad_bound_G},
         {"smoothness_L", c.smoothness_L},
         {"epsilon", c.epsilon},
         {"sigma_W", setup.mixing.sigma()},
         {"alpha_safe", setup.alpha_safe},
         {"alpha_stable", setup.alpha_stable},
         {"estimated_constants", c.estimated},
         {"seed", setup.algorithm_config.seed}};
  j["mu"] = c.mu.has_value() ? json(*c.mu) : json(nullptr);
  j["mu_prime"] = c.mu_prime.has_value() ? json(*c.mu_prime) : json(nullptr);
  return j;
}

json trace_json(const TraceRecord& r) {
  return json{{"k", r.k},
              {"grad_norm_sum", r.grad_norm_sum},
              {"landing_norm_avg", r.landing_norm_avg},
              {"consensus_x", r.consensus_x},
              {"consensus_y", r.consensus_y},
              {"feasibility_avg", r.feasibility_avg},
              {"merit_avg", r.merit_avg},
              {"wall_time_s", r.wall_time_s},
              {"qr_svd_count", r.qr_svd_count}};
}

void append_audit_lines(std::ostream& out, long iteration, const Matrix& xbar,
                        const ResolvedSetup& setup, const MeritConstants& consts,
                        const AuditContext& ctx, bool* any_failure) {
  const Objective f = setup.problem.global_objective();
  const AuditReport at_mean = audit_inequalities(xbar, f, setup.params, consts, ctx);
  auto emit = [&](const AuditCheck& check, const char* point) {
    json j{{"iteration", iteration}, {"check", check.name},    {"point", point},
           {"applicable", check.applicable}, {"estimated_constants", consts.estimated}};
    if (check.applicable) {
      j["lhs"] = check.lhs;
      j["rhs"] = check.rhs;
      j["slack"] = check.slack;
      j["pass"] = check.pass;
      if (!check.pass && any_failure != nullptr) *any_failure = true;
    } else {
      j["lhs"] = nullptr;
      j["rhs"] = nullptr;
      j["slack"] = nullptr;
      j["pass"] = nullptr;
    }
    out << j.dump() << "\n";
  };
  for (const auto& check : at_mean.checks)
    if (check.name != "lemma6") emit(check, "mean");
  // The on-manifold bound is checked at the projected mean, where it applies.
  try {
    const Matrix projected = project_to_stiefel(xbar);
    const AuditReport at_proj = audit_inequalities(projected, f, setup.params, consts, ctx);
    if (const AuditCheck* lemma6 = at_proj.find("lemma6"); lemma6 != nullptr)
      emit(*lemma6, "projected_mean");
  } catch (const SingularityError&) {
    emit(AuditCheck{"lemma6", false, 0, 0, 0, false}, "projected_mean");
  }
}

struct SingleRunOutput {
  RunResult result;
  TraceRecord final_record;
  long iterations_to_tolerance = -1;
  opcount::Counts optimization_counts;
  opcount::Counts metric_counts;
  double wall_time_s = 0.0;
};

SingleRunOutput run_to_directory(const ResolvedSetup& setup, Algorithm alg,
                                 const ExperimentConfig& config,
                                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const bool want_csv = config.output.format == "csv" || config.output.format == "both";
  const bool want_jsonl = config.output.format == "jsonl" || config.output.format == "both";
  if (!want_csv && !want_jsonl)
    throw ConfigError("output.format must be csv, jsonl or both");

  std::ofstream csv;
  std::ofstream jsonl;
  if (want_csv) {
    csv.open(dir / "trace.csv");
    csv << trace_csv_header() << "\n";
  }
  if (want_jsonl) jsonl.open(dir / "trace.jsonl");

  std::ofstream audit_stream;
  if (config.output.audit) {
    if (config.output.audit_stride < 1) throw ConfigError("output.audit_stride must be >= 1");
    std::filesystem::create_directories(dir / "snapshots");
    audit_stream.open(dir / "audit.jsonl");
  }

  const AuditContext ctx = audit_context_for(setup.problem);
  opcount::reset();

  SingleRunOutput output;
  TraceRecord last{};
  RunHooks hooks;
  hooks.on_trace = [&](const TraceRecord& rec) {
    last = rec;
    if (want_csv) csv << to_csv_row(rec) << "\n";
    if (want_jsonl) jsonl << to_json_line(rec) << "\n";
    if (output.iterations_to_tolerance < 0 && rec.landing_norm_avg <= setup.algorithm_config.tol_grad &&
        rec.consensus_x <= setup.algorithm_config.tol_consensus)
      output.iterations_to_tolerance = rec.k;
  };
  if (config.output.audit) {
    hooks.on_state = [&](const NetworkState& state) {
      if (state.k % config.output.audit_stride != 0) return;
      Matrix stacked(state.n() * setup.problem.d(), setup.problem.r());
      for (int i = 0; i < state.n(); ++i)
        stacked.middleRows(static_cast<Eigen::Index>(i) * setup.problem.d(), setup.problem.d()) =
            state.x[i];
      char name[32];
      std::snprintf(name, sizeof name, "snap_%08ld.dmat", state.k);
      write_dmat(dir / "snapshots" / name, stacked);
      append_audit_lines(audit_stream, state.k, state.mean_x(), setup, setup.consts, ctx,
                         nullptr);
    };
  }

  output.result = run(alg, setup.problem, setup.mixing, setup.algorithm_config, setup.consts,
                      setup.x0, hooks);
  output.final_record = last;
  output.optimization_counts = opcount::optimization();
  output.metric_counts = opcount::metrics();
  output.wall_time_s = last.wall_time_s;

  json summary{{"algorithm", to_string(alg)},
               {"exit_reason", to_string(output.result.reason)},
               {"iterations", output.result.iterations},
               {"iterations_to_tolerance", output.iterations_to_tolerance},
               {"final", trace_json(last)},
               {"constants", constants_json(setup)},
               {"counts",
                {{"qr_optimization", output.optimization_counts.qr},
                 {"svd_optimization", output.optimization_counts.svd},
                 {"qr_metric", output.metric_counts.qr},
                 {"svd_metric", output.metric_counts.svd}}},
               {"problem",
                {{"type", config.problem.type},
                 {"d", setup.problem.d()},
                 {"r", setup.problem.r()},
                 {"n", setup.problem.n()},
                 {"sign", config.problem.sign},
                 {"seed", config.problem.seed}}}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";

  ExperimentConfig resolved = config;
  resolved.algorithm.name = to_string(alg);
  resolved.algorithm.alpha = json(setup.algorithm_config.alpha).dump();
  resolved.algorithm.lambda = json(setup.algorithm_config.lambda).dump();
  resolved.output.directory = dir.string();
  std::ofstream(dir / "config.resolved") << serialize_config(resolved);
  return output;
}

}  // namespace

ResolvedSetup resolve(const ExperimentConfig& config) {
  if (config.network.n < 1) throw ConfigError("network.n must be >= 1");
  MixingMatrix mixing = build_mixing(config.network);
  ProblemInstance problem = build_problem(config.problem, config.network.n);

  const double epsilon = config.algorithm.epsilon;
  const RawBounds bounds = estimate_raw_bounds(problem, epsilon, config.algorithm.constant_samples,
                                               config.problem.seed + 101);

  // lambda first (alpha's safety bound needs it), alpha second.
  double lambda = 0.0;
  const std::string& lambda_mode = config.algorithm.lambda;
  const std::string& alpha_mode = config.algorithm.alpha;
  const bool alpha_auto = alpha_mode == "auto-safe" || alpha_mode == "auto-stable";
  if (lambda_mode == "auto") {
    lambda = bounds.l_hat();
  } else if (lambda_mode.rfind("ratio:", 0) == 0) {
    if (alpha_auto)
      throw ConfigError("lambda = ratio:<c> requires a numeric alpha (resolved first)");
    try {
      lambda = std::stod(lambda_mode.substr(6)) / std::stod(alpha_mode);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse lambda '" + lambda_mode + "' with alpha '" + alpha_mode +
                        "'");
    }
  } else {
    try {
      lambda = std::stod(lambda_mode);
    } catch (const std::exception&) {
      throw ConfigError("algorithm.lambda must be a number, 'auto' or 'ratio:<c>'");
    }
  }
  if (!(lambda > 0.0)) throw ConfigError("resolved lambda must be positive");

  LandingParams params(lambda, epsilon);
  MeritConstants consts = constants_from_bounds(bounds, params, config.algorithm.mu);

  const double alpha_safe = safe_step_size(consts.grad_bound_G, consts.L_prime, lambda, epsilon,
                                           mixing.sigma(), config.network.n);
  const double alpha_stable = stable_step_size(consts.L_prime, mixing.sigma());
  double alpha = 0.0;
  if (alpha_mode == "auto-safe") {
    alpha = alpha_safe;
  } else if (alpha_mode == "auto-stable") {
    alpha = std::min(alpha_safe, alpha_stable);
  } else {
    try {
      alpha = std::stod(alpha_mode);
    } catch (const std::exception&) {
      throw ConfigError("algorithm.alpha must be a number, 'auto-safe' or 'auto-stable'");
    }
  }
  if (!(alpha > 0.0)) throw ConfigError("resolved alpha must be positive");

  AlgorithmConfig acfg;
  acfg.alpha = alpha;
  acfg.lambda = lambda;
  acfg.epsilon = epsilon;
  acfg.max_iters = config.algorithm.max_iters;
  acfg.tol_grad = config.algorithm.tol_grad;
  acfg.tol_consensus = config.algorithm.tol_consensus;
  acfg.consensus_rounds = config.algorithm.consensus_rounds;
  acfg.seed = config.problem.seed;
  acfg.validate();

  Rng init_rng(config.problem.seed ^ kInitSeedSalt);
  Matrix x0 = project_to_stiefel(init_rng.gaussian(problem.d(), problem.r()));

  return ResolvedSetup{std::move(problem),
                       std::move(mixing),
                       params,
                       std::move(consts),
                       acfg,
                       algorithm_from_string(config.algorithm.name),
                       std::move(x0),
                       alpha_safe,
                       alpha_stable};
}

AuditContext audit_context_for(const ProblemInstance& problem, double delta) {
  AuditContext ctx;
  ctx.delta = delta;
  if (problem.reference_solution.has_value() && problem.reference_value.has_value()) {
    ctx.f_star = problem.reference_value;
    const Matrix xstar = *problem.reference_solution;
    ctx.dist_to_solutions = [xstar](const Matrix& x) { return dist_to_solution_set(x, xstar); };
  }
  return ctx;
}

int run_experiment(const ExperimentConfig& config) {
  const ResolvedSetup setup = resolve(config);
  const SingleRunOutput output =
      run_to_directory(setup, setup.algorithm, config, config.output.directory);
  return output.result.reason == ExitReason::diverged ? 2 : 0;
}

int run_compare(const ExperimentConfig& config, const std::vector<std::string>& algorithms) {
  if (algorithms.size() < 2)
    throw ConfigError("compare needs at least two algorithms");
  const ResolvedSetup setup = resolve(config);
  const std::filesystem::path base = config.output.directory;
  std::filesystem::create_directories(base);

  json comparison;
  comparison["algorithms"] = json::array();
  int exit_code = 0;
  for (const auto& name : algorithms) {
    const Algorithm alg = algorithm_from_string(name);
    const SingleRunOutput output =
        run_to_directory(setup, alg, config, base / to_string(alg));
    if (output.result.reason == ExitReason::diverged) exit_code = 2;
    comparison["algorithms"].push_back(
        {{"name", to_string(alg)},
         {"exit_reason", to_string(output.result.reason)},
         {"iterations", output.result.iterations},
         {"iterations_to_tolerance", output.iterations_to_tolerance},
         {"wall_time_s", output.wall_time_s},
         {"qr_svd_count", output.optimization_counts.total()},
         {"final_grad_norm_sum", output.final_record.grad_norm_sum},
         {"final_feasibility_avg", output.final_record.feasibility_avg}});
  }
  comparison["constants"] = constants_json(setup);
  std::ofstream(base / "comparison.json") << comparison.dump(2) << "\n";
  return exit_code;
}

int run_audit(const std::filesystem::path& run_dir, const AuditOptions& options,
              std::ostream& out) {
  const auto config_path = run_dir / "config.resolved";
  if (!std::filesystem::exists(config_path))
    throw DataError("run_audit: missing " + config_path.string());
  const ExperimentConfig config = parse_config_file(config_path);
  ResolvedSetup setup = resolve(config);

  MeritConstants consts = setup.consts;
  if (options.mu.has_value()) consts = with_pl_constant(consts, *options.mu);
  if (options.fit_mu) {
    if (!setup.problem.reference_solution.has_value())
      throw DataError("run_audit: --fit-mu needs a problem with a reference solution");
    const double mu =
        estimate_pl_mu(setup.problem, *setup.problem.reference_solution,
                       *setup.problem.reference_value, 64, 0.1, config.problem.seed + 313);
    consts = with_pl_constant(consts, mu);
  }
  if (options.gamma_scale != 1.0)
    consts = with_gamma(consts, consts.gamma * options.gamma_scale);

  const auto snap_dir = run_dir / "snapshots";
  std::vector<std::filesystem::path> snapshots;
  if (std::filesystem::exists(snap_dir))
    for (const auto& entry : std::filesystem::directory_iterator(snap_dir))
      if (entry.path().extension() == ".dmat") snapshots.push_back(entry.path());
  std::sort(snapshots.begin(), snapshots.end());
  if (snapshots.empty())
    throw DataError("run_audit: no snapshots stored under " + snap_dir.string() +
                    " (rerun with audit enabled)");

  const AuditContext ctx = audit_context_for(setup.problem, options.delta);
  std::ofstream audit_stream(run_dir / "audit.jsonl");
  bool any_failure = false;
  const int n = setup.problem.n();
  const int d = setup.problem.d();

  out << "iteration  check    point            lhs            rhs          slack  status\n";
  for (const auto& path : snapshots) {
    const Matrix stacked = read_dmat(path);
    if (stacked.rows() != static_cast<Eigen::Index>(n) * d || stacked.cols() != setup.problem.r())
      throw DataError("run_audit: snapshot " + path.string() + " has unexpected shape");
    Matrix xbar = Matrix::Zero(d, setup.problem.r());
    for (int i = 0; i < n; ++i) xbar += stacked.middleRows(static_cast<Eigen::Index>(i) * d, d);
    xbar /= static_cast<double>(n);
    const std::string stem = path.stem().string();  // snap_XXXXXXXX
    const long iteration = std::stol(stem.substr(stem.find('_') + 1));

    std::ostringstream lines;
    append_audit_lines(lines, iteration, xbar, setup, consts, ctx, &any_failure);
    audit_stream << lines.str();
    std::istringstream replay(lines.str());
    std::string line;
    while (std::getline(replay, line)) {
      const json j = json::parse(line);
      out << std::setw(9) << j["iteration"].get<long>() << "  " << std::setw(7)
          << j["check"].get<std::string>() << "  " << std::setw(14)
          << j["point"].get<std::string>() << "  ";
      if (j["applicable"].get<bool>()) {
        out << std::setw(13) << std::setprecision(6) << std::scientific
            << j["lhs"].get<double>() << "  " << std::setw(13) << j["rhs"].get<double>() << "  "
            << std::setw(13) << j["slack"].get<double>() << "  "
            << (j["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
      } else {
        out << std::setw(13) << "-" << "  " << std::setw(13) << "-" << "  " << std::setw(13)
            << "-" << "  n/a\n";
      }
    }
  }
  out.copyfmt(std::ios(nullptr));
  out << (any_failure ? "audit: FAIL" : "audit: PASS") << "\n";
  return any_failure ? 3 : 0;
}

int print_constants(const ExperimentConfig& config, std::ostream& out) {
  const ResolvedSetup setup = resolve(config);
  out << constants_json(setup).dump(2) << "\n";
  return 0;
}

}  // namespace stiefel_dgt
