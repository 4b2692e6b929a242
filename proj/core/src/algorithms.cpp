#include "stiefel_dgt/algorithms.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

#include "stiefel_dgt/diagnostics.hpp"
#include "stiefel_dgt/parallel.hpp"
#include "stiefel_dgt/warnings.hpp"

namespace stiefel_dgt {

namespace {

std::atomic<int> g_thread_cap{-1};

int thread_cap_from_env() {
  const char* env = std::getenv("STIEFEL_DGT_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  const long v = std::strtol(env, nullptr, 10);
  if (v == 0) return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::max(1l, v));
}

constexpr double kIterateNormGuard = 1e6;

void check_finite_blocks(const BlockVec& blocks, long iteration) {
  double worst = 0.0;
  bool bad = false;
  for (const auto& b : blocks) {
    const double m = b.cwiseAbs().maxCoeff();
    worst = std::max(worst, m);
    if (!b.allFinite() || b.norm() > kIterateNormGuard) bad = true;
  }
  if (bad) throw DivergenceError(iteration, worst);
}

Matrix block_mean(const BlockVec& blocks) {
  Matrix mean = Matrix::Zero(blocks.front().rows(), blocks.front().cols());
  for (const auto& b : blocks) mean += b;
  return mean / static_cast<double>(blocks.size());
}

}  // namespace

int configured_threads() {
  int cap = g_thread_cap.load();
  if (cap < 0) {
    cap = thread_cap_from_env();
    g_thread_cap = cap;
  }
  return cap;
}

void set_thread_cap(int threads) { g_thread_cap = threads < 1 ? 1 : threads; }

void parallel_for(int count, const std::function<void(int)>& fn) {
  const int workers = std::min(configured_threads(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

Algorithm algorithm_from_string(const std::string& name) {
  std::string s = name;
  for (auto& ch : s)
    if (ch == '_') ch = '-';
  if (s == "drfgt") return Algorithm::drfgt;
  if (s == "centralized-landing") return Algorithm::centralized_landing;
  if (s == "retraction-dgt") return Algorithm::retraction_dgt;
  throw ParameterError("unknown algorithm '" + name + "'");
}

std::string to_string(Algorithm alg) {
  switch (alg) {
    case Algorithm::drfgt: return "drfgt";
    case Algorithm::centralized_landing: return "centralized-landing";
    case Algorithm::retraction_dgt: return "retraction-dgt";
  }
  return "?";
}

std::string to_string(ExitReason reason) {
  switch (reason) {
    case ExitReason::converged: return "converged";
    case ExitReason::max_iters: return "max_iters";
    case ExitReason::diverged: return "diverged";
  }
  return "?";
}

void AlgorithmConfig::validate() const {
  if (!(alpha > 0.0)) throw ParameterError("AlgorithmConfig: alpha must be positive");
  if (!(lambda > 0.0)) throw ParameterError("AlgorithmConfig: lambda must be positive");
  if (!(epsilon > 0.0 && epsilon < 0.75))
    throw ParameterError("AlgorithmConfig: epsilon must lie in (0, 3/4)");
  if (max_iters < 1) throw ParameterError("AlgorithmConfig: max_iters must be >= 1");
  if (tol_grad < 0.0 || tol_consensus < 0.0)
    throw ParameterError("AlgorithmConfig: tolerances must be non-negative");
  if (consensus_rounds < 1) throw ParameterError("AlgorithmConfig: consensus_rounds >= 1");
}

Matrix NetworkState::mean_x() const { return block_mean(x); }
Matrix NetworkState::mean_y() const { return block_mean(y); }
Matrix NetworkState::mean_lam() const { return block_mean(lam); }

NetworkState init_network_state(const Matrix& x0, int n) {
  if (n < 1) throw ParameterError("init_network_state: need n >= 1");
  NetworkState state;
  state.x.assign(n, x0);
  state.y.assign(n, Matrix::Zero(x0.rows(), x0.cols()));
  state.lam.assign(n, Matrix::Zero(x0.rows(), x0.cols()));
  state.k = 0;
  return state;
}

NetworkState drfgt_step(const NetworkState& state, const ProblemInstance& problem,
                        const MixingMatrix& w, const AlgorithmConfig& cfg) {
  const int n = state.n();
  if (n != w.size() || n != problem.n())
    throw DimensionError("drfgt_step: state, problem and W disagree on n");

  NetworkState next;
  next.k = state.k + 1;
  next.x = mix(w, state.x);
  for (int i = 0; i < n; ++i) next.x[i].noalias() -= cfg.alpha * state.y[i];
  check_finite_blocks(next.x, next.k);

  next.lam.assign(n, Matrix());
  parallel_for(n, [&](int i) {
    const Matrix grad = problem.local_gradient(i, next.x[i]);
    next.lam[i] = relative_gradient(next.x[i], grad) + cfg.lambda * penalty_gradient(next.x[i]);
  });

  next.y = mix(w, state.y);
  for (int i = 0; i < n; ++i) next.y[i] += next.lam[i] - state.lam[i];
  check_finite_blocks(next.y, next.k);
  return next;
}

Matrix centralized_landing_step(const Matrix& x, const Objective& f, const AlgorithmConfig& cfg) {
  const Matrix field = landing_field(x, f.gradient(x), cfg.landing_params());
  Matrix next = x - cfg.alpha * field;
  if (!next.allFinite() || next.norm() > kIterateNormGuard)
    throw DivergenceError(-1, next.cwiseAbs().maxCoeff());
  return next;
}

NetworkState retraction_dgt_step(const NetworkState& state, const ProblemInstance& problem,
                                 const MixingMatrix& w, const AlgorithmConfig& cfg) {
  const int n = state.n();
  if (n != w.size() || n != problem.n())
    throw DimensionError("retraction_dgt_step: state, problem and W disagree on n");
  for (const auto& xi : state.x)
    if (feasibility_residual(xi) > 1e-10)
      throw PreconditionError("retraction_dgt_step: iterates must be feasible to 1e-10");

  // Multi-step consensus target in the ambient space.
  BlockVec target = state.x;
  for (int round = 0; round < cfg.consensus_rounds; ++round) target = mix(w, target);

  NetworkState next;
  next.k = state.k + 1;
  next.x.assign(n, Matrix());
  next.lam.assign(n, Matrix());
  parallel_for(n, [&](int i) {
    const Matrix direction = (target[i] - state.x[i]) - cfg.alpha * state.y[i];
    next.x[i] = qr_retraction(state.x[i], tangent_project(state.x[i], direction));
    next.lam[i] = relative_gradient(next.x[i], problem.local_gradient(i, next.x[i]));
  });
  check_finite_blocks(next.x, next.k);

  next.y = mix(w, state.y);
  for (int i = 0; i < n; ++i) next.y[i] += next.lam[i] - state.lam[i];
  check_finite_blocks(next.y, next.k);
  return next;
}

double safe_step_size(double grad_bound_G, double L_prime, double lambda, double epsilon,
                      double sigma_w, int n) {
  if (grad_bound_G < 0.0 || !(L_prime > 0.0) || !(lambda > 0.0))
    throw ParameterError("safe_step_size: G >= 0, L', lambda > 0 required");
  if (!(epsilon > 0.0 && epsilon < 0.75))
    throw ParameterError("safe_step_size: epsilon must lie in (0, 3/4)");
  if (!(sigma_w >= 0.0 && sigma_w < 1.0))
    throw ParameterError("safe_step_size: sigma_w must lie in [0, 1)");
  if (n < 1) throw ParameterError("safe_step_size: n >= 1 required");

  const double one_minus = 1.0 - sigma_w;
  const double drift = grad_bound_G + lambda * epsilon * (1.0 + epsilon);
  const double t1 = one_minus * one_minus * epsilon / (20.0 * std::sqrt(double(n)) * drift);
  const double t2 = lambda * epsilon * epsilon * one_minus * one_minus / (16.0 * L_prime * drift);
  const double t3 = 1.0 / (2.0 * lambda);
  const double t4 = lambda * epsilon * (1.0 - epsilon) /
                    (2.0 * (grad_bound_G * grad_bound_G +
                            lambda * lambda * (1.0 + epsilon) * epsilon * epsilon +
                            std::pow(epsilon, 4) * lambda * lambda / 16.0));
  return std::min(std::min(t1, t2), std::min(t3, t4));
}

double stable_step_size(double L_prime, double sigma_w) {
  if (!(L_prime > 0.0)) throw ParameterError("stable_step_size: L' must be positive");
  if (!(sigma_w >= 0.0 && sigma_w < 1.0))
    throw ParameterError("stable_step_size: sigma_w must lie in [0, 1)");
  const double g = 1.0 - sigma_w * sigma_w;
  return g * g / ((1.0 + sigma_w * sigma_w) * 16.0 * L_prime);
}

double ergodic_step_bound(double L_prime, double sigma_w, double rho, double C) {
  const double g = 1.0 - sigma_w * sigma_w;
  const double cbrt_term =
      std::cbrt(rho * std::pow(g, 4) / (std::pow(1.0 + sigma_w * sigma_w, 2) * C * C)) /
      (4.0 * L_prime);
  return std::min({stable_step_size(L_prime, sigma_w), cbrt_term, rho / (8.0 * L_prime)});
}

double linear_rate_step_bound(double L_prime, double sigma_w, double rho, double mu_prime,
                              double C) {
  const double g = 1.0 - sigma_w * sigma_w;
  const double theta = (1.0 + sigma_w * sigma_w) / g;
  const double phi = 4.0 * L_prime / (rho * mu_prime) + 8.0 * L_prime * C * C / (rho * rho * mu_prime);
  const double t3 = std::sqrt(g) /
                    (4.0 * L_prime * std::sqrt(theta) * std::pow(1.0 + 12.0 * phi / (rho * rho), 0.25));
  return std::min({rho / (2.0 * L_prime), g / (rho * mu_prime), t3, g / (16.0 * L_prime * theta)});
}

RunResult run(Algorithm alg, const ProblemInstance& problem, const MixingMatrix& w,
              const AlgorithmConfig& cfg, const MeritConstants& consts, const Matrix& x0,
              const RunHooks& hooks) {
  cfg.validate();
  if (alg == Algorithm::drfgt) {
    const double safe = safe_step_size(consts.grad_bound_G, consts.L_prime, cfg.lambda,
                                       cfg.epsilon, w.sigma(), w.size());
    const double stable = stable_step_size(consts.L_prime, w.sigma());
    if (cfg.alpha > std::min(safe, stable))
      warn("run: alpha " + std::to_string(cfg.alpha) + " exceeds min(safe, stable) = " +
           std::to_string(std::min(safe, stable)));
  }

  const int n = (alg == Algorithm::centralized_landing) ? 1 : w.size();
  NetworkState state = init_network_state(x0, n);
  if (alg == Algorithm::centralized_landing) {
    // A single agent holding the global field; keeps the trace metrics exact.
    state.lam[0] = landing_field(x0, problem.global_gradient(x0), cfg.landing_params());
    state.y[0] = state.lam[0];
  }
  const Objective global = problem.global_objective();

  const auto t0 = std::chrono::steady_clock::now();
  auto now_seconds = [&]() {
    if (hooks.clock) return hooks.clock();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  const LandingParams params = cfg.landing_params();
  auto emit = [&](const NetworkState& s) -> TraceRecord {
    const TraceRecord rec = record(s, problem, consts, params, now_seconds());
    if (hooks.on_trace) hooks.on_trace(rec);
    if (hooks.on_state) hooks.on_state(s);
    return rec;
  };

  TraceRecord rec = emit(state);
  auto converged = [&](const TraceRecord& r) {
    return r.landing_norm_avg <= cfg.tol_grad && r.consensus_x <= cfg.tol_consensus;
  };
  if (converged(rec)) return {std::move(state), ExitReason::converged, 0};

  for (long k = 0; k < cfg.max_iters; ++k) {
    try {
      switch (alg) {
        case Algorithm::drfgt:
          state = drfgt_step(state, problem, w, cfg);
          break;
        case Algorithm::centralized_landing: {
          const Matrix next = centralized_landing_step(state.x[0], global, cfg);
          state.x[0] = next;
          state.lam[0] = landing_field(next, global.gradient(next), params);
          state.y[0] = state.lam[0];
          ++state.k;
          break;
        }
        case Algorithm::retraction_dgt:
          state = retraction_dgt_step(state, problem, w, cfg);
          break;
      }
    } catch (const DivergenceError& e) {
      warn(std::string("run: ") + e.what());
      return {std::move(state), ExitReason::diverged, k + 1};
    }
    rec = emit(state);
    if (converged(rec)) return {std::move(state), ExitReason::converged, k + 1};
  }
  return {std::move(state), ExitReason::max_iters, cfg.max_iters};
}

}  // namespace stiefel_dgt
