#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "stiefel_dgt/merit.hpp"
#include "stiefel_dgt/network.hpp"
#include "stiefel_dgt/trace.hpp"

namespace stiefel_dgt {

enum class Algorithm { drfgt, centralized_landing, retraction_dgt };

Algorithm algorithm_from_string(const std::string& name);
std::string to_string(Algorithm alg);

enum class ExitReason { converged, max_iters, diverged };
std::string to_string(ExitReason reason);

struct AlgorithmConfig {
  double alpha = 1e-3;
  double lambda = 1.0;
  double epsilon = 0.5;
  long max_iters = 10000;
  double tol_grad = 0.0;
  double tol_consensus = 0.0;
  int consensus_rounds = 1;  // retraction baseline only
  std::uint64_t seed = 0;

  void validate() const;
  LandingParams landing_params() const { return {lambda, epsilon}; }
};

// Per-agent iterates x_i, trackers y_i and the stored local landing fields.
// Initialization follows the algorithm: x_i = x0, y_i = 0, stored field = 0,
// which makes mean(y_k) track the mean landing field for every k >= 1.
struct NetworkState {
  BlockVec x;
  BlockVec y;
  BlockVec lam;
  long k = 0;

  int n() const { return static_cast<int>(x.size()); }
  Matrix mean_x() const;
  Matrix mean_y() const;
  Matrix mean_lam() const;
};

NetworkState init_network_state(const Matrix& x0, int n);

// One synchronous round of decentralized retraction-free gradient tracking:
//   x   <- W x - alpha y        (previous y)
//   L_i <- grad f_i(x_i) + lambda x_i (x_i'x_i - I)
//   y   <- W y + L_new - L_old
// Throws DivergenceError when an update stops being finite.
NetworkState drfgt_step(const NetworkState& state, const ProblemInstance& problem,
                        const MixingMatrix& w, const AlgorithmConfig& cfg);

// x <- x - alpha Lambda(x)
Matrix centralized_landing_step(const Matrix& x, const Objective& f, const AlgorithmConfig& cfg);

// Retraction-based gradient-tracking baseline: trackers follow the local
// Riemannian gradients, consensus_rounds mixing sweeps feed a tangent step
// retracted through QR. Inputs must be feasible to 1e-10.
NetworkState retraction_dgt_step(const NetworkState& state, const ProblemInstance& problem,
                                 const MixingMatrix& w, const AlgorithmConfig& cfg);

// Four-term safe step size from the network safety proposition.
double safe_step_size(double grad_bound_G, double L_prime, double lambda, double epsilon,
                      double sigma_w, int n);

// (1-s^2)^2 / ((1+s^2) 16 L'): spectral radius of the consensus system < 1 below it.
double stable_step_size(double L_prime, double sigma_w);

// Extra premises of the ergodic bound and of the local linear-rate theorem.
double ergodic_step_bound(double L_prime, double sigma_w, double rho, double C);
double linear_rate_step_bound(double L_prime, double sigma_w, double rho, double mu_prime,
                              double C);

struct RunHooks {
  std::function<void(const TraceRecord&)> on_trace;
  std::function<void(const NetworkState&)> on_state;
  std::function<double()> clock;  // seconds; default: wall clock from run start
};

struct RunResult {
  NetworkState state;
  ExitReason reason = ExitReason::max_iters;
  long iterations = 0;
};

// Iterates until max_iters or until both ||Lambda(xbar)|| <= tol_grad and
// sum_i ||x_i - xbar|| <= tol_consensus. Emits one TraceRecord per iteration
// (including the initial state). Divergence is reported through the exit
// reason; the thrown iteration index is preserved in the result.
RunResult run(Algorithm alg, const ProblemInstance& problem, const MixingMatrix& w,
              const AlgorithmConfig& cfg, const MeritConstants& consts, const Matrix& x0,
              const RunHooks& hooks = {});

}  // namespace stiefel_dgt
