#pragma once

#include <utility>
#include <vector>

#include "stiefel_dgt/algorithms.hpp"

namespace stiefel_dgt {

// Metrics row for the current state. Projections needed for the feasibility
// distance are counted in the metric bucket, not the optimization path.
TraceRecord record(const NetworkState& state, const ProblemInstance& problem,
                   const MeritConstants& consts, const LandingParams& params,
                   double wall_time_s);

// Consensus-error transition matrix of the stability theorem:
//   [ (1+s^2)/2 + 4 L'^2 a^2 T ,  8 T      ]      T = (1+s^2)/(1-s^2)
//   [ a^2 L'^2 T               , (1+s^2)/2 ]
Eigen::Matrix2d build_Gtilde(double alpha, double L_prime, double sigma_w);

// Three-state transition matrix of the local linear-rate theorem (consensus
// errors plus the merit gap).
Eigen::Matrix3d build_M(double alpha, double L_prime, double sigma_w, double rho,
                        double mu_prime, double C);

// Largest eigenvalue modulus of a non-negative matrix: power iteration at
// tolerance 1e-12 (at most 1e5 sweeps) with a dense-eigensolver fallback.
double spectral_radius(const Matrix& a);

struct RateReport {
  long k_start = 0;
  long k_end = 0;
  double slope = 0.0;      // per-iteration log decay
  double r_squared = 0.0;
  double implied_rate = 1.0;  // exp(slope)
};

// Least-squares line through (k, ln gap); needs >= 20 positive points, gaps
// below 1e-14 are dropped as noise floor.
RateReport fit_linear_rate(const std::vector<std::pair<long, double>>& gaps);

struct ErgodicReport {
  long K = 0;
  double mean_sq_landing = 0.0;  // (1/K) sum ||Lambda(xbar_{k-1})||^2
  double bound = 0.0;            // (4/(alpha rho K)) (L(xbar_0) - L(xbar_K))
  double ratio = 0.0;
  bool premise_ok = false;
  bool pass = false;
};

// Evaluates the ergodic bound over trace rows [0, K]; K = -1 means the whole
// trace. premise_alpha_max is the step-size premise of the theorem.
ErgodicReport ergodic_check(const std::vector<TraceRecord>& trace, double alpha, double rho,
                            double premise_alpha_max, long K = -1);

// Conservative empirical PL factor near a known optimum: the minimum of
// ||grad f||^2 / (2 (f - f*)) over retracted tangent perturbations, damped
// by 0.9.
double estimate_pl_mu(const ProblemInstance& problem, const Matrix& xstar, double fstar,
                      int samples, double radius, std::uint64_t seed);

}  // namespace stiefel_dgt
