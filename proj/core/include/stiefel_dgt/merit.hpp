#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stiefel_dgt/problems.hpp"

namespace stiefel_dgt {

// Constants attached to the merit function L = f + h + gamma p for a fixed
// (lambda, epsilon). gamma sits 5% above its lower bound
//   gamma >= 2/(3-4e) (L(1-e) + 3s + Lhat^2 (1+e)^2 / (lambda(1-e))),
// rho = min{1/2, gamma/(4 lambda (1+e))} and C = 3L'/(lambda(1-e)) + 2.
struct MeritConstants {
  double gamma = 0.0;
  double rho = 0.0;
  double C = 0.0;
  double s = 0.0;       // sup ||sym(x' grad f(x))||
  double L_hat = 0.0;   // max(L, sup ||grad f||)
  double L_prime = 0.0; // max{Lhat, L_L, L_Lambda} via the smoothness bound
  double smoothness_L = 0.0;
  double grad_bound_G = 0.0;  // sup_i sup_x ||grad f_i(x)||_F over the safety region
  double lambda = 0.0;
  double epsilon = 0.0;
  std::optional<double> mu;
  std::optional<double> mu_prime;
  bool estimated = false;  // true when the suprema come from sampling
};

// lambda-independent suprema over the safety region.
struct RawBounds {
  double smoothness_L = 0.0;  // global Lipschitz factor of the gradients
  double grad_sup = 0.0;      // sup ||grad f(x)||
  double sym_sup = 0.0;       // sup ||sym(x' grad f(x))||
  double grad_bound_G = 0.0;  // sup_i sup_x ||grad f_i(x)||_F
  bool estimated = false;

  double l_hat() const;  // max(L, grad_sup), floored at 1e-12
};

// Spectral bounds for quadratic PCA, otherwise maxima over sample_count
// points of the safety region inflated by 1.5. Deterministic given the seed.
RawBounds estimate_raw_bounds(const ProblemInstance& problem, double epsilon, int sample_count,
                              std::uint64_t seed);

// Assembles the derived constants from raw suprema. grad_sup is
// sup ||grad f(x)|| over the safety region; smoothness_L the global L.
MeritConstants constants_from_bounds(double smoothness_L, double grad_sup, double sym_sup,
                                     double grad_bound_G, const LandingParams& params,
                                     std::optional<double> mu, bool estimated);
MeritConstants constants_from_bounds(const RawBounds& bounds, const LandingParams& params,
                                     std::optional<double> mu = std::nullopt);

// Replaces gamma and recomputes everything downstream of it (rho, L', C and
// mu' when a PL factor is attached). Used by the audit sentinels.
MeritConstants with_gamma(MeritConstants consts, double gamma);

// The lower bound gamma must satisfy for the stored (L, s, Lhat, lambda,
// epsilon); the gamma_premise audit checks against it.
double gamma_lower_bound(const MeritConstants& consts);

// Analytic spectral constants for quadratic PCA problems, sampled suprema
// (inflated by 1.5) otherwise. Deterministic given the seed.
MeritConstants estimate_constants(const ProblemInstance& problem, const LandingParams& params,
                                  int sample_count, std::uint64_t seed);

// Attaches a PL factor and derives mu' per the pseudo-gradient-domination
// bound 1/mu' = max{1/mu, (2(3+2e)^2 Lhat^2 + mu L') / (2 mu lambda^2 (1-e)^2)}.
MeritConstants with_pl_constant(MeritConstants consts, double mu);

// L(x) = f(x) - <sym(x' grad f(x)), x'x - I>/2 + gamma p(x).
// Warns when x is outside the safety region.
double merit_value(const Matrix& x, const Objective& f, const MeritConstants& consts);

// Same, without the domain warning (used by metrics and finite differences).
double merit_value_quiet(const Matrix& x, const Objective& f, const MeritConstants& consts);

// grad L(x) = grad f(x) - x sym(x' grad f(x)), valid on the manifold only.
Matrix merit_gradient_on_manifold(const Matrix& x, const Matrix& euclid_grad);

// Central finite differences of the merit value (h = 1e-6); defined at
// infeasible iterates where the closed form is not.
Matrix merit_gradient_offmanifold(const Matrix& x, const Objective& f,
                                  const MeritConstants& consts);

struct AuditCheck {
  std::string name;
  bool applicable = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // oriented so that >= 0 means satisfied
  bool pass = false;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  bool estimated_constants = false;

  bool all_applicable_pass() const;
  const AuditCheck* find(std::string_view name) const;
};

// Optional ground truth for the distance-based checks.
struct AuditContext {
  std::optional<double> f_star;
  std::function<double(const Matrix&)> dist_to_solutions;
  double delta = 0.5;
};

inline constexpr double kAuditSlackTol = 1e-10;

// Named checks:
//   gamma_premise  gamma >= its lower bound (constant-level)
//   prop1          <Lambda, grad L> >= rho ||Lambda||^2
//   lemma9         ||grad L|| <= C ||Lambda||
//   lemma6         ||grad L|| <= 2 ||Lambda||        (feasible x only)
//   lemma8         L - f* <= ||Lambda||^2 / mu'      (needs mu and dist <= delta)
//   lemma5         L - f* >= mu' rho^2 dist^2 / 4    (needs mu and dist <= delta)
// Outside the safety region every check reports not-applicable.
AuditReport audit_inequalities(const Matrix& x, const Objective& f, const LandingParams& params,
                               const MeritConstants& consts, const AuditContext& ctx = {});

}  // namespace stiefel_dgt
