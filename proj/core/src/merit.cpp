#include "stiefel_dgt/merit.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "stiefel_dgt/warnings.hpp"

namespace stiefel_dgt {

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kLHatFloor = 1e-12;

double sym_inner(const Matrix& a, const Matrix& b) {
  // <A, B> = Tr(A B') for the r x r symmetric factors in h(x).
  return (a.cwiseProduct(b)).sum();
}

}  // namespace

double RawBounds::l_hat() const { return std::max({smoothness_L, grad_sup, kLHatFloor}); }

namespace {

// rho, L', C and mu' all hang off gamma; recompute them together.
void finalize_constants(MeritConstants& c) {
  const double eps = c.epsilon;
  const double lambda = c.lambda;
  c.rho = std::min(0.5, c.gamma / (4.0 * lambda * (1.0 + eps)));
  // L_L <= L_{f+h} + (2+3e) gamma with L_{f+h} taken as (3+3e) Lhat.
  const double l_fh = c.L_hat * (3.0 + 3.0 * eps);
  c.L_prime = std::max(c.L_hat, l_fh + (2.0 + 3.0 * eps) * c.gamma);
  c.C = 3.0 * c.L_prime / (lambda * (1.0 - eps)) + 2.0;
  if (c.mu.has_value()) {
    const double t = 3.0 + 2.0 * eps;
    const double inv_mu_prime =
        std::max(1.0 / *c.mu, (2.0 * t * t * c.L_hat * c.L_hat + *c.mu * c.L_prime) /
                                  (2.0 * *c.mu * lambda * lambda * (1.0 - eps) * (1.0 - eps)));
    c.mu_prime = 1.0 / inv_mu_prime;
  }
}

}  // namespace

MeritConstants constants_from_bounds(double smoothness_L, double grad_sup, double sym_sup,
                                     double grad_bound_G, const LandingParams& params,
                                     std::optional<double> mu, bool estimated) {
  const double eps = params.epsilon;
  const double lambda = params.lambda;
  MeritConstants c;
  c.lambda = lambda;
  c.epsilon = eps;
  c.smoothness_L = smoothness_L;
  c.s = sym_sup;
  c.L_hat = std::max({smoothness_L, grad_sup, kLHatFloor});
  c.grad_bound_G = grad_bound_G;
  c.estimated = estimated;
  if (mu.has_value() && !(*mu > 0.0))
    throw ParameterError("constants_from_bounds: mu must be positive");
  c.mu = mu;

  const double gamma_bound =
      2.0 / (3.0 - 4.0 * eps) *
      (smoothness_L * (1.0 - eps) + 3.0 * c.s +
       c.L_hat * c.L_hat * (1.0 + eps) * (1.0 + eps) / (lambda * (1.0 - eps)));
  c.gamma = 1.05 * gamma_bound;
  finalize_constants(c);
  return c;
}

MeritConstants constants_from_bounds(const RawBounds& bounds, const LandingParams& params,
                                     std::optional<double> mu) {
  return constants_from_bounds(bounds.smoothness_L, bounds.grad_sup, bounds.sym_sup,
                               bounds.grad_bound_G, params, mu, bounds.estimated);
}

MeritConstants with_gamma(MeritConstants consts, double gamma) {
  if (!(gamma > 0.0)) throw ParameterError("with_gamma: gamma must be positive");
  consts.gamma = gamma;
  finalize_constants(consts);
  return consts;
}

double gamma_lower_bound(const MeritConstants& consts) {
  const double eps = consts.epsilon;
  return 2.0 / (3.0 - 4.0 * eps) *
         (consts.smoothness_L * (1.0 - eps) + 3.0 * consts.s +
          consts.L_hat * consts.L_hat * (1.0 + eps) * (1.0 + eps) /
              (consts.lambda * (1.0 - eps)));
}

RawBounds estimate_raw_bounds(const ProblemInstance& problem, double epsilon, int sample_count,
                              std::uint64_t seed) {
  if (!(epsilon > 0.0 && epsilon < 0.75))
    throw ParameterError("estimate_raw_bounds: epsilon must lie in (0, 3/4)");
  RawBounds bounds;

  if (problem.pca) {
    // Quadratic objective: spectral bounds are exact up to the norm choice.
    const PcaInstance& pca = *problem.pca;
    Eigen::SelfAdjointEigenSolver<Matrix> es(pca.mean_covariance(), Eigen::EigenvaluesOnly);
    const double lam_bar = std::max(0.0, es.eigenvalues().maxCoeff());
    double lam_max_agent = 0.0;
    for (const auto& cov : pca.covariances) {
      Eigen::SelfAdjointEigenSolver<Matrix> esi(cov, Eigen::EigenvaluesOnly);
      lam_max_agent = std::max(lam_max_agent, esi.eigenvalues().maxCoeff());
    }
    const double max_d = pca.diag_d(0);
    const double norm_d = pca.diag_d.norm();
    bounds.smoothness_L = 2.0 * lam_bar * max_d;
    bounds.grad_sup = bounds.smoothness_L;
    bounds.sym_sup = 2.0 * (1.0 + epsilon) * lam_bar * norm_d;
    bounds.grad_bound_G = 2.0 * std::pow(1.0 + epsilon, 1.5) * lam_max_agent * norm_d;
    bounds.estimated = false;
    return bounds;
  }

  if (sample_count < 100) throw ParameterError("estimate_raw_bounds: need sample_count >= 100");
  Rng rng(seed);
  const Objective f = problem.global_objective();
  double grad_sup = 0.0, sym_sup = 0.0, g_sup = 0.0, l_sup = 0.0;
  for (int k = 0; k < sample_count; ++k) {
    const Matrix x = sample_safety_region(rng, problem.d(), problem.r(), epsilon);
    const Matrix g = f.gradient(x);
    grad_sup = std::max(grad_sup, g.norm());
    sym_sup = std::max(sym_sup, sym(x.transpose() * g).norm());
    for (int i = 0; i < problem.n(); ++i)
      g_sup = std::max(g_sup, relative_gradient(x, problem.local_gradient(i, x)).norm());
    // Two-point smoothness probe along a random direction.
    Matrix dir = rng.gaussian(problem.d(), problem.r());
    dir *= (0.05 / dir.norm());
    l_sup = std::max(l_sup, (f.gradient(x + dir) - g).norm() / dir.norm());
  }
  const double inflate = 1.5;
  bounds.smoothness_L =
      problem.smoothness_L.has_value() ? *problem.smoothness_L : inflate * l_sup;
  bounds.grad_sup = inflate * grad_sup;
  bounds.sym_sup = inflate * sym_sup;
  bounds.grad_bound_G = inflate * g_sup;
  bounds.estimated = true;
  return bounds;
}

MeritConstants estimate_constants(const ProblemInstance& problem, const LandingParams& params,
                                  int sample_count, std::uint64_t seed) {
  if (sample_count < 100) throw ParameterError("estimate_constants: need sample_count >= 100");
  const RawBounds bounds = estimate_raw_bounds(problem, params.epsilon, sample_count, seed);
  return constants_from_bounds(bounds, params);
}

MeritConstants with_pl_constant(MeritConstants consts, double mu) {
  if (!(mu > 0.0)) throw ParameterError("with_pl_constant: mu must be positive");
  consts.mu = mu;
  const double eps = consts.epsilon;
  const double t = 3.0 + 2.0 * eps;
  const double inv_mu_prime =
      std::max(1.0 / mu, (2.0 * t * t * consts.L_hat * consts.L_hat + mu * consts.L_prime) /
                             (2.0 * mu * consts.lambda * consts.lambda * (1.0 - eps) *
                              (1.0 - eps)));
  consts.mu_prime = 1.0 / inv_mu_prime;
  return consts;
}


double merit_value_quiet(const Matrix& x, const Objective& f, const MeritConstants& consts) {
  const Matrix g = f.gradient(x);
  Matrix residual = x.transpose() * x;
  residual.diagonal().array() -= 1.0;
  const Matrix sym_part = sym(x.transpose() * g);
  const double h = -0.5 * sym_inner(sym_part, residual);
  const double p = 0.25 * residual.squaredNorm();
  return f.value(x) + h + consts.gamma * p;
}

double merit_value(const Matrix& x, const Objective& f, const MeritConstants& consts) {
  if (feasibility_residual(x) > consts.epsilon)
    warn("merit_value: iterate outside the safety region (residual " +
         std::to_string(feasibility_residual(x)) + " > epsilon " +
         std::to_string(consts.epsilon) + ")");
  return merit_value_quiet(x, f, consts);
}

Matrix merit_gradient_on_manifold(const Matrix& x, const Matrix& euclid_grad) {
  if (x.rows() != euclid_grad.rows() || x.cols() != euclid_grad.cols())
    throw DimensionError("merit_gradient_on_manifold: shape mismatch");
  if (feasibility_residual(x) > 1e-10)
    throw PreconditionError("merit_gradient_on_manifold: x must be feasible (residual <= 1e-10)");
  return euclid_grad - x * sym(x.transpose() * euclid_grad);
}

Matrix merit_gradient_offmanifold(const Matrix& x, const Objective& f,
                                  const MeritConstants& consts) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double saved = probe(i, j);
      probe(i, j) = saved + kFdStep;
      const double up = merit_value_quiet(probe, f, consts);
      probe(i, j) = saved - kFdStep;
      const double down = merit_value_quiet(probe, f, consts);
      probe(i, j) = saved;
      grad(i, j) = (up - down) / (2.0 * kFdStep);
    }
  }
  return grad;
}

bool AuditReport::all_applicable_pass() const {
  for (const auto& check : checks)
    if (check.applicable && !check.pass) return false;
  return true;
}

const AuditCheck* AuditReport::find(std::string_view name) const {
  for (const auto& check : checks)
    if (check.name == name) return &check;
  return nullptr;
}

AuditReport audit_inequalities(const Matrix& x, const Objective& f, const LandingParams& params,
                               const MeritConstants& consts, const AuditContext& ctx) {
  AuditReport report;
  report.estimated_constants = consts.estimated;

  auto geq = [&](std::string name, double lhs, double rhs) {
    // lhs >= rhs expected
    AuditCheck check{std::move(name), true, lhs, rhs, lhs - rhs, false};
    check.pass = check.slack >= -kAuditSlackTol;
    report.checks.push_back(std::move(check));
  };
  auto leq = [&](std::string name, double lhs, double rhs) {
    // lhs <= rhs expected
    AuditCheck check{std::move(name), true, lhs, rhs, rhs - lhs, false};
    check.pass = check.slack >= -kAuditSlackTol;
    report.checks.push_back(std::move(check));
  };
  auto not_applicable = [&](std::string name) {
    report.checks.push_back(AuditCheck{std::move(name), false, 0.0, 0.0, 0.0, false});
  };

  const double residual = feasibility_residual(x);
  if (residual > params.epsilon) {
    for (const char* name : {"gamma_premise", "prop1", "lemma9", "lemma6", "lemma8", "lemma5"})
      not_applicable(name);
    return report;
  }

  geq("gamma_premise", consts.gamma, gamma_lower_bound(consts));

  const Matrix euclid_grad = f.gradient(x);
  const Matrix field = landing_field(x, euclid_grad, params);
  // Finite differences at infeasible iterates; on the manifold the closed
  // form is exact and free of differencing noise.
  const Matrix grad_merit = residual <= 1e-10
                                ? merit_gradient_on_manifold(x, euclid_grad)
                                : merit_gradient_offmanifold(x, f, consts);
  const double field_sq = field.squaredNorm();

  geq("prop1", (field.cwiseProduct(grad_merit)).sum(), consts.rho * field_sq);
  leq("lemma9", grad_merit.norm(), consts.C * field.norm());

  if (residual <= 1e-10) {
    const Matrix grad_manifold = merit_gradient_on_manifold(x, euclid_grad);
    leq("lemma6", grad_manifold.norm(), 2.0 * field.norm());
  } else {
    not_applicable("lemma6");
  }

  const bool have_reference = ctx.f_star.has_value() && static_cast<bool>(ctx.dist_to_solutions);
  const bool have_pl = consts.mu_prime.has_value();
  double dist = 0.0;
  if (have_reference) dist = ctx.dist_to_solutions(x);
  if (have_reference && have_pl && dist <= ctx.delta) {
    const double gap = merit_value_quiet(x, f, consts) - *ctx.f_star;
    leq("lemma8", gap, field_sq / *consts.mu_prime);
    geq("lemma5", gap, 0.25 * *consts.mu_prime * consts.rho * consts.rho * dist * dist);
  } else {
    not_applicable("lemma8");
    not_applicable("lemma5");
  }
  return report;
}

}  // namespace stiefel_dgt
