#include <doctest.h>

#include <stiefel_dgt/experiment.hpp>
#include <stiefel_dgt/merit.hpp>
#include <stiefel_dgt/warnings.hpp>

using namespace stiefel_dgt;

namespace {

ProblemInstance zero_problem(int d, int r, int n) {
  std::vector<LocalObjective> locals;
  for (int i = 0; i < n; ++i) {
    LocalObjective f;
    f.value = [](const Matrix&) { return 0.0; };
    f.gradient = [d, r](const Matrix&) { return Matrix::Zero(d, r); };
    locals.push_back(std::move(f));
  }
  return ProblemInstance(std::move(locals), d, r);
}

// f(x) = <B, x>, a non-quadratic path through the sampled-constant estimator
ProblemInstance linear_problem(const Matrix& b) {
  std::vector<LocalObjective> locals;
  LocalObjective f;
  f.value = [b](const Matrix& x) { return (b.cwiseProduct(x)).sum(); };
  f.gradient = [b](const Matrix&) { return b; };
  locals.push_back(std::move(f));
  return ProblemInstance(std::move(locals), static_cast<int>(b.rows()),
                         static_cast<int>(b.cols()));
}

// term-by-term re-derivation of L(x) with explicit loops
double merit_oracle(const Matrix& x, const Objective& f, double gamma) {
  const Matrix g = f.gradient(x);
  const auto r = x.cols();
  Matrix gram(r, r), xtg(r, r);
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = 0; b < r; ++b) {
      double acc_g = 0.0, acc_x = 0.0;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        acc_x += x(i, a) * x(i, b);
        acc_g += x(i, a) * g(i, b);
      }
      gram(a, b) = acc_x;
      xtg(a, b) = acc_g;
    }
  double h = 0.0, p = 0.0;
  for (Eigen::Index a = 0; a < r; ++a)
    for (Eigen::Index b = 0; b < r; ++b) {
      const double delta = gram(a, b) - (a == b ? 1.0 : 0.0);
      const double sym_ab = 0.5 * (xtg(a, b) + xtg(b, a));
      h += sym_ab * delta;
      p += delta * delta;
    }
  return f.value(x) - 0.5 * h + gamma * 0.25 * p;
}

}  // namespace

TEST_SUITE("merit") {

TEST_CASE("analytic constants for quadratic PCA") {
  // mean covariance = identity, D = diag(2, 1): L = Lhat = 2 * 1 * 2 = 4
  Eigen::VectorXd diag(2);
  diag << 2, 1;
  const PcaInstance inst =
      make_pca_instance({Matrix::Identity(5, 5), Matrix::Identity(5, 5)}, diag, -1);
  ProblemInstance problem = make_problem(inst);
  // degenerate spectrum: no reference solution, but constants still analytic
  const LandingParams params(4.0, 0.5);
  const MeritConstants consts = estimate_constants(problem, params, 100, 3);
  CHECK(consts.L_hat == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(consts.smoothness_L == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_FALSE(consts.estimated);
  CHECK(consts.rho <= 0.5);
  CHECK(consts.C > 2.0);
  CHECK(consts.gamma >= gamma_lower_bound(consts) * (1.0 - 1e-12));

  // derived constants follow the closed forms
  const double eps = 0.5, lambda = 4.0;
  CHECK(consts.rho ==
        doctest::Approx(std::min(0.5, consts.gamma / (4 * lambda * (1 + eps)))).epsilon(1e-12));
  CHECK(consts.C ==
        doctest::Approx(3 * consts.L_prime / (lambda * (1 - eps)) + 2).epsilon(1e-12));
}

TEST_CASE("zero objective floors L_hat and keeps gamma positive") {
  ProblemInstance problem = zero_problem(4, 2, 2);
  const LandingParams params(1.0, 0.5);
  const MeritConstants consts = estimate_constants(problem, params, 100, 5);
  CHECK(consts.s == 0.0);
  CHECK(consts.L_hat == doctest::Approx(1e-12));
  CHECK(consts.gamma > 0.0);
  // only the penalty term feeds gamma
  CHECK(consts.gamma ==
        doctest::Approx(1.05 * 2.0 * (1e-12 * 1e-12 * 2.25 / 0.5)).epsilon(1e-9));
}

TEST_CASE("sampled suprema are monotone under nested sampling") {
  Rng rng(71);
  ProblemInstance problem = linear_problem(rng.gaussian(5, 2));
  const double eps = 0.5;
  const RawBounds small = estimate_raw_bounds(problem, eps, 100, 12);
  const RawBounds large = estimate_raw_bounds(problem, eps, 300, 12);
  CHECK(small.estimated);
  CHECK(large.grad_sup >= small.grad_sup);
  CHECK(large.sym_sup >= small.sym_sup);
  CHECK(large.grad_bound_G >= small.grad_bound_G);
  CHECK_THROWS_AS(estimate_raw_bounds(problem, eps, 50, 12), ParameterError);
}

TEST_CASE("merit value: on-manifold collapse, zero objective, loop oracle") {
  Rng rng(21);
  auto [inst, problem] = generate_synthetic_pca(3, 6, 2, 30, 5.0, 11);
  const LandingParams params(3.0, 0.5);
  const MeritConstants consts = estimate_constants(problem, params, 100, 2);
  const Objective f = problem.global_objective();

  const Matrix q = project_to_stiefel(rng.gaussian(6, 2));
  const double fq = f.value(q);
  CHECK(std::abs(merit_value(q, f, consts) - fq) <= 1e-12 * (1.0 + std::abs(fq)));

  ProblemInstance zeros = zero_problem(6, 2, 1);
  const MeritConstants zconsts = estimate_constants(zeros, params, 100, 2);
  const Matrix x = sample_safety_region(rng, 6, 2, 0.5);
  CHECK(merit_value_quiet(x, zeros.global_objective(), zconsts) ==
        doctest::Approx(zconsts.gamma * penalty(x)).epsilon(1e-12));

  for (int t = 0; t < 25; ++t) {
    const Matrix xt = sample_safety_region(rng, 6, 2, 0.5);
    CHECK(merit_value_quiet(xt, f, consts) ==
          doctest::Approx(merit_oracle(xt, f, consts.gamma)).epsilon(1e-12));
  }

  // outside the region: value still returned, warning emitted
  int warnings = 0;
  set_warning_handler([&](const std::string&) { ++warnings; });
  const double v = merit_value(3.0 * q, f, consts);
  CHECK(std::isfinite(v));
  CHECK(warnings == 1);
  set_warning_handler(nullptr);
}

TEST_CASE("merit gradient on the manifold") {
  Rng rng(31);
  const Matrix q = project_to_stiefel(rng.gaussian(6, 3));
  Matrix s = sym(rng.gaussian(3, 3));
  CHECK(merit_gradient_on_manifold(q, q * s).norm() <= 1e-12);
  CHECK(merit_gradient_on_manifold(q, Matrix::Zero(6, 3)).norm() == 0.0);
  CHECK_THROWS_AS(merit_gradient_on_manifold(1.5 * q, rng.gaussian(6, 3)), PreconditionError);

  // ||grad L|| <= 2 ||Lambda|| at feasible points
  const LandingParams params(2.0, 0.5);
  for (int t = 0; t < 1000; ++t) {
    const Matrix xt = project_to_stiefel(rng.gaussian(6, 3));
    const Matrix g = rng.gaussian(6, 3);
    const Matrix grad_merit = merit_gradient_on_manifold(xt, g);
    const Matrix field = landing_field(xt, g, params);
    CHECK(grad_merit.norm() <= 2.0 * field.norm() + 1e-10);
  }
}

TEST_CASE("finite-difference merit gradient") {
  Rng rng(41);
  auto [inst, problem] = generate_synthetic_pca(2, 5, 2, 25, 4.0, 13);
  PcaInstance scaled = inst;
  scale_covariances(scaled, 1.0 / 25.0);
  problem = make_problem(scaled);
  const LandingParams params(2.0, 0.5);
  const MeritConstants consts = estimate_constants(problem, params, 100, 7);
  const Objective f = problem.global_objective();

  // feasible points: matches the closed form to relative 1e-4
  for (int t = 0; t < 5; ++t) {
    const Matrix q = project_to_stiefel(rng.gaussian(5, 2));
    const Matrix closed = merit_gradient_on_manifold(q, f.gradient(q));
    const Matrix fd = merit_gradient_offmanifold(q, f, consts);
    CHECK((fd - closed).norm() <= 1e-4 * std::max(1.0, closed.norm()));
  }

  // zero objective: gradient is gamma * grad p
  ProblemInstance zeros = zero_problem(5, 2, 1);
  const MeritConstants zconsts = estimate_constants(zeros, params, 100, 7);
  const Matrix x = sample_safety_region(rng, 5, 2, 0.5);
  const Matrix fd = merit_gradient_offmanifold(x, zeros.global_objective(), zconsts);
  const Matrix expected = zconsts.gamma * penalty_gradient(x);
  CHECK((fd - expected).norm() <= 1e-4 * std::max(1.0, expected.norm()));

  // constant shifts do not move the gradient
  Objective shifted = f;
  auto base_value = f.value;
  shifted.value = [base_value](const Matrix& m) { return base_value(m) + 123.456; };
  const Matrix g1 = merit_gradient_offmanifold(x, f, consts);
  const Matrix g2 = merit_gradient_offmanifold(x, shifted, consts);
  CHECK((g1 - g2).norm() <= 1e-8 * std::max(1.0, g1.norm()));
}

TEST_CASE("audits at a stationary optimum degenerate to equalities") {
  auto [inst, problem] = generate_synthetic_pca(3, 8, 2, 40, 6.0, 17);
  PcaInstance scaled = inst;
  scale_covariances(scaled, 1.0 / 40.0);
  problem = make_problem(scaled);
  REQUIRE(problem.reference_solution.has_value());
  const LandingParams params(2.0, 0.5);
  MeritConstants consts = estimate_constants(problem, params, 100, 9);
  consts = with_pl_constant(consts, 0.1);

  AuditContext ctx = audit_context_for(problem);
  const AuditReport report =
      audit_inequalities(*problem.reference_solution, problem.global_objective(), params, consts,
                         ctx);
  CHECK(report.all_applicable_pass());
  const AuditCheck* lemma6 = report.find("lemma6");
  REQUIRE(lemma6 != nullptr);
  CHECK(lemma6->applicable);  // reference is feasible
  const AuditCheck* lemma5 = report.find("lemma5");
  REQUIRE(lemma5 != nullptr);
  CHECK(lemma5->applicable);  // distance zero, PL constants present
}

TEST_CASE("audits pass on random safety-region points of a small PCA") {
  auto [inst, problem] = generate_synthetic_pca(4, 10, 2, 60, 8.0, 23);
  PcaInstance scaled = inst;
  scale_covariances(scaled, 1.0 / 60.0);
  problem = make_problem(scaled);
  const LandingParams params(3.0, 0.5);
  const MeritConstants consts = estimate_constants(problem, params, 100, 29);
  const Objective f = problem.global_objective();

  Rng rng(97);
  for (int t = 0; t < 1000; ++t) {
    const Matrix x = sample_safety_region(rng, 10, 2, 0.5);
    const AuditReport report = audit_inequalities(x, f, params, consts);
    const AuditCheck* prop1 = report.find("prop1");
    const AuditCheck* lemma9 = report.find("lemma9");
    REQUIRE(prop1 != nullptr);
    REQUIRE(lemma9 != nullptr);
    CHECK(prop1->pass);
    CHECK(lemma9->pass);
  }
}

TEST_CASE("undersized gamma trips the premise check") {
  auto [inst, problem] = generate_synthetic_pca(2, 6, 2, 30, 4.0, 31);
  const LandingParams params(2.0, 0.5);
  const MeritConstants consts = estimate_constants(problem, params, 100, 37);
  const MeritConstants halved = with_gamma(consts, 0.5 * gamma_lower_bound(consts));

  Rng rng(41);
  const Matrix x = sample_safety_region(rng, 6, 2, 0.5);
  const AuditReport report = audit_inequalities(x, problem.global_objective(), params, halved);
  const AuditCheck* premise = report.find("gamma_premise");
  REQUIRE(premise != nullptr);
  CHECK(premise->applicable);
  CHECK_FALSE(premise->pass);
  CHECK_FALSE(report.all_applicable_pass());

  // compliant constants keep it green
  const AuditReport ok = audit_inequalities(x, problem.global_objective(), params, consts);
  CHECK(ok.find("gamma_premise")->pass);
}

TEST_CASE("audits outside the safety region are not applicable") {
  auto [inst, problem] = generate_synthetic_pca(2, 5, 2, 25, 4.0, 43);
  const LandingParams params(1.0, 0.5);
  const MeritConstants consts = estimate_constants(problem, params, 100, 47);
  Rng rng(53);
  const Matrix far = 2.0 * project_to_stiefel(rng.gaussian(5, 2));
  const AuditReport report = audit_inequalities(far, problem.global_objective(), params, consts);
  for (const auto& check : report.checks) CHECK_FALSE(check.applicable);
  CHECK(report.all_applicable_pass());  // vacuously
}

TEST_CASE("pl constant plumbing") {
  auto [inst, problem] = generate_synthetic_pca(2, 5, 2, 25, 4.0, 59);
  const LandingParams params(2.0, 0.25);
  MeritConstants consts = estimate_constants(problem, params, 100, 61);
  CHECK_FALSE(consts.mu_prime.has_value());
  consts = with_pl_constant(consts, 0.5);
  REQUIRE(consts.mu_prime.has_value());
  const double t = 3.0 + 2.0 * 0.25;
  const double expected_inv =
      std::max(1.0 / 0.5, (2 * t * t * consts.L_hat * consts.L_hat + 0.5 * consts.L_prime) /
                              (2 * 0.5 * 4.0 * 0.75 * 0.75));
  CHECK(*consts.mu_prime == doctest::Approx(1.0 / expected_inv).epsilon(1e-12));
  CHECK_THROWS_AS(with_pl_constant(consts, -1.0), ParameterError);
}

}  // TEST_SUITE
