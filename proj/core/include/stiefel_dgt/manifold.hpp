#pragma once

#include <Eigen/Dense>

#include "stiefel_dgt/errors.hpp"

namespace stiefel_dgt {

using Matrix = Eigen::MatrixXd;

// Frobenius residual below this counts as on-manifold.
inline constexpr double kFeasibilityTol = 1e-12;
// Smallest singular value below this makes the projection direction ill-defined.
inline constexpr double kRankTol = 1e-12;

// Penalty weight lambda > 0 and safety radius epsilon in (0, 3/4).
struct LandingParams {
  double lambda;
  double epsilon;

  LandingParams(double lambda_in, double epsilon_in) : lambda(lambda_in), epsilon(epsilon_in) {
    if (!(lambda > 0.0)) throw ParameterError("LandingParams: lambda must be positive");
    if (!(epsilon > 0.0 && epsilon < 0.75))
      throw ParameterError("LandingParams: epsilon must lie in (0, 3/4)");
  }
};

// A d x r iterate, possibly off the manifold, with a lazily cached
// feasibility residual ||x'x - I||_F. The cache is dropped on mutation.
class StiefelIterate {
 public:
  explicit StiefelIterate(Matrix data);

  const Matrix& data() const { return data_; }
  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index cols() const { return data_.cols(); }

  void set_data(Matrix data);

  double feasibility_residual() const;
  bool feasible(double tol = kFeasibilityTol) const { return feasibility_residual() <= tol; }

 private:
  Matrix data_;
  mutable double cached_residual_ = -1.0;  // negative = stale
};

// skew(A) = (A - A')/2, sym(A) = (A + A')/2
Matrix skew(const Matrix& a);
Matrix sym(const Matrix& a);

// Riemannian gradient in the canonical metric, extended off the manifold:
// grad f(x) = skew(g x') x, where g is the Euclidean gradient at x.
Matrix relative_gradient(const Matrix& x, const Matrix& euclid_grad);

// p(x) = ||x'x - I||_F^2 / 4 and its gradient x(x'x - I).
double penalty(const Matrix& x);
Matrix penalty_gradient(const Matrix& x);

// Lambda(x) = grad f(x) + lambda * x(x'x - I). The two summands are
// orthogonal, so the field vanishes iff both do.
Matrix landing_field(const Matrix& x, const Matrix& euclid_grad, const LandingParams& params);

double feasibility_residual(const Matrix& x);

// ||x'x - I||_F <= epsilon, epsilon in (0, 3/4)
bool in_safety_region(const Matrix& x, double epsilon);
bool in_safety_region(const StiefelIterate& x, double epsilon);

// Nearest point on St(d,r): UV' from the thin SVD x = USV'.
Matrix project_to_stiefel(const Matrix& x);
StiefelIterate project_to_stiefel(const StiefelIterate& x);

// Q factor of the thin QR of (x + step), R's diagonal forced positive.
Matrix qr_retraction(const Matrix& x, const Matrix& step);
StiefelIterate qr_retraction(const StiefelIterate& x, const Matrix& step);

// Projection onto the tangent space at a feasible x: v - x sym(x'v).
Matrix tangent_project(const Matrix& x, const Matrix& v);

}  // namespace stiefel_dgt
