#include "stiefel_dgt/manifold.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include "stiefel_dgt/linalg_count.hpp"

namespace stiefel_dgt {

namespace {

void require_square(const Matrix& a, const char* op) {
  if (a.rows() != a.cols())
    throw DimensionError(std::string(op) + ": expected a square matrix, got " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
}

}  // namespace

StiefelIterate::StiefelIterate(Matrix data) : data_(std::move(data)) {
  if (data_.rows() <= 0 || data_.cols() <= 0 || data_.cols() > data_.rows())
    throw DimensionError("StiefelIterate: need d >= r >= 1");
  if (!data_.allFinite()) throw ParameterError("StiefelIterate: non-finite entries");
}

void StiefelIterate::set_data(Matrix data) {
  if (data.rows() != data_.rows() || data.cols() != data_.cols())
    throw DimensionError("StiefelIterate::set_data: shape change not allowed");
  if (!data.allFinite()) throw ParameterError("StiefelIterate: non-finite entries");
  data_ = std::move(data);
  cached_residual_ = -1.0;
}

double StiefelIterate::feasibility_residual() const {
  if (cached_residual_ < 0.0) cached_residual_ = stiefel_dgt::feasibility_residual(data_);
  return cached_residual_;
}

Matrix skew(const Matrix& a) {
  require_square(a, "skew");
  return 0.5 * (a - a.transpose());
}

Matrix sym(const Matrix& a) {
  require_square(a, "sym");
  return 0.5 * (a + a.transpose());
}

Matrix relative_gradient(const Matrix& x, const Matrix& euclid_grad) {
  require_same_shape(x, euclid_grad, "relative_gradient");
  // skew(g x') x = (g (x'x) - x (g'x)) / 2, evaluated through r x r products.
  const Matrix xtx = x.transpose() * x;
  const Matrix gtx = euclid_grad.transpose() * x;
  return 0.5 * (euclid_grad * xtx - x * gtx);
}

double penalty(const Matrix& x) {
  Matrix residual = x.transpose() * x;
  residual.diagonal().array() -= 1.0;
  return 0.25 * residual.squaredNorm();
}

Matrix penalty_gradient(const Matrix& x) {
  Matrix residual = x.transpose() * x;
  residual.diagonal().array() -= 1.0;
  return x * residual;
}

Matrix landing_field(const Matrix& x, const Matrix& euclid_grad, const LandingParams& params) {
  require_same_shape(x, euclid_grad, "landing_field");
  return relative_gradient(x, euclid_grad) + params.lambda * penalty_gradient(x);
}

double feasibility_residual(const Matrix& x) {
  Matrix residual = x.transpose() * x;
  residual.diagonal().array() -= 1.0;
  return residual.norm();
}

bool in_safety_region(const Matrix& x, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.75))
    throw ParameterError("in_safety_region: epsilon must lie in (0, 3/4)");
  return feasibility_residual(x) <= epsilon;
}

bool in_safety_region(const StiefelIterate& x, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.75))
    throw ParameterError("in_safety_region: epsilon must lie in (0, 3/4)");
  return x.feasibility_residual() <= epsilon;
}

Matrix project_to_stiefel(const Matrix& x) {
  opcount::detail::note_svd();
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().minCoeff() < kRankTol)
    throw SingularityError("project_to_stiefel: rank-deficient input (sigma_min < 1e-12)");
  return svd.matrixU() * svd.matrixV().transpose();
}

StiefelIterate project_to_stiefel(const StiefelIterate& x) {
  return StiefelIterate(project_to_stiefel(x.data()));
}

Matrix qr_retraction(const Matrix& x, const Matrix& step) {
  require_same_shape(x, step, "qr_retraction");
  opcount::detail::note_qr();
  const Matrix moved = x + step;
  Eigen::HouseholderQR<Matrix> qr(moved);
  Matrix q = qr.householderQ() * Matrix::Identity(moved.rows(), moved.cols());
  const Matrix r = qr.matrixQR().topRows(moved.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < moved.cols(); ++j) {
    const double rjj = r(j, j);
    if (std::abs(rjj) < kRankTol)
      throw SingularityError("qr_retraction: rank-deficient step (|R_jj| < 1e-12)");
    if (rjj < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

StiefelIterate qr_retraction(const StiefelIterate& x, const Matrix& step) {
  return StiefelIterate(qr_retraction(x.data(), step));
}

Matrix tangent_project(const Matrix& x, const Matrix& v) {
  require_same_shape(x, v, "tangent_project");
  return v - x * sym(x.transpose() * v);
}

}  // namespace stiefel_dgt
