#include "stiefel_dgt/problems.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "stiefel_dgt/matrix_io.hpp"
#include "stiefel_dgt/warnings.hpp"

namespace stiefel_dgt {

namespace {

void check_agent_index(int agent, int n) {
  if (agent < 0 || agent >= n)
    throw ParameterError("agent index " + std::to_string(agent) + " out of range [0," +
                         std::to_string(n) + ")");
}

void check_pca_shapes(const PcaInstance& inst, const Matrix& x) {
  if (x.rows() != inst.d() || x.cols() != inst.r())
    throw DimensionError("pca_objective: x must be " + std::to_string(inst.d()) + "x" +
                         std::to_string(inst.r()));
}

}  // namespace

Matrix PcaInstance::mean_covariance() const {
  Matrix mean = Matrix::Zero(d(), d());
  for (const auto& c : covariances) mean += c;
  return mean / static_cast<double>(n());
}

PcaInstance make_pca_instance(std::vector<Matrix> covariances, Eigen::VectorXd diag_d, int sign) {
  if (covariances.empty()) throw ParameterError("make_pca_instance: need at least one agent");
  if (sign != 1 && sign != -1) throw ParameterError("make_pca_instance: sign must be +1 or -1");
  const auto d = covariances.front().rows();
  for (const auto& c : covariances) {
    if (c.rows() != d || c.cols() != d)
      throw DimensionError("make_pca_instance: covariances must all be d x d");
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw ParameterError("make_pca_instance: covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw ParameterError("make_pca_instance: covariance not positive semidefinite");
  }
  if (diag_d.size() == 0 || diag_d.size() > d)
    throw DimensionError("make_pca_instance: need 1 <= r <= d diagonal entries");
  for (Eigen::Index j = 0; j < diag_d.size(); ++j) {
    if (!(diag_d(j) > 0.0)) throw ParameterError("make_pca_instance: D must be positive");
    if (j > 0 && !(diag_d(j - 1) > diag_d(j)))
      throw ParameterError("make_pca_instance: D must be strictly decreasing");
  }
  PcaInstance inst;
  inst.covariances = std::move(covariances);
  inst.diag_d = std::move(diag_d);
  inst.sign = sign;
  return inst;
}

double pca_objective(const PcaInstance& inst, int agent, const Matrix& x) {
  check_agent_index(agent, inst.n());
  check_pca_shapes(inst, x);
  const Matrix cx = inst.covariances[agent] * x;
  double value = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) value += inst.diag_d(j) * x.col(j).dot(cx.col(j));
  return inst.sign * value;
}

Matrix pca_gradient(const PcaInstance& inst, int agent, const Matrix& x) {
  check_agent_index(agent, inst.n());
  check_pca_shapes(inst, x);
  return (2.0 * inst.sign) * (inst.covariances[agent] * x) * inst.diag_d.asDiagonal();
}

ProblemInstance::ProblemInstance(std::vector<LocalObjective> locals, int d, int r)
    : locals_(std::make_shared<std::vector<LocalObjective>>(std::move(locals))), d_(d), r_(r) {
  if (locals_->empty()) throw ParameterError("ProblemInstance: need at least one agent");
  if (d <= 0 || r <= 0 || r > d) throw DimensionError("ProblemInstance: need d >= r >= 1");
}

double ProblemInstance::local_value(int agent, const Matrix& x) const {
  check_agent_index(agent, n());
  return (*locals_)[agent].value(x);
}

Matrix ProblemInstance::local_gradient(int agent, const Matrix& x) const {
  check_agent_index(agent, n());
  return (*locals_)[agent].gradient(x);
}

double ProblemInstance::global_value(const Matrix& x) const {
  double acc = 0.0;
  for (const auto& local : *locals_) acc += local.value(x);
  return acc / static_cast<double>(n());
}

Matrix ProblemInstance::global_gradient(const Matrix& x) const {
  Matrix acc = Matrix::Zero(x.rows(), x.cols());
  for (const auto& local : *locals_) acc += local.gradient(x);
  return acc / static_cast<double>(n());
}

Objective ProblemInstance::global_objective() const {
  auto locals = locals_;
  const double inv_n = 1.0 / static_cast<double>(n());
  Objective obj;
  obj.value = [locals, inv_n](const Matrix& x) {
    double acc = 0.0;
    for (const auto& local : *locals) acc += local.value(x);
    return acc * inv_n;
  };
  obj.gradient = [locals, inv_n](const Matrix& x) {
    Matrix acc = Matrix::Zero(x.rows(), x.cols());
    for (const auto& local : *locals) acc += local.gradient(x);
    return Matrix(acc * inv_n);
  };
  return obj;
}

std::pair<PcaInstance, ProblemInstance> generate_synthetic_pca(int n, int d, int r,
                                                               int m_per_agent,
                                                               double condition_target,
                                                               std::uint64_t seed) {
  if (n < 1 || d < 1 || r < 1 || r > d) throw ParameterError("generate_synthetic_pca: bad dims");
  if (m_per_agent < 1) throw ParameterError("generate_synthetic_pca: need m_per_agent >= 1");
  if (!(condition_target >= 1.0))
    throw ParameterError("generate_synthetic_pca: condition_target must be >= 1");
  if (m_per_agent < d)
    warn("generate_synthetic_pca: m_per_agent < d gives rank-deficient raw covariances");

  Rng rng(seed);
  std::vector<Matrix> covariances;
  covariances.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Matrix a = rng.gaussian(m_per_agent, d);
    Matrix c = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    Eigen::VectorXd ev = es.eigenvalues();
    const double lo = ev.minCoeff();
    const double hi = ev.maxCoeff();
    // Affine spectrum remap keeping the top eigenvalue: hi -> hi,
    // lo -> hi / condition_target.
    const double target_lo = hi / condition_target;
    double scale = 0.0;
    if (hi - lo > 1e-12 * std::max(1.0, hi)) scale = (hi - target_lo) / (hi - lo);
    const double shift = hi - scale * hi;
    ev = (scale * ev.array() + shift).matrix();
    c = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    covariances.push_back(0.5 * (c + c.transpose()));
  }
  Eigen::VectorXd diag_d(r);
  for (int j = 0; j < r; ++j) diag_d(j) = static_cast<double>(r - j);
  PcaInstance inst = make_pca_instance(std::move(covariances), std::move(diag_d), -1);
  ProblemInstance problem = make_problem(inst);
  return {std::move(inst), std::move(problem)};
}

PcaInstance load_dataset_matrix(const std::filesystem::path& path, int n, RowPartition partition,
                                int r, int sign, bool center, bool header, double scale) {
  if (n < 1) throw ParameterError("load_dataset_matrix: need n >= 1");
  Matrix data = read_matrix_auto(path, header);
  const auto rows = data.rows();
  const auto cols = data.cols();
  if (rows < n)
    throw DataError("load_dataset_matrix: fewer rows (" + std::to_string(rows) +
                    ") than agents (" + std::to_string(n) + ")");
  if (r < 1 || r > cols) throw ParameterError("load_dataset_matrix: need 1 <= r <= columns");
  if (center) data.rowwise() -= data.colwise().mean();

  std::vector<std::vector<Eigen::Index>> assignment(n);
  if (partition == RowPartition::contiguous) {
    // Even split, remainder to the last agent.
    const Eigen::Index base = rows / n;
    Eigen::Index row = 0;
    for (int i = 0; i < n; ++i) {
      const Eigen::Index take = (i == n - 1) ? rows - row : base;
      for (Eigen::Index k = 0; k < take; ++k) assignment[i].push_back(row++);
    }
  } else {
    for (Eigen::Index k = 0; k < rows; ++k) assignment[k % n].push_back(k);
  }

  std::vector<Matrix> covariances;
  covariances.reserve(n);
  for (int i = 0; i < n; ++i) {
    Matrix c = Matrix::Zero(cols, cols);
    for (const auto row : assignment[i]) c.noalias() += data.row(row).transpose() * data.row(row);
    const double factor =
        scale > 0.0 ? scale : 1.0 / static_cast<double>(std::max<std::size_t>(1, assignment[i].size()));
    covariances.push_back(0.5 * factor * (c + c.transpose()));
  }
  Eigen::VectorXd diag_d(r);
  for (int j = 0; j < r; ++j) diag_d(j) = static_cast<double>(r - j);
  return make_pca_instance(std::move(covariances), std::move(diag_d), sign);
}

ProblemInstance make_problem(PcaInstance inst) {
  return make_problem(std::make_shared<const PcaInstance>(std::move(inst)));
}

ProblemInstance make_problem(std::shared_ptr<const PcaInstance> inst) {
  std::vector<LocalObjective> locals;
  locals.reserve(inst->n());
  for (int i = 0; i < inst->n(); ++i) {
    LocalObjective local;
    local.value = [inst, i](const Matrix& x) { return pca_objective(*inst, i, x); };
    local.gradient = [inst, i](const Matrix& x) { return pca_gradient(*inst, i, x); };
    locals.push_back(std::move(local));
  }
  ProblemInstance problem(std::move(locals), inst->d(), inst->r());
  problem.pca = inst;
  try {
    PcaSolution solution = reference_solution_pca(*inst);
    problem.reference_solution = std::move(solution.x);
    problem.reference_value = solution.value;
  } catch (const DegenerateInstanceError&) {
    // No unique optimum; linear-rate diagnostics stay disabled.
  }
  return problem;
}

PcaSolution reference_solution_pca(const PcaInstance& inst) {
  const Matrix cbar = inst.mean_covariance();
  Eigen::SelfAdjointEigenSolver<Matrix> es(cbar);
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const int d = inst.d();
  const int r = inst.r();

  PcaSolution solution;
  solution.x.resize(d, r);
  double value = 0.0;
  if (inst.sign > 0) {
    // Minimizing the literal form pairs the largest D entries with the
    // smallest eigenvalues.
    if (r < d && !(ev(r) - ev(r - 1) >= 1e-8))
      throw DegenerateInstanceError("reference_solution_pca: spectral gap below 1e-8");
    for (int j = 0; j < r; ++j) {
      solution.x.col(j) = es.eigenvectors().col(j);
      value += inst.diag_d(j) * ev(j);
    }
  } else {
    if (r < d && !(ev(d - r) - ev(d - r - 1) >= 1e-8))
      throw DegenerateInstanceError("reference_solution_pca: spectral gap below 1e-8");
    for (int j = 0; j < r; ++j) {
      solution.x.col(j) = es.eigenvectors().col(d - 1 - j);
      value -= inst.diag_d(j) * ev(d - 1 - j);
    }
  }
  solution.value = value;
  return solution;
}

double dist_to_solution_set(const Matrix& x, const Matrix& xstar) {
  if (x.rows() != xstar.rows() || x.cols() != xstar.cols())
    throw DimensionError("dist_to_solution_set: shape mismatch");
  double sq = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double plus = (x.col(j) - xstar.col(j)).squaredNorm();
    const double minus = (x.col(j) + xstar.col(j)).squaredNorm();
    sq += std::min(plus, minus);
  }
  return std::sqrt(sq);
}

void scale_covariances(PcaInstance& inst, double factor) {
  if (!(factor > 0.0)) throw ParameterError("scale_covariances: factor must be positive");
  for (auto& c : inst.covariances) c *= factor;
}

void validate_gradients(const ProblemInstance& problem, int points, double tol,
                        std::uint64_t seed) {
  Rng rng(seed);
  const double h = 1e-6;
  for (int agent = 0; agent < problem.n(); ++agent) {
    for (int p = 0; p < points; ++p) {
      Matrix x = rng.gaussian(problem.d(), problem.r());
      const Matrix grad = problem.local_gradient(agent, x);
      Matrix fd(problem.d(), problem.r());
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
          const double saved = x(i, j);
          x(i, j) = saved + h;
          const double up = problem.local_value(agent, x);
          x(i, j) = saved - h;
          const double down = problem.local_value(agent, x);
          x(i, j) = saved;
          fd(i, j) = (up - down) / (2.0 * h);
        }
      }
      const double rel = (fd - grad).norm() / std::max(1.0, grad.norm());
      if (rel > tol)
        throw DataError("validate_gradients: agent " + std::to_string(agent) +
                        " gradient deviates from finite differences (rel " + std::to_string(rel) +
                        ")");
    }
  }
}

Matrix sample_safety_region(Rng& rng, int d, int r, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.75))
    throw ParameterError("sample_safety_region: epsilon must lie in (0, 3/4)");
  const Matrix q = project_to_stiefel(rng.gaussian(d, r));
  Matrix direction = rng.gaussian(d, r);
  direction /= direction.norm();
  const double target = rng.uniform() * epsilon;
  if (target <= 0.0) return q;
  // Residual grows monotonically enough in t near 0; bracket then bisect.
  double hi = 1.0;
  while (feasibility_residual(q + hi * direction) < target && hi < 64.0) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasibility_residual(q + mid * direction) < target)
      lo = mid;
    else
      hi = mid;
  }
  return q + lo * direction;
}

}  // namespace stiefel_dgt
