#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "stiefel_dgt/manifold.hpp"
#include "stiefel_dgt/rng.hpp"

namespace stiefel_dgt {

// A differentiable objective on d x r matrices.
struct Objective {
  std::function<double(const Matrix&)> value;
  std::function<Matrix(const Matrix&)> gradient;
};

struct LocalObjective {
  std::function<double(const Matrix&)> value;
  std::function<Matrix(const Matrix&)> gradient;
};

// Decentralized PCA data: per-agent covariances C_i = A_i'A_i, a strictly
// decreasing positive diagonal D and the objective sign. sign = +1 keeps the
// literal form <C_i x, x D> (selects the smallest eigenvectors); sign = -1 is
// classical PCA.
struct PcaInstance {
  std::vector<Matrix> covariances;
  Eigen::VectorXd diag_d;
  int sign = -1;

  int n() const { return static_cast<int>(covariances.size()); }
  int d() const { return static_cast<int>(covariances.front().rows()); }
  int r() const { return static_cast<int>(diag_d.size()); }

  Matrix mean_covariance() const;
};

// Validates PSD covariances and a strictly decreasing positive D.
PcaInstance make_pca_instance(std::vector<Matrix> covariances, Eigen::VectorXd diag_d, int sign);

// sign * trace(D x' C_i x) and its gradient 2 sign C_i x D.
double pca_objective(const PcaInstance& inst, int agent, const Matrix& x);
Matrix pca_gradient(const PcaInstance& inst, int agent, const Matrix& x);

// Collection of n local objectives with optional ground truth. Copies share
// the underlying objectives.
class ProblemInstance {
 public:
  ProblemInstance(std::vector<LocalObjective> locals, int d, int r);

  int n() const { return static_cast<int>(locals_->size()); }
  int d() const { return d_; }
  int r() const { return r_; }

  double local_value(int agent, const Matrix& x) const;
  Matrix local_gradient(int agent, const Matrix& x) const;

  // (1/n) sum_i f_i and its gradient.
  double global_value(const Matrix& x) const;
  Matrix global_gradient(const Matrix& x) const;
  Objective global_objective() const;

  std::optional<Matrix> reference_solution;
  std::optional<double> reference_value;
  std::optional<double> smoothness_L;
  std::optional<double> grad_bound_G;

  // Set for quadratic PCA problems; analytic constants use it.
  std::shared_ptr<const PcaInstance> pca;

 private:
  std::shared_ptr<std::vector<LocalObjective>> locals_;
  int d_;
  int r_;
};

// i.i.d. normal A_i (m x d), spectra of A_i'A_i affinely remapped so that
// cond(C_i) = condition_target with the top eigenvalue kept; D = diag(r,...,1).
// Deterministic given the seed. Warns when m_per_agent < d.
std::pair<PcaInstance, ProblemInstance> generate_synthetic_pca(int n, int d, int r,
                                                               int m_per_agent,
                                                               double condition_target,
                                                               std::uint64_t seed);

enum class RowPartition { contiguous, round_robin };

// Reads a samples x features matrix (CSV or DMAT, sniffed by magic), splits
// rows across n agents and forms C_i = A_i'A_i once. `scale` multiplies every
// covariance (0 = 1/m_i); `center` removes global column means first.
PcaInstance load_dataset_matrix(const std::filesystem::path& path, int n,
                                RowPartition partition, int r, int sign = -1,
                                bool center = false, bool header = false,
                                double scale = 1.0);

// Wraps a PcaInstance into n gradient evaluators; attaches the eigenvector
// reference solution when the spectral gap allows it.
ProblemInstance make_problem(PcaInstance inst);
ProblemInstance make_problem(std::shared_ptr<const PcaInstance> inst);

struct PcaSolution {
  Matrix x;
  double value;
};

// Classical eigenvector optimum of the averaged covariance, ordered to pair
// with D. Requires a spectral gap >= 1e-8 between the r-th and (r+1)-th
// relevant eigenvalues.
PcaSolution reference_solution_pca(const PcaInstance& inst);

// Distance to the PCA solution set {x* S : S = diag(+-1)}: per-column sign
// flips are minimized out.
double dist_to_solution_set(const Matrix& x, const Matrix& xstar);

// Scales every covariance in place (and drops cached aggregates).
void scale_covariances(PcaInstance& inst, double factor);

// Central-difference check of every local gradient at `points` random
// matrices; throws DataError at relative mismatch > tol.
void validate_gradients(const ProblemInstance& problem, int points, double tol,
                        std::uint64_t seed);

// Random point of St(d,r)^epsilon with residual uniform in [0, epsilon].
Matrix sample_safety_region(Rng& rng, int d, int r, double epsilon);

}  // namespace stiefel_dgt
