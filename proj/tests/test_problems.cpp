#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include <stiefel_dgt/matrix_io.hpp>
#include <stiefel_dgt/problems.hpp>
#include <stiefel_dgt/warnings.hpp>

using namespace stiefel_dgt;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "stiefel_dgt_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

Eigen::VectorXd default_diag(int r) {
  Eigen::VectorXd d(r);
  for (int j = 0; j < r; ++j) d(j) = static_cast<double>(r - j);
  return d;
}

}  // namespace

TEST_SUITE("problems") {

TEST_CASE("pca objective values and gradient") {
  Eigen::VectorXd diag(2);
  diag << 2, 1;
  std::vector<Matrix> covs{Matrix::Zero(3, 3), Matrix::Identity(3, 3)};
  const PcaInstance inst = make_pca_instance(covs, diag, -1);

  Rng rng(4);
  const Matrix q = project_to_stiefel(rng.gaussian(3, 2));
  CHECK(pca_objective(inst, 0, q) == 0.0);
  // C = I and feasible x: sign * trace(D)
  CHECK(pca_objective(inst, 1, q) == doctest::Approx(-3.0).epsilon(1e-12));

  // d=3, r=2 gradient vs central differences
  Matrix x = rng.gaussian(3, 2);
  const Matrix grad = pca_gradient(inst, 1, x);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double saved = x(i, j);
      x(i, j) = saved + h;
      const double up = pca_objective(inst, 1, x);
      x(i, j) = saved - h;
      const double down = pca_objective(inst, 1, x);
      x(i, j) = saved;
      CHECK((up - down) / (2 * h) == doctest::Approx(grad(i, j)).epsilon(1e-6));
    }

  CHECK_THROWS_AS(pca_objective(inst, 5, x), ParameterError);
  CHECK_THROWS_AS(pca_objective(inst, 0, Matrix::Zero(4, 2)), DimensionError);
}

TEST_CASE("pca instance validation") {
  Eigen::VectorXd diag(2);
  diag << 2, 1;
  Matrix not_psd = -Matrix::Identity(3, 3);
  CHECK_THROWS_AS(make_pca_instance({not_psd}, diag, -1), ParameterError);

  Eigen::VectorXd increasing(2);
  increasing << 1, 2;
  CHECK_THROWS_AS(make_pca_instance({Matrix::Identity(3, 3)}, increasing, -1), ParameterError);

  Eigen::VectorXd with_zero(2);
  with_zero << 1, 0;
  CHECK_THROWS_AS(make_pca_instance({Matrix::Identity(3, 3)}, with_zero, -1), ParameterError);

  CHECK_THROWS_AS(make_pca_instance({Matrix::Identity(3, 3)}, diag, 2), ParameterError);
}

TEST_CASE("synthetic generation: conditioning, determinism, flat spectrum") {
  set_warning_handler([](const std::string&) {});
  auto [inst, problem] = generate_synthetic_pca(4, 12, 3, 30, 25.0, 99);
  CHECK(inst.n() == 4);
  CHECK(inst.d() == 12);
  CHECK(inst.r() == 3);
  CHECK((inst.diag_d - default_diag(3)).norm() == 0.0);
  for (const auto& c : inst.covariances) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
    const double cond = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    CHECK(std::abs(cond - 25.0) / 25.0 <= 0.01);
  }

  auto [inst2, problem2] = generate_synthetic_pca(4, 12, 3, 30, 25.0, 99);
  for (int i = 0; i < 4; ++i)
    CHECK((inst.covariances[i] - inst2.covariances[i]).cwiseAbs().maxCoeff() == 0.0);

  auto [flat, flat_problem] = generate_synthetic_pca(2, 6, 2, 20, 1.0, 5);
  for (const auto& c : flat.covariances) {
    const double top = c(0, 0);
    CHECK((c - top * Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-8 * top);
  }
  set_warning_handler(nullptr);
}

TEST_CASE("csv ingestion and covariance assembly") {
  const auto dir = temp_dir();
  const auto csv_path = dir / "toy.csv";
  Rng rng(12);
  const Matrix data = rng.gaussian(10, 4);
  {
    std::ofstream out(csv_path);
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < 10; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) out << (j ? "," : "") << data(i, j);
      out << "\n";
    }
  }

  const PcaInstance two = load_dataset_matrix(csv_path, 2, RowPartition::contiguous, 2, -1,
                                              false, false, 1.0);
  // agents hold rows 0..4 and 5..9; oracle: sum of outer products by loop
  for (int agent = 0; agent < 2; ++agent) {
    Matrix oracle = Matrix::Zero(4, 4);
    for (int k = 0; k < 5; ++k) {
      const auto row = data.row(agent * 5 + k);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) oracle(a, b) += row(a) * row(b);
    }
    CHECK((two.covariances[agent] - oracle).cwiseAbs().maxCoeff() <= 1e-12);
  }

  const PcaInstance one = load_dataset_matrix(csv_path, 1, RowPartition::contiguous, 2, -1,
                                              false, false, 1.0);
  CHECK((one.covariances[0] - (data.transpose() * data)).cwiseAbs().maxCoeff() <= 1e-10);

  const PcaInstance rr = load_dataset_matrix(csv_path, 3, RowPartition::round_robin, 2, -1,
                                             false, false, 1.0);
  Matrix oracle0 = Matrix::Zero(4, 4);
  for (int k = 0; k < 10; k += 3) oracle0 += data.row(k).transpose() * data.row(k);
  CHECK((rr.covariances[0] - oracle0).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS(
      load_dataset_matrix(csv_path, 11, RowPartition::contiguous, 2, -1, false, false, 1.0),
      DataError);
  CHECK_THROWS_AS(
      load_dataset_matrix(dir / "missing.csv", 2, RowPartition::contiguous, 2, -1, false, false,
                          1.0),
      DataError);

  const auto bad_path = dir / "bad.csv";
  std::ofstream(bad_path) << "1.0,2.0\n3.0,oops\n";
  CHECK_THROWS_AS(read_csv_matrix(bad_path, false), DataError);

  // header handling
  const auto header_path = dir / "head.csv";
  std::ofstream(header_path) << "a,b\n1,2\n3,4\n";
  const Matrix with_header = read_csv_matrix(header_path, true);
  CHECK(with_header.rows() == 2);
  CHECK(with_header(1, 1) == 4.0);
}

TEST_CASE("dmat round trip and sniffing") {
  const auto dir = temp_dir();
  Rng rng(31);
  const Matrix m = rng.gaussian(7, 3);
  const auto path = dir / "m.dmat";
  write_dmat(path, m);
  const Matrix back = read_dmat(path);
  CHECK((m - back).cwiseAbs().maxCoeff() == 0.0);
  CHECK((read_matrix_auto(path, false) - m).cwiseAbs().maxCoeff() == 0.0);

  const auto corrupt = dir / "corrupt.dmat";
  std::ofstream(corrupt, std::ios::binary) << "DMXT00000000";
  CHECK_THROWS_AS(read_dmat(corrupt), DataError);
}

TEST_CASE("reference solution for a diagonal spectrum") {
  Eigen::VectorXd diag(2);
  diag << 2, 1;
  Matrix cbar = Matrix::Zero(4, 4);
  cbar.diagonal() << 4, 3, 2, 1;

  const PcaInstance maximize = make_pca_instance({cbar}, diag, -1);
  const PcaSolution top = reference_solution_pca(maximize);
  CHECK(top.value == doctest::Approx(-11.0).epsilon(1e-12));
  CHECK(std::abs(top.x(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(top.x(1, 1)) == doctest::Approx(1.0));

  const PcaInstance minimize = make_pca_instance({cbar}, diag, +1);
  const PcaSolution bottom = reference_solution_pca(minimize);
  // smallest eigenvalues 1, 2 paired with D = (2, 1): 2*1 + 1*2
  CHECK(bottom.value == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(bottom.x(3, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(bottom.x(2, 1)) == doctest::Approx(1.0));

  const PcaInstance degenerate = make_pca_instance({2.0 * Matrix::Identity(4, 4)}, diag, -1);
  CHECK_THROWS_AS(reference_solution_pca(degenerate), DegenerateInstanceError);
}

TEST_CASE("reference solution is stationary and optimal among random frames") {
  auto [inst, problem] = generate_synthetic_pca(3, 8, 3, 40, 10.0, 21);
  REQUIRE(problem.reference_solution.has_value());
  const Matrix xstar = *problem.reference_solution;
  const double fstar = *problem.reference_value;

  CHECK(feasibility_residual(xstar) <= 1e-10);
  CHECK(relative_gradient(xstar, problem.global_gradient(xstar)).norm() <= 1e-8);
  CHECK(problem.global_value(xstar) == doctest::Approx(fstar).epsilon(1e-10));

  Rng rng(8);
  for (int t = 0; t < 1000; ++t) {
    const Matrix q = project_to_stiefel(rng.gaussian(8, 3));
    CHECK(problem.global_value(q) >= fstar - 1e-9);
  }
}

TEST_CASE("global objective decomposes over agents") {
  auto [inst, problem] = generate_synthetic_pca(5, 6, 2, 25, 8.0, 64);
  const Matrix cbar = inst.mean_covariance();
  Rng rng(15);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = rng.gaussian(6, 2);
    double direct = 0.0;
    const Matrix cx = cbar * x;
    for (int j = 0; j < 2; ++j) direct += inst.diag_d(j) * x.col(j).dot(cx.col(j));
    direct *= inst.sign;
    CHECK(problem.global_value(x) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("gradient validation flags a corrupted objective") {
  auto [inst, problem] = generate_synthetic_pca(2, 5, 2, 20, 5.0, 3);
  CHECK_NOTHROW(validate_gradients(problem, 3, 1e-5, 17));

  std::vector<LocalObjective> locals;
  LocalObjective bad;
  bad.value = [](const Matrix& x) { return x.squaredNorm(); };
  bad.gradient = [](const Matrix& x) { return Matrix(3.0 * x); };  // should be 2x
  locals.push_back(bad);
  const ProblemInstance corrupt(std::move(locals), 5, 2);
  CHECK_THROWS_AS(validate_gradients(corrupt, 2, 1e-5, 17), DataError);
}

TEST_CASE("distance to the sign-flip solution set") {
  Rng rng(2);
  const Matrix xstar = project_to_stiefel(rng.gaussian(6, 3));
  Matrix flipped = xstar;
  flipped.col(1) = -flipped.col(1);
  CHECK(dist_to_solution_set(flipped, xstar) <= 1e-15);
  CHECK(dist_to_solution_set(xstar, xstar) == 0.0);

  Matrix moved = xstar;
  moved.col(0) += 0.01 * rng.gaussian(6, 1);
  CHECK(dist_to_solution_set(moved, xstar) > 0.0);
  CHECK(dist_to_solution_set(moved, xstar) <= (moved - xstar).norm() + 1e-15);
}

TEST_CASE("safety region sampler respects the radius") {
  Rng rng(55);
  for (int t = 0; t < 200; ++t) {
    const Matrix x = sample_safety_region(rng, 6, 3, 0.5);
    CHECK(feasibility_residual(x) <= 0.5 + 1e-9);
  }
}

}  // TEST_SUITE
