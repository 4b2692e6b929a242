#include <doctest.h>

#include <stiefel_dgt/network.hpp>
#include <stiefel_dgt/rng.hpp>

using namespace stiefel_dgt;

namespace {

Matrix stack_blocks(const BlockVec& blocks) {
  const auto d = blocks.front().rows();
  Matrix s(static_cast<Eigen::Index>(blocks.size()) * d, blocks.front().cols());
  for (std::size_t i = 0; i < blocks.size(); ++i)
    s.middleRows(static_cast<Eigen::Index>(i) * d, d) = blocks[i];
  return s;
}

Matrix mean_block(const BlockVec& blocks) {
  Matrix m = Matrix::Zero(blocks.front().rows(), blocks.front().cols());
  for (const auto& b : blocks) m += b;
  return m / static_cast<double>(blocks.size());
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("ring weights and spectrum") {
  const MixingMatrix w = build_ring(10, 0.8);
  for (int i = 0; i < 10; ++i) {
    CHECK(w.matrix()(i, i) == doctest::Approx(0.8));
    CHECK(w.matrix()(i, (i + 1) % 10) == doctest::Approx(0.1));
    CHECK(w.matrix()(i, (i + 9) % 10) == doctest::Approx(0.1));
  }
  // circulant eigenvalues 0.8 + 0.2 cos(2 pi k / 10)
  const double expected = 0.8 + 0.2 * std::cos(2.0 * M_PI / 10.0);
  CHECK(std::abs(w.sigma() - expected) <= 1e-9);

  const MixingMatrix uniform = build_ring(3, 1.0 / 3.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(uniform.matrix()(i, j) == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(build_ring(2, 0.5), ParameterError);
  CHECK_THROWS_AS(build_ring(5, 0.0), ParameterError);
}

TEST_CASE("complete graph") {
  const MixingMatrix w = build_complete(4);
  CHECK((w.matrix() - Matrix::Constant(4, 4, 0.25)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.sigma() <= 1e-14);

  const MixingMatrix single = build_complete(1);
  CHECK(single.matrix()(0, 0) == 1.0);
  CHECK(single.sigma() <= 1e-14);

  // one mixing round reaches exact consensus
  Rng rng(5);
  BlockVec blocks;
  for (int i = 0; i < 10; ++i) blocks.push_back(rng.gaussian(4, 2));
  const Matrix mean = mean_block(blocks);
  const BlockVec mixed = mix(build_complete(10), blocks);
  for (const auto& b : mixed) CHECK((b - mean).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("metropolis weights") {
  const MixingMatrix ring4 = build_metropolis(ring_edges(4), 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(ring4.matrix()(i, i) == doctest::Approx(1.0 / 3.0));
    CHECK(ring4.matrix()(i, (i + 1) % 4) == doctest::Approx(1.0 / 3.0));
  }

  const MixingMatrix star3 = build_metropolis(star_edges(3), 3);
  CHECK(star3.matrix()(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(star3.matrix()(0, 2) == doctest::Approx(1.0 / 3.0));
  CHECK(star3.matrix()(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(star3.matrix()(1, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(star3.matrix()(2, 2) == doctest::Approx(2.0 / 3.0));

  const MixingMatrix path2 = build_metropolis(path_edges(2), 2);
  CHECK(path2.matrix()(0, 0) == doctest::Approx(0.5));
  CHECK(path2.matrix()(0, 1) == doctest::Approx(0.5));
  CHECK(path2.sigma() <= 1e-12);

  CHECK_THROWS_AS(build_metropolis({{0, 1}, {2, 3}}, 4), ConnectivityError);
  CHECK_THROWS_AS(build_metropolis({{0, 0}}, 2), ParameterError);
  CHECK_THROWS_AS(build_metropolis({{0, 5}}, 3), ParameterError);
}

TEST_CASE("metropolis invariants hold on random connected graphs") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform() * 27);  // up to 30
    EdgeList edges;
    for (int v = 1; v < n; ++v) {
      const int parent = static_cast<int>(rng.uniform() * v);
      edges.emplace_back(parent, v);  // random spanning tree
    }
    for (int extra = 0; extra < n / 2; ++extra) {
      const int a = static_cast<int>(rng.uniform() * n);
      const int b = static_cast<int>(rng.uniform() * n);
      if (a == b) continue;
      bool dup = false;
      for (const auto& [u, v] : edges)
        if ((u == a && v == b) || (u == b && v == a)) dup = true;
      if (!dup) edges.emplace_back(a, b);
    }
    // from_dense inside build_metropolis enforces every invariant
    const MixingMatrix w = build_metropolis(edges, n);
    CHECK(w.sigma() < 1.0);
    CHECK(w.matrix().minCoeff() >= 0.0);
  }
}

TEST_CASE("second singular value and validation") {
  CHECK(second_singular_value(Matrix::Constant(6, 6, 1.0 / 6.0)) <= 1e-14);
  CHECK(second_singular_value(Matrix::Identity(4, 4)) == doctest::Approx(1.0));
  // no communication = disconnected, rejected at construction
  CHECK_THROWS_AS(MixingMatrix::from_dense(Matrix::Identity(4, 4)), ConnectivityError);

  Matrix asym(2, 2);
  asym << 0.6, 0.4, 0.3, 0.7;
  CHECK_THROWS_AS(second_singular_value(asym), MixingInvariantError);

  Matrix negative(2, 2);
  negative << 1.5, -0.5, -0.5, 1.5;
  CHECK_THROWS_AS(second_singular_value(negative), MixingInvariantError);

  Matrix bad_sum(2, 2);
  bad_sum << 0.5, 0.4, 0.4, 0.5;
  CHECK_THROWS_AS(second_singular_value(bad_sum), MixingInvariantError);

  // positive weight off the declared sparsity pattern
  Matrix w = Matrix::Constant(3, 3, 1.0 / 3.0);
  EdgeList pattern{{0, 1}, {1, 2}};
  CHECK_THROWS_AS(MixingMatrix::from_dense(w, &pattern), MixingInvariantError);
}

TEST_CASE("mix: fixed point, mean preservation, contraction") {
  Rng rng(9);
  const MixingMatrix w = build_ring(10, 0.8);

  BlockVec same(10, rng.gaussian(5, 2));
  const BlockVec mixed_same = mix(w, same);
  for (const auto& b : mixed_same) CHECK((b - same.front()).cwiseAbs().maxCoeff() <= 1e-14);

  for (int trial = 0; trial < 100; ++trial) {
    BlockVec blocks;
    for (int i = 0; i < 10; ++i) blocks.push_back(rng.gaussian(5, 2));
    const BlockVec out = mix(w, blocks);
    const Matrix mean_in = mean_block(blocks);
    const Matrix mean_out = mean_block(out);
    CHECK((mean_out - mean_in).norm() <= 1e-12 * std::max(1.0, mean_in.norm()));

    // spectral contraction of the disagreement
    BlockVec dev_in = blocks, dev_out = out;
    for (auto& b : dev_in) b -= mean_in;
    for (auto& b : dev_out) b -= mean_in;
    CHECK(stack_blocks(dev_out).norm() <= w.sigma() * stack_blocks(dev_in).norm() + 1e-12);
  }

  BlockVec wrong_count(9, Matrix::Zero(5, 2));
  CHECK_THROWS_AS(mix(w, wrong_count), DimensionError);
  BlockVec ragged(10, Matrix::Zero(5, 2));
  ragged[3] = Matrix::Zero(4, 2);
  CHECK_THROWS_AS(mix(w, ragged), DimensionError);
}

}  // TEST_SUITE
