#include "stiefel_dgt/network.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <set>

namespace stiefel_dgt {

namespace {

void validate_dense(const Matrix& w, const EdgeList* pattern) {
  const auto n = w.rows();
  if (n <= 0 || w.cols() != n) throw DimensionError("MixingMatrix: W must be square");
  if (!w.allFinite()) throw MixingInvariantError("MixingMatrix: non-finite entries");
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > kMixingTol)
    throw MixingInvariantError("MixingMatrix: W is not symmetric");
  if (w.minCoeff() < 0.0) throw MixingInvariantError("MixingMatrix: negative entry");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(w.row(i).sum() - 1.0) > kMixingTol)
      throw MixingInvariantError("MixingMatrix: row " + std::to_string(i) + " does not sum to 1");
    if (std::abs(w.col(i).sum() - 1.0) > kMixingTol)
      throw MixingInvariantError("MixingMatrix: column " + std::to_string(i) +
                                 " does not sum to 1");
  }
  if (pattern != nullptr) {
    std::set<std::pair<int, int>> allowed;
    for (const auto& [a, b] : *pattern) {
      allowed.emplace(a, b);
      allowed.emplace(b, a);
    }
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j && w(i, j) > 0.0 &&
            allowed.count({static_cast<int>(i), static_cast<int>(j)}) == 0)
          throw MixingInvariantError("MixingMatrix: positive weight off the graph at (" +
                                     std::to_string(i) + "," + std::to_string(j) + ")");
  }
}

// sigma after the ones-direction is removed; assumes w already validated.
double deflated_sigma(const Matrix& w) {
  const auto n = w.rows();
  const Matrix deflated = w - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Matrix> es(deflated);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void check_edge_range(const EdgeList& edges, int n) {
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw ParameterError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                           ") out of range for n=" + std::to_string(n));
    if (a == b) throw ParameterError("self-loop edges are not allowed");
  }
}

bool connected(const EdgeList& edges, int n) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::vector<int> stack{0};
  seen[0] = true;
  int visited = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adj[v])
      if (!seen[u]) {
        seen[u] = true;
        ++visited;
        stack.push_back(u);
      }
  }
  return visited == n;
}

}  // namespace

MixingMatrix MixingMatrix::from_dense(Matrix w, const EdgeList* pattern) {
  validate_dense(w, pattern);
  const double sigma = deflated_sigma(w);
  if (w.rows() > 1 && sigma >= 1.0 - 1e-12)
    throw ConnectivityError("MixingMatrix: sigma_W >= 1, graph is not connected");
  return MixingMatrix(std::move(w), sigma);
}

MixingMatrix build_ring(int n, double self_weight) {
  if (n < 3) throw ParameterError("build_ring: need n >= 3");
  if (!(self_weight > 0.0 && self_weight < 1.0))
    throw ParameterError("build_ring: self_weight must lie in (0, 1)");
  const double side = (1.0 - self_weight) / 2.0;
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    w(i, i) = self_weight;
    const int next = (i + 1) % n;
    w(i, next) += side;
    w(next, i) += side;
  }
  const EdgeList pattern = ring_edges(n);
  return MixingMatrix::from_dense(std::move(w), &pattern);
}

MixingMatrix build_complete(int n) {
  if (n < 1) throw ParameterError("build_complete: need n >= 1");
  Matrix w = Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  return MixingMatrix::from_dense(std::move(w));
}

MixingMatrix build_metropolis(const EdgeList& edges, int n) {
  if (n < 1) throw ParameterError("build_metropolis: need n >= 1");
  check_edge_range(edges, n);
  if (!connected(edges, n))
    throw ConnectivityError("build_metropolis: graph is not connected");
  std::vector<int> degree(n, 0);
  for (const auto& [a, b] : edges) {
    ++degree[a];
    ++degree[b];
  }
  Matrix w = Matrix::Zero(n, n);
  for (const auto& [a, b] : edges) {
    const double weight = 1.0 / (1.0 + std::max(degree[a], degree[b]));
    w(a, b) = weight;
    w(b, a) = weight;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
  return MixingMatrix::from_dense(std::move(w), &edges);
}

double second_singular_value(const Matrix& w) {
  validate_dense(w, nullptr);
  return deflated_sigma(w);
}

BlockVec mix(const MixingMatrix& w, const BlockVec& blocks) {
  const int n = w.size();
  if (static_cast<int>(blocks.size()) != n)
    throw DimensionError("mix: block count does not match the network size");
  for (const auto& b : blocks)
    if (b.rows() != blocks.front().rows() || b.cols() != blocks.front().cols())
      throw DimensionError("mix: blocks must share one shape");
  BlockVec out(blocks.size());
  const Matrix& m = w.matrix();
  for (int i = 0; i < n; ++i) {
    Matrix acc = Matrix::Zero(blocks.front().rows(), blocks.front().cols());
    for (int j = 0; j < n; ++j)
      if (m(i, j) != 0.0) acc.noalias() += m(i, j) * blocks[j];
    out[i] = std::move(acc);
  }
  return out;
}

EdgeList ring_edges(int n) {
  if (n < 3) throw ParameterError("ring_edges: need n >= 3");
  EdgeList edges;
  edges.reserve(n);
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return edges;
}

EdgeList star_edges(int n) {
  if (n < 2) throw ParameterError("star_edges: need n >= 2");
  EdgeList edges;
  edges.reserve(n - 1);
  for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
  return edges;
}

EdgeList path_edges(int n) {
  if (n < 2) throw ParameterError("path_edges: need n >= 2");
  EdgeList edges;
  edges.reserve(n - 1);
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return edges;
}

}  // namespace stiefel_dgt
