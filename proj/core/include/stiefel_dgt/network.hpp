#pragma once

#include <utility>
#include <vector>

#include "stiefel_dgt/manifold.hpp"

namespace stiefel_dgt {

using Edge = std::pair<int, int>;
using EdgeList = std::vector<Edge>;
using BlockVec = std::vector<Matrix>;

inline constexpr double kMixingTol = 1e-12;

// Symmetric doubly stochastic communication matrix with its second-largest
// singular value cached. Construction validates every invariant; instances
// are immutable afterwards.
class MixingMatrix {
 public:
  // Validates symmetry, stochasticity, non-negativity and connectivity
  // (sigma_W < 1). When a sparsity pattern is given, W_ij > 0 is only
  // allowed on edges of the pattern or on the diagonal.
  static MixingMatrix from_dense(Matrix w, const EdgeList* pattern = nullptr);

  int size() const { return static_cast<int>(w_.rows()); }
  double sigma() const { return sigma_; }
  const Matrix& matrix() const { return w_; }

 private:
  MixingMatrix(Matrix w, double sigma) : w_(std::move(w)), sigma_(sigma) {}
  Matrix w_;
  double sigma_;
};

// Ring of n >= 3 agents: W_ii = self_weight, the two ring neighbours split
// the rest evenly.
MixingMatrix build_ring(int n, double self_weight);

// W = 11'/n, sigma_W = 0.
MixingMatrix build_complete(int n);

// Metropolis weights: W_ij = 1/(1 + max(deg_i, deg_j)) on edges, diagonal
// soaks up the remainder. The graph must be connected.
MixingMatrix build_metropolis(const EdgeList& edges, int n);

// Largest singular value after deflating the all-ones eigenvector. Validates
// the matrix first.
double second_singular_value(const Matrix& w);

// block_i of the result = sum_j W_ij block_j; preserves the block mean.
BlockVec mix(const MixingMatrix& w, const BlockVec& blocks);

// Named topologies for config assembly.
EdgeList ring_edges(int n);
EdgeList star_edges(int n);
EdgeList path_edges(int n);

}  // namespace stiefel_dgt
