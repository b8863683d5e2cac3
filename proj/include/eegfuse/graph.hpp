#pragma once

#include <cstddef>
#include <vector>

#include "eegfuse/tensor.hpp"

namespace eegfuse {

// Channel graph built from per-channel features. Adjacency is binary,
// symmetric, zero-diagonal; degree and Laplacian follow from it.
struct ChannelGraph {
  Tensor node_features;               // [C x F]
  Tensor adjacency;                   // [C x C], A = A^T, diag(A) = 0
  Tensor degree;                      // [C x C], diagonal row sums of A
  Tensor laplacian;                   // [C x C], L = D - A
  std::vector<std::vector<size_t>> neighbors;  // neighbors[i] sorted ascending

  size_t n_nodes() const { return adjacency.rank() == 2 ? adjacency.dim(0) : 0; }
};

// K-nearest-neighbour adjacency over rows of [C x F] by Euclidean distance.
// Each node links to its k nearest others (ties resolved toward the lower
// index); the result is symmetrized by union. Requires 1 <= k < C.
Tensor knn_adjacency(const Tensor& features, size_t k);

// Assembles adjacency, degree, Laplacian and neighbor lists for `features`.
ChannelGraph build_graph(const Tensor& features, size_t k);

}  // namespace eegfuse
