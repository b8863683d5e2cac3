#include "eegfuse/graph.hpp"

#include <algorithm>
#include <cmath>

#include "eegfuse/errors.hpp"

namespace eegfuse {

Tensor knn_adjacency(const Tensor& features, size_t k) {
  if (features.rank() != 2)
    throw ValidationError("knn_adjacency: expected [C x F], got " +
                          shape_str(features.shape));
  const size_t c = features.dim(0);
  const size_t f = features.dim(1);
  if (k < 1 || k >= c)
    throw ConfigError("knn_adjacency: need 1 <= k < n_channels, got k=" +
                      std::to_string(k) + " with " + std::to_string(c) + " channels");
  if (!features.all_finite())
    throw ValidationError("knn_adjacency: non-finite feature value");

  Tensor a({c, c});
  std::vector<std::pair<double, size_t>> order;
  order.reserve(c - 1);
  for (size_t i = 0; i < c; ++i) {
    order.clear();
    for (size_t j = 0; j < c; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (size_t t = 0; t < f; ++t) {
        const double diff = features(i, t) - features(j, t);
        d2 += diff * diff;
      }
      order.emplace_back(d2, j);
    }
    // Equal distances resolve toward the lower channel index.
    std::sort(order.begin(), order.end());
    for (size_t r = 0; r < k; ++r) {
      a(i, order[r].second) = 1.0;
      a(order[r].second, i) = 1.0;  // union symmetrization
    }
  }
  return a;
}

ChannelGraph build_graph(const Tensor& features, size_t k) {
  ChannelGraph g;
  g.node_features = features;
  g.adjacency = knn_adjacency(features, k);

  const size_t c = g.adjacency.dim(0);
  g.degree = Tensor({c, c});
  g.laplacian = Tensor({c, c});
  g.neighbors.assign(c, {});
  for (size_t i = 0; i < c; ++i) {
    double deg = 0.0;
    for (size_t j = 0; j < c; ++j) {
      deg += g.adjacency(i, j);
      if (g.adjacency(i, j) != 0.0) g.neighbors[i].push_back(j);
    }
    g.degree(i, i) = deg;
    for (size_t j = 0; j < c; ++j)
      g.laplacian(i, j) = (i == j ? deg : 0.0) - g.adjacency(i, j);
  }
  return g;
}

}  // namespace eegfuse
