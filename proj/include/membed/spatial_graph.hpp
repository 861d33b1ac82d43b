#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "membed/point_cloud.hpp"
#include "membed/rng.hpp"

namespace membed {

// Directed unweighted adjacency over a point cloud. kNN graphs have uniform
// out-degree k; epsilon graphs are symmetric by construction.
struct SpatialGraph {
  enum class Kind { knn, eps_ball };

  std::vector<std::vector<std::uint32_t>> out_edges;
  Kind kind = Kind::knn;
  double param = 0;  // k or epsilon

  std::uint32_t size() const { return static_cast<std::uint32_t>(out_edges.size()); }

  std::vector<std::uint32_t> sinks() const {
    std::vector<std::uint32_t> s;
    for (std::uint32_t v = 0; v < size(); ++v)
      if (out_edges[v].empty()) s.push_back(v);
    return s;
  }
};

// Directed edges to the k nearest distinct points; distance ties broken by
// ascending index so duplicate points never make the result ambiguous.
inline SpatialGraph build_knn_graph(const PointCloud& points, int k) {
  points.validate();
  const Eigen::Index n = points.size();
  if (k < 1 || k >= n) throw std::invalid_argument("build_knn_graph: need 1 <= k < n");
  SpatialGraph g;
  g.kind = SpatialGraph::Kind::knn;
  g.param = k;
  g.out_edges.assign(n, {});
  std::vector<std::pair<double, std::uint32_t>> cand(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) cand[m++] = {squared_distance(points, i, j), static_cast<std::uint32_t>(j)};
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    auto& out = g.out_edges[i];
    out.reserve(k);
    for (int t = 0; t < k; ++t) out.push_back(cand[t].second);
    std::sort(out.begin(), out.end());
  }
  return g;
}

// Symmetric edges wherever 0 < |x_i - x_j| <= eps.
inline SpatialGraph build_eps_graph(const PointCloud& points, double eps) {
  points.validate();
  if (!(eps > 0)) throw std::invalid_argument("build_eps_graph: eps must be > 0");
  const Eigen::Index n = points.size();
  SpatialGraph g;
  g.kind = SpatialGraph::Kind::eps_ball;
  g.param = eps;
  g.out_edges.assign(n, {});
  const double e2 = eps * eps;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = squared_distance(points, i, j);
      if (d2 > 0 && d2 <= e2) {
        g.out_edges[i].push_back(static_cast<std::uint32_t>(j));
        g.out_edges[j].push_back(static_cast<std::uint32_t>(i));
      }
    }
  return g;
}

// r walks of length L tokens from every vertex, uniform over out-edges.
// Each (vertex, repeat) pair gets its own derived stream, so output does not
// depend on scheduling.
template <typename SentenceSink>
void simple_random_walks(const SpatialGraph& graph, int walks_per_node, int length,
                         std::uint64_t seed, SentenceSink&& sink) {
  if (walks_per_node < 1 || length < 1)
    throw std::invalid_argument("simple_random_walks: bad walk parameters");
  const auto sinks = graph.sinks();
  if (!sinks.empty()) {
    std::string msg = "simple_random_walks: sink vertices:";
    for (std::size_t i = 0; i < sinks.size() && i < 16; ++i)
      msg += " " + std::to_string(sinks[i]);
    if (sinks.size() > 16) msg += " ...";
    throw std::runtime_error(msg);
  }
  const std::uint32_t n = graph.size();
  std::vector<std::uint32_t> walk(length);
  for (std::uint32_t v = 0; v < n; ++v) {
    for (int r = 0; r < walks_per_node; ++r) {
      Rng rng(derive_seed(seed, "walk", std::uint64_t(v) * walks_per_node + r));
      std::uint32_t cur = v;
      for (int t = 0; t < length; ++t) {
        walk[t] = cur;
        const auto& out = graph.out_edges[cur];
        cur = out[rng.uniform_index(out.size())];
      }
      sink(walk);
    }
  }
}

inline std::vector<std::vector<std::uint32_t>> simple_random_walks_collect(
    const SpatialGraph& graph, int walks_per_node, int length, std::uint64_t seed) {
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(std::size_t(graph.size()) * walks_per_node);
  simple_random_walks(graph, walks_per_node, length, seed,
                      [&](const std::vector<std::uint32_t>& w) { out.push_back(w); });
  return out;
}

// All-pairs shortest paths with Euclidean edge lengths (Dijkstra from every
// source). Unreachable pairs are +infinity.
inline Eigen::MatrixXd graph_geodesics(const SpatialGraph& graph, const PointCloud& points) {
  const std::uint32_t n = graph.size();
  if (points.size() != n)
    throw std::invalid_argument("graph_geodesics: graph/point size mismatch");
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Constant(n, n, inf);
  using Item = std::pair<double, std::uint32_t>;
  std::vector<double> d(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    std::fill(d.begin(), d.end(), inf);
    d[s] = 0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.emplace(0.0, s);
    while (!pq.empty()) {
      auto [du, u] = pq.top();
      pq.pop();
      if (du > d[u]) continue;
      for (std::uint32_t v : graph.out_edges[u]) {
        const double w = std::sqrt(squared_distance(points, u, v));
        if (du + w < d[v]) {
          d[v] = du + w;
          pq.emplace(d[v], v);
        }
      }
    }
    for (std::uint32_t t = 0; t < n; ++t) dist(s, t) = d[t];
  }
  return dist;
}

}  // namespace membed
