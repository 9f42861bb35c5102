#pragma once

// Bundled synthetic networks: small analytic test graphs, a 10x10 grid with
// two bridge edges, and a 503-edge street-like network.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "resfield/graph_io.hpp"
#include "resfield/metric_graph.hpp"
#include "resfield/rng.hpp"
#include "resfield/text.hpp"

namespace resfield {

namespace detail {

inline Vertex make_vertex(std::string id, double x, double y) { return Vertex{std::move(id), x, y}; }

inline Edge make_edge(std::string id, std::string s, std::string t, double length) {
  return Edge{std::move(id), std::move(s), std::move(t), length, {}};
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Fisher-Yates with our own engine so the permutation is identical on every
/// standard library.
template <class T>
void shuffle(std::vector<T>& v, RandomStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

inline std::string padded(std::size_t k, int width) {
  std::string s = std::to_string(k);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

}  // namespace detail

inline MetricGraph unit_edge_graph() {
  return MetricGraph::checked({detail::make_vertex("v1", 0, 0), detail::make_vertex("v2", 1, 0)},
                              {detail::make_edge("e1", "v1", "v2", 1.0)});
}

inline MetricGraph path3_graph() {
  return MetricGraph::checked(
      {detail::make_vertex("v1", 0, 0), detail::make_vertex("v2", 1, 0), detail::make_vertex("v3", 2, 0)},
      {detail::make_edge("e1", "v1", "v2", 1.0), detail::make_edge("e2", "v2", "v3", 1.0)});
}

inline MetricGraph triangle_graph() {
  const double h = std::sqrt(3.0) / 2.0;
  return MetricGraph::checked(
      {detail::make_vertex("v1", 0, 0), detail::make_vertex("v2", 1, 0), detail::make_vertex("v3", 0.5, h)},
      {detail::make_edge("e1", "v1", "v2", 1.0), detail::make_edge("e2", "v2", "v3", 1.0),
       detail::make_edge("e3", "v3", "v1", 1.0)});
}

/// A unit edge v1-v2 plus a second route v1-w-v2 of two half-length edges.
inline MetricGraph parallel_route_graph() {
  return MetricGraph::checked(
      {detail::make_vertex("v1", 0, 0), detail::make_vertex("v2", 1, 0), detail::make_vertex("w", 0.5, 0.3)},
      {detail::make_edge("e1", "v1", "v2", 1.0), detail::make_edge("e2", "v1", "w", 0.5),
       detail::make_edge("e3", "w", "v2", 0.5)});
}

/// 10x10 unit grid (180 edges) plus two bridges joining opposite corners with
/// edges far shorter than the planar distance between their endpoints.
inline MetricGraph grid_bridge_graph() {
  std::vector<Vertex> vs;
  std::vector<Edge> es;
  auto id = [](int r, int c) { return "r" + std::to_string(r) + "c" + std::to_string(c); };
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) vs.push_back(detail::make_vertex(id(r, c), c, r));
  std::size_t k = 0;
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) {
      if (c + 1 < 10) es.push_back(detail::make_edge("g" + detail::padded(++k, 3), id(r, c), id(r, c + 1), 1.0));
      if (r + 1 < 10) es.push_back(detail::make_edge("g" + detail::padded(++k, 3), id(r, c), id(r + 1, c), 1.0));
    }
  es.push_back(detail::make_edge("bridge1", id(0, 0), id(9, 9), 2.0));
  es.push_back(detail::make_edge("bridge2", id(0, 9), id(9, 0), 2.0));
  return MetricGraph::checked(std::move(vs), std::move(es));
}

inline constexpr std::uint64_t kStreetsSeed = 503;
inline constexpr double kStreetsBlock = 12.0;

/// Street-like network with 338 vertices and 503 edges: a jittered 13x26
/// block grid thinned to a random spanning tree plus 166 of the remaining
/// streets. Vertex ids are ordered by distance from the centre, so the
/// default anchor (smallest id) sits in the middle of the network.
inline MetricGraph streets503_graph(std::uint64_t seed = kStreetsSeed, double block = kStreetsBlock) {
  constexpr int rows = 13;
  constexpr int cols = 26;
  constexpr std::size_t target_edges = 503;
  RandomStream rng = rng_substream(seed, 0, 0, StreamRole::Locations);

  const std::size_t n = rows * cols;
  std::vector<double> x(n);
  std::vector<double> y(n);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::size_t v = static_cast<std::size_t>(r * cols + c);
      x[v] = block * (c + rng.uniform(-0.25, 0.25));
      y[v] = block * (r + rng.uniform(-0.25, 0.25));
    }

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::size_t v = static_cast<std::size_t>(r * cols + c);
      if (c + 1 < cols) candidates.emplace_back(v, v + 1);
      if (r + 1 < rows) candidates.emplace_back(v, v + cols);
    }
  detail::shuffle(candidates, rng);

  detail::UnionFind uf(n);
  std::vector<char> chosen(candidates.size(), 0);
  std::size_t count = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k)
    if (uf.unite(candidates[k].first, candidates[k].second)) {
      chosen[k] = 1;
      ++count;
    }
  for (std::size_t k = 0; k < candidates.size() && count < target_edges; ++k)
    if (!chosen[k]) {
      chosen[k] = 1;
      ++count;
    }

  // Streets are not straight: length is the chord times a winding factor.
  std::vector<double> winding(candidates.size());
  for (auto& w : winding) w = 1.0 + rng.uniform(0.0, 0.3);

  const double cx = block * (cols - 1) / 2.0;
  const double cy = block * (rows - 1) / 2.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::hypot(x[a] - cx, y[a] - cy) < std::hypot(x[b] - cx, y[b] - cy);
  });
  std::vector<std::string> name(n);
  std::vector<Vertex> vs;
  for (std::size_t k = 0; k < n; ++k) {
    name[order[k]] = "n" + detail::padded(k, 3);
    vs.push_back(detail::make_vertex(name[order[k]], x[order[k]], y[order[k]]));
  }

  std::vector<std::pair<std::size_t, std::size_t>> kept;
  std::vector<double> lengths;
  for (std::size_t k = 0; k < candidates.size(); ++k)
    if (chosen[k]) {
      const auto [a, b] = candidates[k];
      kept.emplace_back(a, b);
      lengths.push_back(std::hypot(x[a] - x[b], y[a] - y[b]) * winding[k]);
    }
  std::vector<Edge> es;
  for (std::size_t k = 0; k < kept.size(); ++k)
    es.push_back(detail::make_edge("s" + detail::padded(k + 1, 3), name[kept[k].first], name[kept[k].second], lengths[k]));
  return MetricGraph::checked(std::move(vs), std::move(es));
}

/// Random connected graph: a random tree on n vertices plus `extra` chords,
/// edge lengths Unif(0.5, 2).
inline MetricGraph random_connected_graph(std::size_t n, std::size_t extra, std::uint64_t seed) {
  if (n < 2) throw ArgumentError("random graph needs at least two vertices");
  RandomStream rng = rng_substream(seed, 0, 0, StreamRole::Locations);
  std::vector<Vertex> vs;
  for (std::size_t k = 0; k < n; ++k) vs.push_back(detail::make_vertex("v" + detail::padded(k, 3), rng.uniform(0, 1), rng.uniform(0, 1)));
  std::vector<Edge> es;
  std::vector<std::vector<char>> used(n, std::vector<char>(n, 0));
  auto add = [&](std::size_t a, std::size_t b) {
    used[a][b] = used[b][a] = 1;
    es.push_back(detail::make_edge("e" + detail::padded(es.size() + 1, 3), vs[a].id, vs[b].id, rng.uniform(0.5, 2.0)));
  };
  for (std::size_t k = 1; k < n; ++k) add(static_cast<std::size_t>(rng() % k), k);
  const std::size_t max_extra = n * (n - 1) / 2 - (n - 1);
  extra = std::min(extra, max_extra);
  while (extra > 0) {
    const auto a = static_cast<std::size_t>(rng() % n);
    const auto b = static_cast<std::size_t>(rng() % n);
    if (a == b || used[a][b]) continue;
    add(a, b);
    --extra;
  }
  return MetricGraph::checked(std::move(vs), std::move(es));
}

struct NamedGraph {
  std::string name;
  MetricGraph graph;
};

inline std::vector<NamedGraph> example_networks() {
  std::vector<NamedGraph> out;
  out.push_back({"grid-bridge", grid_bridge_graph()});
  out.push_back({"streets-503", streets503_graph()});
  out.push_back({"unit-edge", unit_edge_graph()});
  out.push_back({"path-3", path3_graph()});
  out.push_back({"triangle", triangle_graph()});
  out.push_back({"parallel-route", parallel_route_graph()});
  return out;
}

/// Writes every bundled network as `<dir>/<name>.json`; returns the paths.
inline std::vector<std::string> write_examples(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("io", "cannot create directory '" + dir + "': " + ec.message());
  std::vector<std::string> files;
  for (const auto& ng : example_networks()) {
    const std::string path = (std::filesystem::path(dir) / (ng.name + ".json")).string();
    write_text_file(path, write_graph_json(ng.graph));
    files.push_back(path);
  }
  return files;
}

}  // namespace resfield
