#pragma once

// Graphs with Euclidean edges: a simple connected graph whose edges carry an
// arclength coordinate s in [0, length]. Points live on vertices or in edge
// interiors; externally an interior point is addressed by the fraction
// t = s / length measured from the edge source.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <variant>
#include <vector>

#include "resfield/error.hpp"

namespace resfield {

using Point2 = std::array<double, 2>;

struct Vertex {
  std::string id;
  std::optional<double> x;
  std::optional<double> y;
};

struct Edge {
  std::string id;
  std::string source;
  std::string target;
  double length = 0.0;
  std::vector<Point2> geometry;  // display only
};

class MetricGraph {
 public:
  MetricGraph() = default;

  /// Builds the index structures without checking simplicity, connectivity or
  /// lengths (see validate_graph). Throws ValidationError only for problems
  /// that make the graph unaddressable: duplicate ids or unknown endpoints.
  static MetricGraph unchecked(std::vector<Vertex> vertices, std::vector<Edge> edges);

  /// As unchecked(), then throws ValidationError if validate_graph reports
  /// any violation.
  static MetricGraph checked(std::vector<Vertex> vertices, std::vector<Edge> edges);

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Vertex& vertex(std::size_t i) const { return vertices_.at(i); }
  const Edge& edge(std::size_t i) const { return edges_.at(i); }

  std::size_t source(std::size_t e) const { return endpoints_[e][0]; }
  std::size_t target(std::size_t e) const { return endpoints_[e][1]; }
  double length(std::size_t e) const { return edges_[e].length; }

  std::optional<std::size_t> find_vertex(const std::string& id) const {
    auto it = vertex_index_.find(id);
    if (it == vertex_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> find_edge(const std::string& id) const {
    auto it = edge_index_.find(id);
    if (it == edge_index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t vertex_index(const std::string& id) const {
    if (auto v = find_vertex(id)) return *v;
    throw ArgumentError("unknown vertex id '" + id + "'");
  }
  std::size_t edge_index(const std::string& id) const {
    if (auto e = find_edge(id)) return *e;
    throw ArgumentError("unknown edge id '" + id + "'");
  }

  std::span<const std::size_t> incident_edges(std::size_t v) const { return incident_[v]; }

  // Correctly rounded sum (Shewchuk partials).
  double total_length() const {
    std::vector<double> partials;
    for (const auto& e : edges_) {
      double x = e.length;
      std::size_t i = 0;
      for (double y : partials) {
        if (std::abs(x) < std::abs(y)) std::swap(x, y);
        const double hi = x + y;
        const double lo = y - (hi - x);
        if (lo != 0.0) partials[i++] = lo;
        x = hi;
      }
      partials.resize(i);
      partials.push_back(x);
    }
    double hi = 0.0;
    while (!partials.empty()) {
      const double x = hi;
      const double y = partials.back();
      partials.pop_back();
      hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) {
        if (!partials.empty() && ((lo < 0.0 && partials.back() < 0.0) || (lo > 0.0 && partials.back() > 0.0))) {
          const double y2 = lo * 2.0;
          const double x2 = hi + y2;
          if (y2 == x2 - hi) hi = x2;
        }
        break;
      }
    }
    return hi;
  }

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::array<std::size_t, 2>> endpoints_;
  std::vector<std::vector<std::size_t>> incident_;
  std::unordered_map<std::string, std::size_t> vertex_index_;
  std::unordered_map<std::string, std::size_t> edge_index_;
};

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind { SelfLoop, DuplicateEdge, NonpositiveLength, Disconnected };

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool empty() const { return violations.empty(); }
  bool contains(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
  }
  std::string to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
      if (i) os << "; ";
      os << violations[i].message;
    }
    return os.str();
  }
};

inline ValidationReport validate_graph(const MetricGraph& g) {
  ValidationReport report;
  constexpr const char* kSimpleHint = " (split the edge to make the graph simple)";

  std::unordered_map<std::string, std::size_t> seen_pairs;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const Edge& edge = g.edge(e);
    const std::size_t s = g.source(e);
    const std::size_t t = g.target(e);
    if (s == t) {
      report.violations.push_back(
          {ViolationKind::SelfLoop, "self-loop at edge '" + edge.id + "'" + kSimpleHint});
    } else {
      const std::string key = std::to_string(std::min(s, t)) + ":" + std::to_string(std::max(s, t));
      auto [it, inserted] = seen_pairs.emplace(key, e);
      if (!inserted) {
        report.violations.push_back({ViolationKind::DuplicateEdge,
                                     "duplicate edge '" + edge.id + "' parallel to '" +
                                         g.edge(it->second).id + "'" + kSimpleHint});
      }
    }
    if (!(edge.length > 0.0) || !std::isfinite(edge.length)) {
      std::ostringstream os;
      os << "nonpositive edge length " << edge.length << " at edge '" << edge.id << "'";
      report.violations.push_back({ViolationKind::NonpositiveLength, os.str()});
    }
  }

  if (g.vertex_count() > 0) {
    std::vector<int> component(g.vertex_count(), -1);
    int count = 0;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < g.vertex_count(); ++start) {
      if (component[start] >= 0) continue;
      component[start] = count;
      stack.push_back(start);
      while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t e : g.incident_edges(v)) {
          const std::size_t w = g.source(e) == v ? g.target(e) : g.source(e);
          if (component[w] < 0) {
            component[w] = count;
            stack.push_back(w);
          }
        }
      }
      ++count;
    }
    if (count > 1) {
      report.violations.push_back({ViolationKind::Disconnected,
                                   "graph is disconnected (" + std::to_string(count) + " components)"});
    }
  } else {
    report.violations.push_back({ViolationKind::Disconnected, "graph is disconnected (no vertices)"});
  }
  return report;
}

inline MetricGraph MetricGraph::unchecked(std::vector<Vertex> vertices, std::vector<Edge> edges) {
  MetricGraph g;
  g.vertices_ = std::move(vertices);
  g.edges_ = std::move(edges);
  for (std::size_t i = 0; i < g.vertices_.size(); ++i) {
    if (!g.vertex_index_.emplace(g.vertices_[i].id, i).second)
      throw ValidationError("duplicate vertex id '" + g.vertices_[i].id + "'");
  }
  g.incident_.assign(g.vertices_.size(), {});
  g.endpoints_.reserve(g.edges_.size());
  for (std::size_t e = 0; e < g.edges_.size(); ++e) {
    const Edge& edge = g.edges_[e];
    if (!g.edge_index_.emplace(edge.id, e).second)
      throw ValidationError("duplicate edge id '" + edge.id + "'");
    auto s = g.find_vertex(edge.source);
    auto t = g.find_vertex(edge.target);
    if (!s || !t)
      throw ValidationError("edge '" + edge.id + "' references unknown vertex '" +
                            (s ? edge.target : edge.source) + "'");
    g.endpoints_.push_back({*s, *t});
    g.incident_[*s].push_back(e);
    if (*t != *s) g.incident_[*t].push_back(e);
  }
  return g;
}

inline MetricGraph MetricGraph::checked(std::vector<Vertex> vertices, std::vector<Edge> edges) {
  MetricGraph g = unchecked(std::move(vertices), std::move(edges));
  if (auto report = validate_graph(g); !report.empty()) throw ValidationError(report.to_string());
  return g;
}

// ---------------------------------------------------------------------------
// Points

struct VertexPoint {
  std::size_t vertex = 0;
  friend bool operator==(const VertexPoint&, const VertexPoint&) = default;
};

/// Interior point of an edge; 0 < t < 1 is the arclength fraction from the source.
struct EdgePoint {
  std::size_t edge = 0;
  double t = 0.5;
  friend bool operator==(const EdgePoint&, const EdgePoint&) = default;
};

using PointRef = std::variant<VertexPoint, EdgePoint>;

inline bool is_vertex(const PointRef& p) { return std::holds_alternative<VertexPoint>(p); }

/// t = 0 and t = 1 collapse onto the edge endpoints.
inline PointRef canonical_point(const MetricGraph& g, std::size_t edge, double t) {
  if (edge >= g.edge_count()) throw ArgumentError("edge index out of range");
  if (!(t >= 0.0 && t <= 1.0))
    throw ArgumentError("edge fraction t=" + std::to_string(t) + " outside [0,1]");
  if (t == 0.0) return VertexPoint{g.source(edge)};
  if (t == 1.0) return VertexPoint{g.target(edge)};
  return EdgePoint{edge, t};
}

inline PointRef canonical_point(const MetricGraph& g, const PointRef& raw) {
  if (const auto* v = std::get_if<VertexPoint>(&raw)) {
    if (v->vertex >= g.vertex_count()) throw ArgumentError("vertex index out of range");
    return *v;
  }
  const auto& e = std::get<EdgePoint>(raw);
  return canonical_point(g, e.edge, e.t);
}

enum class PointKind { Vertex, Edge };

/// Raw, id-based point address as it appears in files.
struct RawPoint {
  PointKind kind = PointKind::Vertex;
  std::string ref;
  double t = 0.0;
};

inline PointRef canonical_point(const MetricGraph& g, const RawPoint& raw) {
  if (raw.kind == PointKind::Vertex) return VertexPoint{g.vertex_index(raw.ref)};
  return canonical_point(g, g.edge_index(raw.ref), raw.t);
}

/// Geometry of a point relative to its host: interpolation endpoints and
/// weight (Z(p) = (1-w) Z(lower) + w Z(upper)), plus arclength for edge points.
struct PointLocation {
  std::size_t lower = 0;
  std::size_t upper = 0;
  double weight = 0.0;
  std::optional<std::size_t> edge;
  double arc = 0.0;
  double edge_length = 0.0;
};

inline PointLocation locate(const MetricGraph& g, const PointRef& p) {
  if (const auto* v = std::get_if<VertexPoint>(&p)) return {v->vertex, v->vertex, 0.0, std::nullopt, 0.0, 0.0};
  const auto& e = std::get<EdgePoint>(p);
  const double len = g.length(e.edge);
  return {g.source(e.edge), g.target(e.edge), e.t, e.edge, e.t * len, len};
}

inline RawPoint to_raw(const MetricGraph& g, const PointRef& p) {
  if (const auto* v = std::get_if<VertexPoint>(&p)) return {PointKind::Vertex, g.vertex(v->vertex).id, 0.0};
  const auto& e = std::get<EdgePoint>(p);
  return {PointKind::Edge, g.edge(e.edge).id, e.t};
}

/// Ordered, duplicate-free list of canonical points. Edge points of one edge
/// form a contiguous run with strictly increasing t, which the sequential
/// bridge sampler relies on.
class PointSet {
 public:
  PointSet() = default;

  /// Keeps the given order; throws ArgumentError if the invariants fail.
  static PointSet from_list(const MetricGraph& g, std::vector<PointRef> points) {
    std::vector<char> vertex_seen(g.vertex_count(), 0);
    std::vector<char> edge_closed(g.edge_count(), 0);
    std::optional<std::size_t> open_edge;
    double last_t = 0.0;
    for (auto& p : points) {
      p = canonical_point(g, p);
      if (const auto* v = std::get_if<VertexPoint>(&p)) {
        if (vertex_seen[v->vertex]++) throw ArgumentError("duplicate vertex point '" + g.vertex(v->vertex).id + "'");
        if (open_edge) edge_closed[*open_edge] = 1;
        open_edge.reset();
        continue;
      }
      const auto& e = std::get<EdgePoint>(p);
      if (open_edge && *open_edge == e.edge) {
        if (!(e.t > last_t))
          throw ArgumentError("points on edge '" + g.edge(e.edge).id + "' not strictly increasing in t");
      } else {
        if (open_edge) edge_closed[*open_edge] = 1;
        if (edge_closed[e.edge])
          throw ArgumentError("points on edge '" + g.edge(e.edge).id + "' are not contiguous");
        open_edge = e.edge;
      }
      last_t = e.t;
    }
    PointSet ps;
    ps.points_ = std::move(points);
    return ps;
  }

  /// Canonicalizes, sorts (vertices first, then by edge and t) and removes
  /// duplicates.
  static PointSet canonical(const MetricGraph& g, std::vector<PointRef> points) {
    for (auto& p : points) p = canonical_point(g, p);
    auto key = [](const PointRef& p) {
      if (const auto* v = std::get_if<VertexPoint>(&p)) return std::tuple<int, std::size_t, double>(0, v->vertex, 0.0);
      const auto& e = std::get<EdgePoint>(p);
      return std::tuple<int, std::size_t, double>(1, e.edge, e.t);
    };
    std::sort(points.begin(), points.end(), [&](const PointRef& a, const PointRef& b) { return key(a) < key(b); });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    return from_list(g, std::move(points));
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const PointRef& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<PointRef>& points() const { return points_; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

 private:
  std::vector<PointRef> points_;
};

/// k equispaced interior points per edge at t = j/(k+1); vertices optionally first.
inline PointSet discretize(const MetricGraph& g, std::size_t points_per_edge, bool include_vertices) {
  if (points_per_edge < 1) throw ArgumentError("points_per_edge must be >= 1");
  std::vector<PointRef> pts;
  pts.reserve(g.edge_count() * points_per_edge + (include_vertices ? g.vertex_count() : 0));
  if (include_vertices)
    for (std::size_t v = 0; v < g.vertex_count(); ++v) pts.push_back(VertexPoint{v});
  const double denom = static_cast<double>(points_per_edge + 1);
  for (std::size_t e = 0; e < g.edge_count(); ++e)
    for (std::size_t j = 1; j <= points_per_edge; ++j) pts.push_back(EdgePoint{e, static_cast<double>(j) / denom});
  return PointSet::from_list(g, std::move(pts));
}

// ---------------------------------------------------------------------------
// Edge splitting

struct SplitResult {
  MetricGraph graph;
  std::size_t new_vertex = 0;
  std::size_t first_half = 0;   // source -> new vertex; keeps the old edge index
  std::size_t second_half = 0;  // new vertex -> target; appended
  std::size_t split_edge = 0;
  double split_t = 0.5;

  /// Maps a point of the original graph to the same physical point in `graph`.
  PointRef remap(const PointRef& p) const {
    const auto* e = std::get_if<EdgePoint>(&p);
    if (!e || e->edge != split_edge) return p;
    if (e->t < split_t) return EdgePoint{first_half, e->t / split_t};
    if (e->t == split_t) return VertexPoint{new_vertex};
    return EdgePoint{second_half, (e->t - split_t) / (1.0 - split_t)};
  }
};

namespace detail {

inline std::string unique_id(const std::string& base, auto&& taken) {
  std::string id = base;
  for (int k = 2; taken(id); ++k) id = base + "_" + std::to_string(k);
  return id;
}

// Splits a polyline at arclength fraction t; returns the split point and halves.
inline std::tuple<Point2, std::vector<Point2>, std::vector<Point2>> split_polyline(const std::vector<Point2>& line,
                                                                                  double t) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i)
    total += std::hypot(line[i][0] - line[i - 1][0], line[i][1] - line[i - 1][1]);
  const double target = t * total;
  double acc = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double seg = std::hypot(line[i][0] - line[i - 1][0], line[i][1] - line[i - 1][1]);
    if (acc + seg >= target || i + 1 == line.size()) {
      const double f = seg > 0.0 ? std::clamp((target - acc) / seg, 0.0, 1.0) : 0.0;
      const Point2 mid{line[i - 1][0] + f * (line[i][0] - line[i - 1][0]),
                       line[i - 1][1] + f * (line[i][1] - line[i - 1][1])};
      std::vector<Point2> first(line.begin(), line.begin() + static_cast<std::ptrdiff_t>(i));
      first.push_back(mid);
      std::vector<Point2> second{mid};
      second.insert(second.end(), line.begin() + static_cast<std::ptrdiff_t>(i), line.end());
      return {mid, first, second};
    }
    acc += seg;
  }
  return {line.empty() ? Point2{0.0, 0.0} : line.front(), line, line};
}

}  // namespace detail

/// Inserts a vertex at fraction t of edge e, replacing e by two edges of
/// lengths t*len and (1-t)*len.
inline SplitResult split_edge(const MetricGraph& g, std::size_t e, double t) {
  if (e >= g.edge_count()) throw ArgumentError("edge index out of range");
  if (!(t > 0.0 && t < 1.0)) throw ArgumentError("split fraction must lie in (0,1)");

  const Edge& old = g.edge(e);
  std::vector<Vertex> vertices = g.vertices();
  std::vector<Edge> edges = g.edges();

  Vertex w;
  w.id = detail::unique_id(old.id + "_split", [&](const std::string& id) { return g.find_vertex(id).has_value(); });
  std::vector<Point2> geom_a, geom_b;
  if (old.geometry.size() >= 2) {
    auto [mid, a, b] = detail::split_polyline(old.geometry, t);
    w.x = mid[0];
    w.y = mid[1];
    geom_a = std::move(a);
    geom_b = std::move(b);
  } else {
    const Vertex& s = g.vertex(g.source(e));
    const Vertex& r = g.vertex(g.target(e));
    if (s.x && s.y && r.x && r.y) {
      w.x = *s.x + t * (*r.x - *s.x);
      w.y = *s.y + t * (*r.y - *s.y);
    }
  }

  // Both subtractions are exact (Sterbenz), so the halves sum to the old length with no rounding.
  Edge second{old.id + "_b", w.id, old.target, old.length - t * old.length, std::move(geom_b)};
  Edge first{old.id + "_a", old.source, w.id, old.length - second.length, std::move(geom_a)};
  auto taken = [&](const std::string& id) { return id != old.id && g.find_edge(id).has_value(); };
  first.id = detail::unique_id(first.id, taken);
  second.id = detail::unique_id(second.id, [&](const std::string& id) { return taken(id) || id == first.id; });

  vertices.push_back(std::move(w));
  edges[e] = std::move(first);
  edges.push_back(std::move(second));

  SplitResult result;
  result.graph = MetricGraph::unchecked(std::move(vertices), std::move(edges));
  result.new_vertex = result.graph.vertex_count() - 1;
  result.first_half = e;
  result.second_half = result.graph.edge_count() - 1;
  result.split_edge = e;
  result.split_t = t;
  return result;
}

}  // namespace resfield
