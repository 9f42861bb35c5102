#pragma once

// Graph and point file formats.
//
//   JSON graph:  {"vertices": [{"id", "x"?, "y"?}],
//                 "edges": [{"id", "source", "target", "length"?, "geometry"?: [[x,y],...]}]}
//   CSV graph:   header `source,target,length`; vertex ids inferred, edge ids e1, e2, ...
//   Points CSV:  header `kind,ref,t` with kind in {vertex, edge}

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "resfield/error.hpp"
#include "resfield/metric_graph.hpp"
#include "resfield/text.hpp"

namespace resfield {

namespace detail {

inline std::string json_id(const nlohmann::json& j, const char* what) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw ParseError(std::string(what) + " must be a string or integer");
}

inline double polyline_length(const std::vector<Point2>& line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i)
    total += std::hypot(line[i][0] - line[i - 1][0], line[i][1] - line[i - 1][1]);
  return total;
}

}  // namespace detail

/// Parses a graph document without semantic validation (the caller decides
/// whether violations are fatal). Format is detected from the first
/// non-blank character: '{' means JSON, anything else CSV.
inline MetricGraph parse_graph_document(std::string_view document) {
  const auto first = document.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) throw ParseError("empty graph document");

  std::vector<Vertex> vertices;
  std::vector<Edge> edges;

  if (document[first] == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("graph JSON: ") + e.what());
    }
    if (!doc.contains("vertices") || !doc["vertices"].is_array() || !doc.contains("edges") ||
        !doc["edges"].is_array())
      throw ParseError("graph JSON needs array members \"vertices\" and \"edges\"");
    try {
      for (const auto& jv : doc["vertices"]) {
        Vertex v;
        v.id = detail::json_id(jv.at("id"), "vertex id");
        if (jv.contains("x")) v.x = jv["x"].get<double>();
        if (jv.contains("y")) v.y = jv["y"].get<double>();
        vertices.push_back(std::move(v));
      }
      for (const auto& je : doc["edges"]) {
        Edge e;
        e.id = detail::json_id(je.at("id"), "edge id");
        e.source = detail::json_id(je.at("source"), "edge source");
        e.target = detail::json_id(je.at("target"), "edge target");
        if (je.contains("geometry")) {
          for (const auto& pt : je["geometry"]) e.geometry.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
        }
        if (je.contains("length") && !je["length"].is_null()) {
          e.length = je["length"].get<double>();
        } else if (e.geometry.size() >= 2) {
          e.length = detail::polyline_length(e.geometry);
        } else {
          throw ParseError("edge '" + e.id + "' has neither length nor geometry");
        }
        edges.push_back(std::move(e));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("graph JSON: ") + e.what());
    }
  } else {
    CsvReader csv(document);
    const auto col_source = csv.column("source");
    const auto col_target = csv.column("target");
    const auto col_length = csv.column("length");
    std::unordered_map<std::string, bool> known;
    while (auto row = csv.next()) {
      Edge e;
      e.id = "e" + std::to_string(edges.size() + 1);
      e.source = (*row)[col_source];
      e.target = (*row)[col_target];
      e.length = parse_double((*row)[col_length], "edge length");
      for (const auto* id : {&e.source, &e.target}) {
        if (known.emplace(*id, true).second) vertices.push_back(Vertex{*id, std::nullopt, std::nullopt});
      }
      edges.push_back(std::move(e));
    }
  }
  return MetricGraph::unchecked(std::move(vertices), std::move(edges));
}

/// Parses and validates; throws ValidationError listing every violation.
inline MetricGraph load_graph(std::string_view document) {
  MetricGraph g = parse_graph_document(document);
  if (auto report = validate_graph(g); !report.empty()) throw ValidationError(report.to_string());
  return g;
}

inline MetricGraph load_graph_file(const std::string& path) { return load_graph(read_text_file(path)); }

inline std::string write_graph_json(const MetricGraph& g) {
  nlohmann::json doc;
  doc["vertices"] = nlohmann::json::array();
  for (const auto& v : g.vertices()) {
    nlohmann::json jv{{"id", v.id}};
    if (v.x) jv["x"] = *v.x;
    if (v.y) jv["y"] = *v.y;
    doc["vertices"].push_back(std::move(jv));
  }
  doc["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges()) {
    nlohmann::json je{{"id", e.id}, {"source", e.source}, {"target", e.target}, {"length", e.length}};
    if (!e.geometry.empty()) {
      auto geom = nlohmann::json::array();
      for (const auto& p : e.geometry) geom.push_back({p[0], p[1]});
      je["geometry"] = std::move(geom);
    }
    doc["edges"].push_back(std::move(je));
  }
  return doc.dump(1) + "\n";
}

inline std::vector<RawPoint> parse_points_document(std::string_view document) {
  CsvReader csv(document);
  const auto col_kind = csv.column("kind");
  const auto col_ref = csv.column("ref");
  const auto col_t = csv.column("t");
  std::vector<RawPoint> points;
  while (auto row = csv.next()) {
    RawPoint p;
    const std::string& kind = (*row)[col_kind];
    if (kind == "vertex") {
      p.kind = PointKind::Vertex;
    } else if (kind == "edge") {
      p.kind = PointKind::Edge;
      p.t = parse_double((*row)[col_t], "point t");
    } else {
      throw ParseError("points file: kind must be 'vertex' or 'edge', got '" + kind + "'");
    }
    p.ref = (*row)[col_ref];
    points.push_back(std::move(p));
  }
  return points;
}

inline PointSet load_points(const MetricGraph& g, std::string_view document) {
  std::vector<PointRef> refs;
  for (const auto& raw : parse_points_document(document)) refs.push_back(canonical_point(g, raw));
  return PointSet::from_list(g, std::move(refs));
}

inline std::string write_points_csv(const MetricGraph& g, const PointSet& ps) {
  std::ostringstream os;
  os << "kind,ref,t\n";
  for (const auto& p : ps) {
    const RawPoint raw = to_raw(g, p);
    if (raw.kind == PointKind::Vertex) {
      os << "vertex," << raw.ref << ",\n";
    } else {
      os << "edge," << raw.ref << ',' << format_double(raw.t) << '\n';
    }
  }
  return os.str();
}

}  // namespace resfield
