#pragma once

// CSV writers and readers for realizations, resistance matrices, variogram
// tests and normality reports. Realization files start with `# key=value`
// provenance lines that are enough to regenerate the file.

#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "resfield/error.hpp"
#include "resfield/metric_graph.hpp"
#include "resfield/resistance.hpp"
#include "resfield/simulate.hpp"
#include "resfield/stats.hpp"
#include "resfield/text.hpp"

namespace resfield {

/// Ordered key/value pairs written as `# key=value` header lines.
struct Provenance {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries)
      if (k == key) {
        v = value;
        return;
      }
    entries.emplace_back(key, value);
  }

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }

  std::string header() const {
    std::string out;
    for (const auto& [k, v] : entries) out += "# " + k + "=" + v + "\n";
    return out;
  }

  static Provenance parse(const std::vector<std::string>& comment_lines) {
    Provenance p;
    for (const auto& line : comment_lines) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      p.entries.emplace_back(std::string(trim(std::string_view(line).substr(0, eq))), line.substr(eq + 1));
    }
    return p;
  }
};

inline std::string point_label(std::size_t index, std::size_t total) {
  std::string s = std::to_string(index + 1);
  const std::size_t width = std::to_string(total).size();
  return "p" + std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

namespace detail {

inline std::string rep_label(std::size_t r, std::size_t total) {
  std::string s = std::to_string(r + 1);
  const std::size_t width = std::max<std::size_t>(4, std::to_string(total).size());
  return "rep_" + std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

}  // namespace detail

/// Columns point_id,kind,ref,t,arc_s,rep_0001..rep_R.
inline std::string write_realization_csv(const MetricGraph& g, const PointSet& ps, const RealizationSet& real,
                                         const Provenance& prov) {
  if (real.points != ps.size()) throw ArgumentError("realization does not match the point set");
  std::string out = prov.header();
  out += "point_id,kind,ref,t,arc_s";
  for (std::size_t r = 0; r < real.reps; ++r) out += "," + detail::rep_label(r, real.reps);
  out += "\n";
  for (std::size_t p = 0; p < ps.size(); ++p) {
    const RawPoint raw = to_raw(g, ps[p]);
    out += point_label(p, ps.size());
    if (raw.kind == PointKind::Vertex) {
      out += ",vertex," + raw.ref + ",,";
    } else {
      const PointLocation loc = locate(g, ps[p]);
      out += ",edge," + raw.ref + "," + format_double(raw.t) + "," + format_double(loc.arc);
    }
    for (std::size_t r = 0; r < real.reps; ++r) {
      out += ",";
      out += format_double(real.at(p, r));
    }
    out += "\n";
  }
  return out;
}

struct RealizationTable {
  Provenance provenance;
  std::vector<RawPoint> points;
  std::size_t reps = 0;
  std::vector<double> values;  // replicate-major, as in RealizationSet

  double at(std::size_t p, std::size_t r) const { return values[r * points.size() + p]; }
};

inline RealizationTable read_realization_csv(std::string_view document) {
  CsvReader csv(document);
  const auto& header = csv.header();
  const auto col_kind = csv.column("kind");
  const auto col_ref = csv.column("ref");
  const auto col_t = csv.column("t");
  std::vector<std::size_t> rep_cols;
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k].rfind("rep_", 0) == 0) rep_cols.push_back(k);
  RealizationTable table;
  table.reps = rep_cols.size();
  std::vector<std::vector<double>> rows;
  while (auto row = csv.next()) {
    RawPoint p;
    const std::string& kind = (*row)[col_kind];
    p.ref = (*row)[col_ref];
    if (kind == "vertex") {
      p.kind = PointKind::Vertex;
    } else if (kind == "edge") {
      p.kind = PointKind::Edge;
      p.t = parse_double((*row)[col_t], "point t");
    } else {
      throw ParseError("realization file: bad point kind '" + kind + "'");
    }
    table.points.push_back(std::move(p));
    std::vector<double> vals;
    for (std::size_t c : rep_cols) vals.push_back(parse_double((*row)[c], "realization value"));
    rows.push_back(std::move(vals));
  }
  table.provenance = Provenance::parse(csv.comments());
  const std::size_t n = table.points.size();
  table.values.resize(n * table.reps);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t r = 0; r < table.reps; ++r) table.values[r * n + p] = rows[p][r];
  return table;
}

/// Full symmetric matrix; row and column headers are point ids.
inline std::string write_resistance_csv(const PointSet& ps, const ResistanceMatrix& dmat, const Provenance& prov = {}) {
  std::string out = prov.header();
  out += "point_id";
  for (std::size_t j = 0; j < ps.size(); ++j) out += "," + point_label(j, ps.size());
  out += "\n";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    out += point_label(i, ps.size());
    for (std::size_t j = 0; j < ps.size(); ++j) {
      out += ",";
      out += format_double(dmat(i, j));
    }
    out += "\n";
  }
  return out;
}

inline std::string write_variogram_csv(const std::vector<LagTest>& tests, const Provenance& prov = {}) {
  std::string out = prov.header();
  out += "lag_center,count,mean,theory,t_stat\n";
  for (const auto& t : tests)
    out += format_double(t.lag_center) + "," + std::to_string(t.count) + "," + format_double(t.mean) + "," +
           format_double(t.theory) + "," + format_double(t.t_stat) + "\n";
  return out;
}

inline std::string write_normality_csv(const NormalityReport& report, const Provenance& prov = {}) {
  std::string out = prov.header();
  out += "alpha,proportion,band_lo,band_hi\n";
  for (const auto& r : report.rows)
    out += format_double(r.alpha) + "," + format_double(r.proportion) + "," + format_double(r.band.lo) + "," +
           format_double(r.band.hi) + "\n";
  return out;
}

}  // namespace resfield
