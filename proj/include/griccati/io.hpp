#pragma once

// JSON and CSV serialization.  Complex entries are written as [re, im] pairs;
// on input a bare number is accepted as a real entry.  All floating-point
// text goes through shortest-round-trip (JSON) or %.17g (CSV) formatting so
// that repeated runs produce byte-identical files.

#include "griccati/flow.hpp"
#include "griccati/grid.hpp"
#include "griccati/types.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace griccati {

using ordered_json = nlohmann::ordered_json;

inline std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---- JSON writers ------------------------------------------------------------

inline ordered_json complex_to_json(const Complex& z) {
  return ordered_json::array({z.real(), z.imag()});
}

inline ordered_json matrix_to_json(const CMatrix& a) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      row.push_back(complex_to_json(a(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ordered_json axes_to_json(const Axes& axes) {
  ordered_json out = ordered_json::array();
  for (const auto& ax : axes) out.push_back(ax);
  return out;
}

inline ordered_json trajectory_to_json(const Trajectory& t) {
  ordered_json j;
  j["nodes"] = t.nodes;
  ordered_json vals = ordered_json::array();
  for (const auto& v : t.values) vals.push_back(matrix_to_json(v));
  j["values"] = std::move(vals);
  return j;
}

inline ordered_json grid_to_json(const FieldOnGrid& g) {
  ordered_json j;
  j["axes"] = axes_to_json(g.axes());
  j["rows"] = g.rows();
  j["cols"] = g.cols();
  ordered_json vals = ordered_json::array();
  for (std::size_t lin = 0; lin < g.size(); ++lin)
    vals.push_back(matrix_to_json(g.flat(lin)));
  j["values"] = std::move(vals);
  if (!g.meta.empty()) {
    ordered_json m;
    for (const auto& [k, v] : g.meta) m[k] = v;
    j["meta"] = std::move(m);
  }
  return j;
}

inline ordered_json report_to_json(const ResidualReport& rep) {
  ordered_json j;
  ordered_json entries = ordered_json::array();
  for (const auto& [label, value] : rep.entries) {
    ordered_json item;
    item["label"] = label;
    item["value"] = value;
    entries.push_back(std::move(item));
  }
  j["entries"] = std::move(entries);
  j["max"] = rep.max_residual();
  if (!rep.meta.empty()) {
    ordered_json m;
    for (const auto& [k, v] : rep.meta) m[k] = v;
    j["meta"] = std::move(m);
  }
  return j;
}

// ---- JSON readers ------------------------------------------------------------

inline Complex complex_from_json(const ordered_json& j) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && (j.size() == 1 || j.size() == 2)) {
    if (!j[0].is_number() || (j.size() == 2 && !j[1].is_number()))
      throw ShapeError("complex entries must be numbers");
    const double re = j[0].get<double>();
    const double im = j.size() == 2 ? j[1].get<double>() : 0.0;
    return Complex(re, im);
  }
  throw ShapeError("expected a complex entry: number or [re, im]");
}

inline CMatrix matrix_from_json(const ordered_json& j) {
  if (!j.is_array() || j.empty())
    throw ShapeError("expected a matrix: non-empty array of rows");
  // A flat array of numbers/pairs is accepted as a single row.
  const bool nested = j[0].is_array() && !j[0].empty() &&
                      (j[0][0].is_array() || j[0][0].is_number());
  if (!nested) {
    CMatrix a(1, static_cast<Eigen::Index>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c)
      a(0, static_cast<Eigen::Index>(c)) = complex_from_json(j[c]);
    return a;
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  CMatrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ShapeError("matrix rows must have equal lengths");
    for (std::size_t c = 0; c < cols; ++c)
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          complex_from_json(j[r][c]);
  }
  return a;
}

// ---- CSV writers --------------------------------------------------------------

namespace detail {

inline void csv_matrix_header(std::ostream& os, Eigen::Index rows,
                              Eigen::Index cols) {
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      os << ",re_" << r << "_" << c << ",im_" << r << "_" << c;
}

inline void csv_matrix_row(std::ostream& os, const CMatrix& a) {
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      os << ',' << fmt_g17(a(r, c).real()) << ',' << fmt_g17(a(r, c).imag());
}

}  // namespace detail

inline void trajectory_to_csv(std::ostream& os, const Trajectory& t) {
  if (t.values.empty()) return;
  os << "x";
  detail::csv_matrix_header(os, t.values.front().rows(),
                            t.values.front().cols());
  os << '\n';
  for (std::size_t k = 0; k < t.nodes.size(); ++k) {
    os << fmt_g17(t.nodes[k]);
    detail::csv_matrix_row(os, t.values[k]);
    os << '\n';
  }
}

inline void grid_to_csv(std::ostream& os, const FieldOnGrid& g) {
  for (std::size_t a = 0; a < g.axes().size(); ++a) {
    if (a) os << ',';
    os << "x" << a;
  }
  detail::csv_matrix_header(os, g.rows(), g.cols());
  os << '\n';
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    const Coords z = g.coords_of(lin);
    for (std::size_t a = 0; a < z.size(); ++a) {
      if (a) os << ',';
      os << fmt_g17(z[a]);
    }
    detail::csv_matrix_row(os, g.flat(lin));
    os << '\n';
  }
}

inline void report_to_csv(std::ostream& os, const ResidualReport& rep) {
  os << "label,value\n";
  for (const auto& [label, value] : rep.entries)
    os << label << ',' << fmt_g17(value) << '\n';
}

// ---- file helpers --------------------------------------------------------------

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

}  // namespace griccati
