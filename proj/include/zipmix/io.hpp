#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zipmix/model.hpp"

namespace zipmix {

// All floating-point output goes through this: 17 significant digits, so
// every value re-parses to the identical double.
inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct IngestResult {
  DataSet data;
  ExposureGrid grid;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, int line, int col) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("line " + std::to_string(line) + ", column " +
                     std::to_string(col) + ": cannot parse '" + s + "' as a number");
  return v;
}

inline std::int64_t parse_count(const std::string& s, int line, int col) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("line " + std::to_string(line) + ", column " +
                     std::to_string(col) + ": cannot parse '" + s + "' as a count");
  if (v < 0)
    throw NegativeCount("line " + std::to_string(line) + ", column " +
                        std::to_string(col) + ": negative count " + s);
  return v;
}

}  // namespace detail

// CSV layout: header "t,<site_1..site_J>", then one row per day with t_i
// followed by the J counts.
inline IngestResult ingest_counts_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("line 1: missing header row");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "t")
    throw ParseError("line 1: header must be 't,<site names...>'");
  const int J = static_cast<int>(header.size()) - 1;

  std::vector<double> t;
  std::vector<std::vector<std::int64_t>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) != J + 1)
      throw RaggedRows("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(J + 1) + " cells, got " +
                       std::to_string(cells.size()));
    t.push_back(detail::parse_double(cells[0], lineno, 1));
    std::vector<std::int64_t> row(J);
    for (int j = 0; j < J; ++j)
      row[static_cast<std::size_t>(j)] = detail::parse_count(cells[j + 1], lineno, j + 2);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows");

  IngestResult out;
  out.grid = ExposureGrid(t, J);
  CountMatrix n(out.grid.I, J);
  for (int i = 0; i < out.grid.I; ++i)
    for (int j = 0; j < J; ++j) n(i, j) = rows[i][j];
  out.data.n = std::move(n);
  return out;
}

inline IngestResult ingest_counts_json(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.contains("t") || !doc.contains("n"))
    throw ParseError("JSON dataset needs fields 't' and 'n'");
  std::vector<double> t = doc.at("t").get<std::vector<double>>();
  const auto& narr = doc.at("n");
  if (!narr.is_array() || narr.empty()) throw ParseError("'n' must be a nonempty array");
  const int I = static_cast<int>(narr.size());
  if (I != static_cast<int>(t.size()))
    throw RaggedRows("'n' has " + std::to_string(I) + " rows but 't' has " +
                     std::to_string(t.size()) + " entries");
  const int J = static_cast<int>(narr.at(0).size());
  CountMatrix n(I, J);
  for (int i = 0; i < I; ++i) {
    if (static_cast<int>(narr.at(i).size()) != J)
      throw RaggedRows("'n' row " + std::to_string(i) + " has " +
                       std::to_string(narr.at(i).size()) + " cells, expected " +
                       std::to_string(J));
    for (int j = 0; j < J; ++j) {
      const auto& cell = narr.at(i).at(j);
      if (!cell.is_number_integer() || cell.get<std::int64_t>() < 0)
        throw NegativeCount("'n' row " + std::to_string(i) + ", column " +
                            std::to_string(j) + ": counts must be nonnegative integers");
      n(i, j) = cell.get<std::int64_t>();
    }
  }
  IngestResult out;
  out.grid = ExposureGrid(t, J);
  out.data.n = std::move(n);
  // Optional latent arrays (emitted by the simulator).
  if (doc.contains("y")) out.data.y = doc.at("y").get<std::vector<std::uint8_t>>();
  if (doc.contains("m")) {
    CountMatrix m(I, J);
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < J; ++j) m(i, j) = doc.at("m").at(i).at(j).get<std::int64_t>();
    out.data.m = std::move(m);
  }
  if (doc.contains("z")) {
    BitMatrix z(I, J);
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < J; ++j)
        z(i, j) = doc.at("z").at(i).at(j).get<int>() ? 1 : 0;
    out.data.z = std::move(z);
  }
  out.data.check_consistent();
  return out;
}

inline IngestResult ingest_counts(const std::string& path, const std::string& format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  if (format == "csv") return ingest_counts_csv(in);
  if (format == "json") return ingest_counts_json(in);
  throw DomainError("format must be csv or json, got " + format);
}

inline void export_counts_csv(const CountMatrix& n, const ExposureGrid& g,
                              std::ostream& out) {
  out << "t";
  for (int j = 0; j < g.J; ++j) out << ",site_" << (j + 1);
  out << "\n";
  for (int i = 0; i < g.I; ++i) {
    out << fmt_double(g.t[i]);
    for (int j = 0; j < g.J; ++j) out << "," << n(i, j);
    out << "\n";
  }
}

inline nlohmann::json dataset_to_json(const DataSet& d, const ExposureGrid& g) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["t"] = g.t;
  const CountMatrix& n = d.n ? *d.n : d.mixture_counts();
  nlohmann::json narr = nlohmann::json::array();
  for (int i = 0; i < n.rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < n.cols; ++j) row.push_back(n(i, j));
    narr.push_back(std::move(row));
  }
  doc["n"] = std::move(narr);
  if (d.y) doc["y"] = *d.y;
  if (d.m) {
    nlohmann::json marr = nlohmann::json::array();
    for (int i = 0; i < d.m->rows; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < d.m->cols; ++j) row.push_back((*d.m)(i, j));
      marr.push_back(std::move(row));
    }
    doc["m"] = std::move(marr);
  }
  if (d.z) {
    nlohmann::json zarr = nlohmann::json::array();
    for (int i = 0; i < d.z->rows; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < d.z->cols; ++j) row.push_back(static_cast<int>((*d.z)(i, j)));
      zarr.push_back(std::move(row));
    }
    doc["z"] = std::move(zarr);
  }
  return doc;
}

// Two-column plot-ready CSV (theta grids, chains and the like).
inline void write_xy_csv(const std::string& path, const std::string& xname,
                         const std::string& yname, const std::vector<double>& xs,
                         const std::vector<double>& ys) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << xname << "," << yname << "\n";
  for (std::size_t k = 0; k < xs.size(); ++k)
    out << fmt_double(xs[k]) << "," << fmt_double(ys[k]) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace zipmix
