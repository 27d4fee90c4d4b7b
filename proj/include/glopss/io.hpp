#pragma once

// Text formats:
//   edge list   "i j weight" per line, 0-based, '#' starts a comment; an
//               optional "# nodes <m>" comment fixes the node count.
//   matrix CSV  one row per line, comma separated (signals: node x sample).
//   mask JSON   {"nodes": m, "observed": [...], "hidden": [...], "seed": s}
//   history CSV iter,r_p,r_d,r_scalar,objective,kkt,m_step,rho,time_ms
//   config      flat "key = value" lines, '#' comments.

#include "glopss/graph.hpp"
#include "glopss/solver.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace glopss {

/// Raised for unreadable/unwritable files (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for files that open but do not parse (CLI exit code 2).
class ParseError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Shortest round-trippable decimal form of a double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::ifstream open_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

inline std::ofstream open_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t pos = 0;
    const double v = std::stod(t, &pos);
    if (pos != t.size()) throw ParseError("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("cannot parse number '" + t + "' in " + context);
  }
}

// ---- edge lists ----

inline void write_edge_list(std::ostream& out, const Matrix& W) {
  out << "# nodes " << W.rows() << "\n";
  for (Index i = 0; i < W.rows(); ++i)
    for (Index j = i + 1; j < W.cols(); ++j)
      if (W(i, j) != 0.0) out << i << ' ' << j << ' ' << format_double(W(i, j)) << '\n';
}

inline void write_edge_list(const std::filesystem::path& path, const Matrix& W) {
  auto out = open_write(path);
  write_edge_list(out, W);
}

inline Graph read_edge_list(std::istream& in, Index nodes = 0) {
  struct Edge {
    Index i, j;
    double w;
  };
  std::vector<Edge> edges;
  Index declared = 0, max_index = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      std::istringstream comment(line.substr(hash + 1));
      std::string key;
      Index value = 0;
      if (comment >> key >> value && key == "nodes") declared = value;
      line = line.substr(0, hash);
    }
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    long long i = 0, j = 0;
    std::string wtok;
    if (!(ls >> i >> j >> wtok)) throw ParseError("edge list line " + std::to_string(lineno) + ": expected 'i j weight'");
    std::string extra;
    if (ls >> extra) throw ParseError("edge list line " + std::to_string(lineno) + ": trailing tokens");
    if (i < 0 || j < 0) throw ParseError("edge list line " + std::to_string(lineno) + ": negative node index");
    if (i == j) throw ParseError("edge list line " + std::to_string(lineno) + ": self-loops are not supported");
    const double w = parse_double(wtok, "edge list line " + std::to_string(lineno));
    if (!(w >= 0.0) || !std::isfinite(w)) throw ParseError("edge list line " + std::to_string(lineno) + ": bad weight");
    edges.push_back({static_cast<Index>(i), static_cast<Index>(j), w});
    max_index = std::max<Index>(max_index, std::max<Index>(static_cast<Index>(i), static_cast<Index>(j)));
  }
  Index m = nodes > 0 ? nodes : (declared > 0 ? declared : max_index + 1);
  if (m <= 0) throw ParseError("edge list has no nodes");
  if (max_index >= m) throw ParseError("edge list references node " + std::to_string(max_index) + " beyond node count");
  Graph g(m);
  for (const Edge& e : edges) g.set_edge(e.i, e.j, e.w);
  return g;
}

inline Graph read_edge_list(const std::filesystem::path& path, Index nodes = 0) {
  auto in = open_read(path);
  return read_edge_list(in, nodes);
}

// ---- matrices ----

inline void write_matrix_csv(std::ostream& out, const Matrix& M) {
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& M) {
  auto out = open_write(path);
  write_matrix_csv(out, M);
}

inline Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell, "CSV line " + std::to_string(lineno)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("CSV line " + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("CSV is empty");
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return M;
}

inline Matrix read_matrix_csv(const std::filesystem::path& path) {
  auto in = open_read(path);
  return read_matrix_csv(in);
}

// ---- masks ----

inline nlohmann::ordered_json mask_to_json(const ObservationMask& mask, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["nodes"] = mask.nodes();
  j["observed"] = mask.observed();
  j["hidden"] = mask.hidden();
  j["seed"] = seed;
  return j;
}

inline ObservationMask mask_from_json(const nlohmann::json& j) {
  try {
    const Index m = j.at("nodes").get<Index>();
    const auto hidden = j.at("hidden").get<std::vector<Index>>();
    ObservationMask mask(m, hidden);
    if (j.contains("observed") && j.at("observed").get<std::vector<Index>>() != mask.observed())
      throw ParseError("mask: observed list is not the complement of hidden");
    return mask;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("mask JSON: ") + e.what());
  }
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  auto in = open_read(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  auto out = open_write(path);
  out << j.dump(2) << '\n';
}

// ---- convergence history ----

inline void write_history_csv(std::ostream& out, const ConvergenceHistory& history, bool with_timing = true) {
  out << "iter,r_p,r_d,r_scalar,objective,kkt,m_step,rho,time_ms\n";
  for (const auto& r : history) {
    out << r.iter << ',' << format_double(r.r_primal) << ',' << format_double(r.r_dual) << ','
        << format_double(r.r_scalar) << ',' << format_double(r.objective) << ',' << format_double(r.kkt) << ','
        << format_double(r.m_step) << ',' << format_double(r.rho) << ','
        << format_double(with_timing ? r.time_ms : 0.0) << '\n';
  }
}

inline void write_history_csv(const std::filesystem::path& path, const ConvergenceHistory& history,
                              bool with_timing = true) {
  auto out = open_write(path);
  write_history_csv(out, history, with_timing);
}

// ---- flat key-value config ----

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_key_values(const std::filesystem::path& path) {
  auto in = open_read(path);
  return parse_key_values(in);
}

}  // namespace glopss
