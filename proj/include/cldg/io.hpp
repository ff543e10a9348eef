// Copyright 2026 The CLDG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Text formats:
//   edges     src,dst,timestamp
//   features  node_id,f1,...,fd      (also used for embedding tables)
//   labels    node_id,label          (integer or string labels)
// Blank lines and lines starting with '#' are ignored.

#ifndef CLDG_IO_HPP_
#define CLDG_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cldg/error.hpp"
#include "cldg/graph.hpp"
#include "cldg/matrix.hpp"

namespace cldg {

namespace io {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_uint(std::string_view s, NodeId& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

/// Shortest decimal that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

/// Calls fn(line_number, fields) for every data line.
template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    fn(line_no, split_csv(sv));
  }
}

[[noreturn]] inline void malformed(const std::filesystem::path& path,
                                   std::size_t line_no, const std::string& why) {
  throw DataError(path.string() + ":" + std::to_string(line_no) +
                  ": malformed line (" + why + ")");
}

struct RawEdge {
  NodeId src;
  NodeId dst;
  double timestamp;
};

inline std::vector<RawEdge> read_edges(const std::filesystem::path& path) {
  std::vector<RawEdge> edges;
  for_each_record(path, [&](std::size_t ln, const auto& f) {
    if (f.size() != 3) malformed(path, ln, "expected src,dst,timestamp");
    RawEdge e{};
    if (!parse_uint(f[0], e.src)) malformed(path, ln, "bad src id");
    if (!parse_uint(f[1], e.dst)) malformed(path, ln, "bad dst id");
    if (!parse_double(f[2], e.timestamp)) malformed(path, ln, "bad timestamp");
    if (!std::isfinite(e.timestamp)) {
      throw DataError(path.string() + ":" + std::to_string(ln) +
                      ": non-finite timestamp");
    }
    edges.push_back(e);
  });
  if (edges.empty()) throw DataError(path.string() + ": no edges");
  return edges;
}

/// Rows of a node_id,v1,...,vd table, in file order.
struct NodeTable {
  std::vector<NodeId> ids;
  std::vector<std::vector<double>> rows;
  std::size_t dim = 0;
};

inline NodeTable read_node_table(const std::filesystem::path& path) {
  NodeTable t;
  std::set<NodeId> seen;
  for_each_record(path, [&](std::size_t ln, const auto& f) {
    if (f.size() < 2) malformed(path, ln, "expected node_id,v1,...");
    NodeId id;
    if (!parse_uint(f[0], id)) malformed(path, ln, "bad node id");
    if (!seen.insert(id).second) {
      throw DataError(path.string() + ":" + std::to_string(ln) +
                      ": duplicate node id " + std::to_string(id));
    }
    std::vector<double> row(f.size() - 1);
    for (std::size_t j = 1; j < f.size(); ++j) {
      if (!parse_double(f[j], row[j - 1]) || !std::isfinite(row[j - 1])) {
        malformed(path, ln, "bad value in column " + std::to_string(j + 1));
      }
    }
    if (t.ids.empty()) {
      t.dim = row.size();
    } else if (row.size() != t.dim) {
      throw DataError(path.string() + ":" + std::to_string(ln) +
                      ": dimension " + std::to_string(row.size()) +
                      " differs from " + std::to_string(t.dim));
    }
    t.ids.push_back(id);
    t.rows.push_back(std::move(row));
  });
  if (t.ids.empty()) throw DataError(path.string() + ": no rows");
  return t;
}

/// Labels keyed by external id. If every label is a non-negative integer the
/// classes are the distinct integers in ascending order; otherwise strings
/// are interned by first occurrence.
struct LabelTable {
  std::vector<NodeId> ids;
  std::vector<int> class_of;
  std::vector<std::string> names;
};

inline LabelTable read_labels(const std::filesystem::path& path) {
  std::vector<NodeId> ids;
  std::vector<std::string> raw;
  std::set<NodeId> seen;
  for_each_record(path, [&](std::size_t ln, const auto& f) {
    if (f.size() != 2) malformed(path, ln, "expected node_id,label");
    NodeId id;
    if (!parse_uint(f[0], id)) malformed(path, ln, "bad node id");
    if (f[1].empty()) malformed(path, ln, "empty label");
    if (!seen.insert(id).second) {
      throw DataError(path.string() + ":" + std::to_string(ln) +
                      ": duplicate node id " + std::to_string(id));
    }
    ids.push_back(id);
    raw.emplace_back(f[1]);
  });
  if (ids.empty()) throw DataError(path.string() + ": no labels");

  LabelTable t;
  t.ids = std::move(ids);
  bool numeric = std::all_of(raw.begin(), raw.end(), [](const std::string& s) {
    NodeId v;
    return parse_uint(s, v);
  });
  if (numeric) {
    std::map<NodeId, int> order;
    for (const auto& s : raw) {
      NodeId v;
      parse_uint(s, v);
      order.emplace(v, 0);
    }
    int next = 0;
    for (auto& [v, c] : order) {
      c = next++;
      t.names.push_back(std::to_string(v));
    }
    for (const auto& s : raw) {
      NodeId v;
      parse_uint(s, v);
      t.class_of.push_back(order.at(v));
    }
  } else {
    std::unordered_map<std::string, int> interned;
    for (const auto& s : raw) {
      auto [it, inserted] =
          interned.emplace(s, static_cast<int>(t.names.size()));
      if (inserted) t.names.push_back(s);
      t.class_of.push_back(it->second);
    }
  }
  return t;
}

}  // namespace io

/// Loads a temporal graph. Without a features file, features are synthesized
/// with `synth` from the full edge list.
inline TemporalGraph load_temporal_graph(
    const std::filesystem::path& edges_path,
    const std::optional<std::filesystem::path>& features_path = std::nullopt,
    const std::optional<std::filesystem::path>& labels_path = std::nullopt,
    const FeatureSynthesis& synth = {}) {
  auto raw = io::read_edges(edges_path);
  std::optional<io::NodeTable> feats;
  if (features_path) feats = io::read_node_table(*features_path);
  std::optional<io::LabelTable> labs;
  if (labels_path) labs = io::read_labels(*labels_path);

  std::vector<NodeId> ids;
  ids.reserve(raw.size() * 2);
  for (const auto& e : raw) {
    ids.push_back(e.src);
    ids.push_back(e.dst);
  }
  if (feats) ids.insert(ids.end(), feats->ids.begin(), feats->ids.end());
  if (labs) ids.insert(ids.end(), labs->ids.begin(), labs->ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  auto index = [&](NodeId id) {
    return static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  std::vector<TemporalEdge> edges;
  edges.reserve(raw.size());
  for (const auto& e : raw) {
    edges.push_back({index(e.src), index(e.dst), e.timestamp});
  }

  Matrix<double> x;
  if (feats) {
    if (feats->ids.size() != ids.size()) {
      throw DataError("features file covers " +
                      std::to_string(feats->ids.size()) + " of " +
                      std::to_string(ids.size()) + " nodes");
    }
    x = Matrix<double>(ids.size(), feats->dim);
    for (std::size_t r = 0; r < feats->ids.size(); ++r) {
      std::copy(feats->rows[r].begin(), feats->rows[r].end(),
                x.row(index(feats->ids[r])).begin());
    }
  } else {
    x = synthesize_features(ids, edges, synth);
  }

  std::optional<NodeLabels> labels;
  if (labs) {
    NodeLabels l;
    l.class_of.assign(ids.size(), -1);
    l.names = labs->names;
    for (std::size_t r = 0; r < labs->ids.size(); ++r) {
      l.class_of[index(labs->ids[r])] = labs->class_of[r];
    }
    labels = std::move(l);
  }
  return TemporalGraph::create(std::move(ids), std::move(edges), std::move(x),
                               std::move(labels));
}

/// Writes text to `path` via a temporary file and rename.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_edges(const TemporalGraph& g) {
  std::ostringstream os;
  for (const auto& e : g.edges()) {
    os << g.node_id(e.src) << ',' << g.node_id(e.dst) << ','
       << io::format_double(e.timestamp) << '\n';
  }
  return os.str();
}

inline std::string format_labels(const TemporalGraph& g) {
  std::ostringstream os;
  const auto& l = g.labels();
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    if (l.class_of[i] < 0) continue;
    os << g.node_id(i) << ',' << l.names[l.class_of[i]] << '\n';
  }
  return os.str();
}

/// node_id,v1,...,vd for each row; rows are in dense node order.
template <Real T>
std::string format_node_table(std::span<const NodeId> ids, const Matrix<T>& m) {
  if (ids.size() != m.rows()) {
    throw ShapeError("format_node_table: " + std::to_string(ids.size()) +
                     " ids for " + m.shape());
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << ids[i];
    for (T v : m.row(i)) os << ',' << io::format_double(static_cast<double>(v));
    os << '\n';
  }
  return os.str();
}

}  // namespace cldg

#endif  // CLDG_IO_HPP_
