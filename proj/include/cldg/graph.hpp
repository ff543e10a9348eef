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

#ifndef CLDG_GRAPH_HPP_
#define CLDG_GRAPH_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cldg/error.hpp"
#include "cldg/matrix.hpp"
#include "cldg/rng.hpp"

namespace cldg {

/// External node identifier as it appears in input files.
using NodeId = std::uint64_t;

/// An edge between two dense node indices. Direction is kept in storage;
/// the encoder treats it as undirected.
struct TemporalEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double timestamp = 0.0;

  friend bool operator==(const TemporalEdge&, const TemporalEdge&) = default;
};

/// Per-node class ids (-1 = unlabeled) plus the display name of each class.
struct NodeLabels {
  std::vector<int> class_of;
  std::vector<std::string> names;

  std::size_t num_classes() const { return names.size(); }
  friend bool operator==(const NodeLabels&, const NodeLabels&) = default;
};

/// Closed time interval [lo, hi].
struct TimeInterval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double t) const { return lo <= t && t <= hi; }
};

/// Immutable continuous-time dynamic graph.
///
/// Nodes are dense indices 0..n-1 ordered by ascending external id. Edges
/// keep their input order. t_min/t_max are cached over edge timestamps.
class TemporalGraph {
 public:
  /// Validates and builds a graph. `bounds` overrides the time bounds and is
  /// only needed for graphs without edges (empty snapshots).
  static TemporalGraph create(std::vector<NodeId> node_ids,
                              std::vector<TemporalEdge> edges,
                              Matrix<double> features,
                              std::optional<NodeLabels> labels = std::nullopt,
                              std::optional<TimeInterval> bounds = std::nullopt) {
    TemporalGraph g;
    const std::size_t n = node_ids.size();
    if (!std::is_sorted(node_ids.begin(), node_ids.end()) ||
        std::adjacent_find(node_ids.begin(), node_ids.end()) != node_ids.end()) {
      throw DataError("node ids must be strictly ascending");
    }
    if (edges.empty() && !bounds) throw DataError("no edges");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& e : edges) {
      if (e.src >= n || e.dst >= n) {
        throw DataError("edge endpoint outside node table");
      }
      if (!std::isfinite(e.timestamp)) {
        throw DataError("non-finite timestamp");
      }
      lo = std::min(lo, e.timestamp);
      hi = std::max(hi, e.timestamp);
    }
    if (bounds) {
      if (!std::isfinite(bounds->lo) || !std::isfinite(bounds->hi) ||
          bounds->lo > bounds->hi) {
        throw DataError("invalid time bounds");
      }
      lo = bounds->lo;
      hi = bounds->hi;
    }
    if (features.rows() != n) {
      throw DataError("feature matrix has " + std::to_string(features.rows()) +
                      " rows for " + std::to_string(n) + " nodes");
    }
    if (labels) {
      if (labels->class_of.size() != n) {
        throw DataError("label vector size does not match node count");
      }
      for (int c : labels->class_of) {
        if (c < -1 || c >= static_cast<int>(labels->num_classes())) {
          throw DataError("label class id out of range");
        }
      }
    }
    g.node_ids_ = std::move(node_ids);
    g.edges_ = std::move(edges);
    g.features_ = std::move(features);
    g.labels_ = std::move(labels);
    g.t_min_ = lo;
    g.t_max_ = hi;
    g.time_order_.resize(g.edges_.size());
    std::iota(g.time_order_.begin(), g.time_order_.end(), std::size_t{0});
    std::stable_sort(g.time_order_.begin(), g.time_order_.end(),
                     [&](std::size_t a, std::size_t b) {
                       return g.edges_[a].timestamp < g.edges_[b].timestamp;
                     });
    return g;
  }

  std::size_t num_nodes() const { return node_ids_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::span<const NodeId> node_ids() const { return node_ids_; }
  NodeId node_id(std::size_t index) const { return node_ids_[index]; }
  std::optional<std::size_t> index_of(NodeId id) const {
    auto it = std::lower_bound(node_ids_.begin(), node_ids_.end(), id);
    if (it == node_ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - node_ids_.begin());
  }

  std::span<const TemporalEdge> edges() const { return edges_; }
  /// Edge indices sorted by timestamp (stable).
  std::span<const std::size_t> time_order() const { return time_order_; }

  const Matrix<double>& features() const { return features_; }
  std::size_t feature_dim() const { return features_.cols(); }

  bool has_labels() const { return labels_.has_value(); }
  const NodeLabels& labels() const {
    if (!labels_) throw DataError("graph has no labels");
    return *labels_;
  }

  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  /// Overall timespan t_max - t_min.
  double timespan() const { return t_max_ - t_min_; }

  /// Same nodes, features and labels with a different edge list.
  TemporalGraph with_edges(std::vector<TemporalEdge> edges,
                           std::optional<TimeInterval> bounds) const {
    return create(node_ids_, std::move(edges), features_, labels_, bounds);
  }

  TemporalGraph with_labels(std::optional<NodeLabels> labels) const {
    return create(node_ids_, edges_, features_, std::move(labels),
                  TimeInterval{t_min_, t_max_});
  }

  TemporalGraph with_features(Matrix<double> features) const {
    return create(node_ids_, edges_, std::move(features), labels_,
                  TimeInterval{t_min_, t_max_});
  }

  friend bool operator==(const TemporalGraph& a, const TemporalGraph& b) {
    return a.node_ids_ == b.node_ids_ && a.edges_ == b.edges_ &&
           a.features_ == b.features_ && a.labels_ == b.labels_ &&
           a.t_min_ == b.t_min_ && a.t_max_ == b.t_max_;
  }

 private:
  TemporalGraph() = default;

  std::vector<NodeId> node_ids_;
  std::vector<TemporalEdge> edges_;
  std::vector<std::size_t> time_order_;
  Matrix<double> features_;
  std::optional<NodeLabels> labels_;
  double t_min_ = 0.0;
  double t_max_ = 0.0;
};

/// Subgraph of a TemporalGraph restricted to a time interval. Holds a
/// pointer to its graph, which must outlive the view.
class SampledView {
 public:
  static constexpr std::size_t kInactive = static_cast<std::size_t>(-1);

  /// All edges of `graph`. With include_isolated, every node is active even
  /// without incident edges.
  static SampledView whole(const TemporalGraph& graph,
                           bool include_isolated = false) {
    std::vector<std::size_t> idx(graph.num_edges());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return SampledView(graph, {graph.t_min(), graph.t_max()}, std::move(idx),
                       include_isolated);
  }

  SampledView(const TemporalGraph& graph, TimeInterval window,
              std::vector<std::size_t> edge_indices,
              bool include_isolated = false)
      : graph_(&graph),
        window_(window),
        edge_indices_(std::move(edge_indices)),
        local_(graph.num_nodes(), kInactive) {
    std::vector<char> seen(graph.num_nodes(), include_isolated ? 1 : 0);
    for (std::size_t e : edge_indices_) {
      seen[graph.edges()[e].src] = 1;
      seen[graph.edges()[e].dst] = 1;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (seen[i]) {
        local_[i] = active_.size();
        active_.push_back(i);
      }
    }
  }

  const TemporalGraph& graph() const { return *graph_; }
  TimeInterval window() const { return window_; }
  bool is_empty() const { return edge_indices_.empty(); }
  std::size_t num_edges() const { return edge_indices_.size(); }
  std::span<const std::size_t> edge_indices() const { return edge_indices_; }
  const TemporalEdge& edge(std::size_t k) const {
    return graph_->edges()[edge_indices_[k]];
  }

  /// Active nodes (dense graph indices, ascending).
  std::span<const std::size_t> active_nodes() const { return active_; }
  std::size_t num_active() const { return active_.size(); }
  bool is_active(std::size_t node) const {
    return node < local_.size() && local_[node] != kInactive;
  }
  /// Row of `node` within this view, or kInactive.
  std::size_t local_index(std::size_t node) const { return local_[node]; }

  /// Feature rows of the active nodes, in active order.
  template <Real T = double>
  Matrix<T> features() const {
    return graph_->features().gather_rows(active_).template cast<T>();
  }

 private:
  const TemporalGraph* graph_;
  TimeInterval window_;
  std::vector<std::size_t> edge_indices_;
  std::vector<std::size_t> active_;
  std::vector<std::size_t> local_;
};

/// View retaining exactly the edges with lo <= t <= hi.
inline SampledView slice(const TemporalGraph& graph, TimeInterval window) {
  if (window.lo > window.hi) {
    throw DataError("slice: window lo > hi");
  }
  auto order = graph.time_order();
  auto ts = [&](std::size_t e) { return graph.edges()[e].timestamp; };
  auto first = std::lower_bound(order.begin(), order.end(), window.lo,
                                [&](std::size_t e, double t) { return ts(e) < t; });
  auto last = std::upper_bound(order.begin(), order.end(), window.hi,
                               [&](double t, std::size_t e) { return t < ts(e); });
  std::vector<std::size_t> picked(first, last);
  std::sort(picked.begin(), picked.end());
  return SampledView(graph, window, std::move(picked));
}

/// Discrete-time form of a graph: snapshots sharing one node table.
struct SnapshotSequence {
  std::vector<TemporalGraph> snapshots;
  // Partition intervals; all right-open except the last.
  std::vector<TimeInterval> intervals;

  std::size_t size() const { return snapshots.size(); }
};

/// Splits the timespan into s equal intervals [b_k, b_{k+1}), the last one
/// closed, and assigns each edge to exactly one snapshot.
inline SnapshotSequence to_snapshots(const TemporalGraph& graph, std::size_t s) {
  if (s == 0) throw ConfigError("to_snapshots: s must be >= 1");
  if (!(graph.timespan() > 0.0)) throw DataError("degenerate timespan");
  std::vector<double> bounds(s + 1);
  for (std::size_t k = 0; k <= s; ++k) {
    bounds[k] = graph.t_min() + graph.timespan() * static_cast<double>(k) /
                                    static_cast<double>(s);
  }
  bounds[s] = graph.t_max();
  std::vector<std::vector<TemporalEdge>> parts(s);
  for (const auto& e : graph.edges()) {
    auto it = std::upper_bound(bounds.begin(), bounds.end(), e.timestamp);
    std::size_t k = static_cast<std::size_t>(it - bounds.begin());
    k = k == 0 ? 0 : k - 1;
    parts[std::min(k, s - 1)].push_back(e);
  }
  SnapshotSequence seq;
  for (std::size_t k = 0; k < s; ++k) {
    seq.intervals.push_back({bounds[k], bounds[k + 1]});
    TimeInterval b{bounds[k], bounds[k]};
    if (!parts[k].empty()) {
      auto [mn, mx] = std::minmax_element(
          parts[k].begin(), parts[k].end(),
          [](const auto& a, const auto& c) { return a.timestamp < c.timestamp; });
      b = {mn->timestamp, mx->timestamp};
    }
    seq.snapshots.push_back(graph.with_edges(std::move(parts[k]), b));
  }
  return seq;
}

// ------------------------------------------------------ feature synthesis

enum class FeaturePolicy { kDegreeBucket, kSeededRandom };

/// How to build node features when no features file is given.
struct FeatureSynthesis {
  FeaturePolicy policy = FeaturePolicy::kDegreeBucket;
  std::size_t dim = 32;
  std::uint64_t seed = 0;
};

/// degree-bucket: one-hot of min(dim-1, floor(log2(degree + 1))) over the
/// full graph. seeded-random: unit-norm Gaussian vector per node, seeded by
/// the external id so it does not depend on node ordering.
inline Matrix<double> synthesize_features(std::span<const NodeId> node_ids,
                                          std::span<const TemporalEdge> edges,
                                          const FeatureSynthesis& cfg) {
  if (cfg.dim == 0) throw ConfigError("feature dimension must be positive");
  const std::size_t n = node_ids.size();
  Matrix<double> x(n, cfg.dim);
  if (cfg.policy == FeaturePolicy::kDegreeBucket) {
    std::vector<std::size_t> degree(n, 0);
    for (const auto& e : edges) {
      ++degree[e.src];
      if (e.dst != e.src) ++degree[e.dst];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto bucket = static_cast<std::size_t>(
          std::floor(std::log2(static_cast<double>(degree[i]) + 1.0)));
      x(i, std::min(bucket, cfg.dim - 1)) = 1.0;
    }
    return x;
  }
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(cfg.seed, Stream::kFeatures, node_ids[i]));
    double ss = 0.0;
    for (double& v : x.row(i)) {
      v = rng.normal();
      ss += v * v;
    }
    const double norm = std::sqrt(ss);
    for (double& v : x.row(i)) v /= norm;
  }
  return x;
}

}  // namespace cldg

#endif  // CLDG_GRAPH_HPP_
