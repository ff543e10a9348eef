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

// Temporal translation invariance probe.
//
// Protocol: the graph is cut into s sequential timespans. For each timespan
// an independent supervised model (two-layer GCN, or an MLP that ignores
// edges, followed by a linear softmax head) is trained on the train-split
// nodes active in that timespan. Every model starts from the same seeded
// initialization. The agreement between timespans a and b is the fraction
// of test-split nodes active in both whose predicted labels coincide.

#ifndef CLDG_INVARIANCE_HPP_
#define CLDG_INVARIANCE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cldg/adam.hpp"
#include "cldg/error.hpp"
#include "cldg/graph.hpp"
#include "cldg/io.hpp"
#include "cldg/kernels.hpp"
#include "cldg/model.hpp"
#include "cldg/rng.hpp"
#include "cldg/split.hpp"

namespace cldg {

enum class ProbeEncoder { kGcn, kMlp };

inline ProbeEncoder parse_probe_encoder(std::string_view name) {
  if (name == "gcn") return ProbeEncoder::kGcn;
  if (name == "mlp") return ProbeEncoder::kMlp;
  throw ConfigError("unknown probe encoder '" + std::string(name) + "'");
}

struct InvarianceConfig {
  std::size_t timespans = 4;
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::size_t d_hidden = 128;
  std::size_t d_out = 64;
  std::size_t epochs = 200;
  double lr = 1e-2;
  double weight_decay = 5e-4;
  ProbeEncoder encoder = ProbeEncoder::kGcn;
  // Permute the labels independently per timespan before training.
  bool shuffle_labels = false;
};

struct InvarianceResult {
  // agreement(a, b); NaN where no test node is active in both timespans.
  Matrix<double> agreement;
  Matrix<double> shared_counts;
  // Per-timespan test accuracy against the true labels (NaN if undefined).
  std::vector<double> accuracy;
  std::vector<std::string> warnings;

  /// Mean over off-diagonal entries that are not missing.
  double mean_off_diagonal() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t a = 0; a < agreement.rows(); ++a) {
      for (std::size_t b = 0; b < agreement.cols(); ++b) {
        if (a != b && !std::isnan(agreement(a, b))) {
          sum += agreement(a, b);
          ++n;
        }
      }
    }
    return n ? sum / static_cast<double>(n)
             : std::numeric_limits<double>::quiet_NaN();
  }

  /// CSV matrix with an index header; missing entries are written as NA.
  std::string to_csv() const {
    std::ostringstream os;
    os << "timespan";
    for (std::size_t b = 0; b < agreement.cols(); ++b) os << ",t" << b + 1;
    os << '\n';
    for (std::size_t a = 0; a < agreement.rows(); ++a) {
      os << "t" << a + 1;
      for (std::size_t b = 0; b < agreement.cols(); ++b) {
        const double v = agreement(a, b);
        os << ',' << (std::isnan(v) ? std::string("NA") : io::format_double(v));
      }
      os << '\n';
    }
    return os.str();
  }
};

/// Adjacency with only self-loops, used by the MLP probe.
inline NormalizedAdjacency identity_adjacency(std::size_t n) {
  NormalizedAdjacency a;
  a.n = n;
  a.degree.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    a.col.push_back(i);
    a.val.push_back(1.0);
    a.row_ptr.push_back(a.col.size());
  }
  return a;
}

namespace detail {

struct SupervisedModel {
  ModelParams<double> encoder;
  Matrix<double> head_w;
  Matrix<double> head_b;
};

inline SupervisedModel init_supervised(std::size_t d_in, std::size_t classes,
                                       const InvarianceConfig& cfg) {
  SupervisedModel m;
  const std::uint64_t seed = derive_seed(cfg.seed, Stream::kProbe);
  m.encoder = ModelParams<double>::glorot({d_in, cfg.d_hidden, cfg.d_out}, seed);
  m.head_w = Matrix<double>(cfg.d_out, classes);
  Rng rng(derive_seed(seed, Stream::kInit, 100));
  const double limit =
      std::sqrt(6.0 / static_cast<double>(cfg.d_out + classes));
  for (double& v : m.head_w.values()) v = rng.uniform(-limit, limit);
  m.head_b = Matrix<double>(1, classes);
  return m;
}

}  // namespace detail

/// Trains one supervised model on `view` and returns predicted classes for
/// every active node (in active order).
inline std::vector<int> train_and_predict(const SampledView& view,
                                          const std::vector<int>& class_of,
                                          std::size_t num_classes,
                                          std::span<const std::size_t> train_nodes,
                                          const InvarianceConfig& cfg) {
  const auto adj = cfg.encoder == ProbeEncoder::kGcn
                       ? normalize_adjacency(view)
                       : identity_adjacency(view.num_active());
  const Matrix<double> x = view.features<double>();
  auto m = detail::init_supervised(x.cols(), num_classes, cfg);

  std::vector<std::size_t> rows;
  std::vector<int> y;
  for (std::size_t node : train_nodes) {
    if (view.is_active(node) && class_of[node] >= 0) {
      rows.push_back(view.local_index(node));
      y.push_back(class_of[node]);
    }
  }
  if (rows.empty()) throw DataError("no labeled train nodes in timespan");

  std::array<Matrix<double>*, 4> params = {&m.encoder.gcn_w1, &m.encoder.gcn_w2,
                                           &m.head_w, &m.head_b};
  AdamState<double> adam({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay},
                         std::span<Matrix<double>* const>(params));
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    auto enc = encode(adj, x, m.encoder);
    Matrix<double> h = enc.h.gather_rows(rows);
    Matrix<double> z = add_bias(matmul(h, m.head_w), m.head_b);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto r = z.row(i);
      const double mx = *std::max_element(r.begin(), r.end());
      double sum = 0.0;
      for (double v : r) sum += std::exp(v - mx);
      for (double& v : r) v = std::exp(v - mx) / sum * inv_n;
      r[y[i]] -= inv_n;
    }
    auto g_head = matmul_backward(h, m.head_w, z);
    Matrix<double> dh(enc.h.rows(), enc.h.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto src = g_head.da.row(i);
      auto dst = dh.row(rows[i]);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
    auto grads = ModelParams<double>::zeros(m.encoder.dims());
    encode_backward(adj, enc, dh, m.encoder, grads);
    std::array<Matrix<double>, 4> g = {std::move(grads.gcn_w1),
                                       std::move(grads.gcn_w2),
                                       std::move(g_head.db), add_bias_backward(z)};
    adam_step<double>(params, g, adam);
  }

  auto enc = encode(adj, x, m.encoder);
  Matrix<double> z = add_bias(matmul(enc.h, m.head_w), m.head_b);
  std::vector<int> pred(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto r = z.row(i);
    pred[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return pred;
}

/// Pairwise prediction agreement across sequential timespans.
inline InvarianceResult probe_invariance(const TemporalGraph& graph,
                                         const InvarianceConfig& cfg) {
  if (!graph.has_labels()) throw DataError("probe_invariance needs labels");
  const NodeLabels& labels = graph.labels();
  const auto split = make_split(labels, cfg.ratios, cfg.seed);
  const auto seq = to_snapshots(graph, cfg.timespans);
  const std::size_t s = seq.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  InvarianceResult res;
  res.warnings = split.warnings;
  res.accuracy.assign(s, nan);
  // Predicted class of each test node per timespan; -1 = not available.
  std::vector<std::vector<int>> pred(s, std::vector<int>(graph.num_nodes(), -1));
  for (std::size_t t = 0; t < s; ++t) {
    const TemporalGraph& snap = seq.snapshots[t];
    if (snap.num_edges() == 0) {
      res.warnings.push_back("timespan " + std::to_string(t + 1) +
                             " has no edges");
      continue;
    }
    auto view = SampledView::whole(snap);
    std::vector<int> class_of = labels.class_of;
    if (cfg.shuffle_labels) {
      std::vector<std::size_t> labeled;
      std::vector<int> values;
      for (std::size_t i = 0; i < class_of.size(); ++i) {
        if (class_of[i] >= 0) {
          labeled.push_back(i);
          values.push_back(class_of[i]);
        }
      }
      Rng rng(derive_seed(cfg.seed, Stream::kShuffle, t));
      rng.shuffle(values);
      for (std::size_t k = 0; k < labeled.size(); ++k) {
        class_of[labeled[k]] = values[k];
      }
    }
    std::vector<int> local_pred;
    try {
      local_pred = train_and_predict(view, class_of, labels.num_classes(),
                                     split.train, cfg);
    } catch (const DataError& e) {
      res.warnings.push_back("timespan " + std::to_string(t + 1) + ": " +
                             e.what());
      continue;
    }
    std::size_t seen = 0;
    std::size_t correct = 0;
    for (std::size_t node : split.test) {
      if (!view.is_active(node)) continue;
      pred[t][node] = local_pred[view.local_index(node)];
      ++seen;
      correct += pred[t][node] == labels.class_of[node];
    }
    if (seen) {
      res.accuracy[t] = static_cast<double>(correct) / static_cast<double>(seen);
    }
  }

  res.agreement = Matrix<double>(s, s, nan);
  res.shared_counts = Matrix<double>(s, s);
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = 0; b < s; ++b) {
      std::size_t both = 0;
      std::size_t same = 0;
      for (std::size_t node : split.test) {
        if (pred[a][node] < 0 || pred[b][node] < 0) continue;
        ++both;
        same += pred[a][node] == pred[b][node];
      }
      res.shared_counts(a, b) = static_cast<double>(both);
      if (both) {
        res.agreement(a, b) = static_cast<double>(same) / static_cast<double>(both);
      } else if (a < b) {
        res.warnings.push_back("timespans " + std::to_string(a + 1) + " and " +
                               std::to_string(b + 1) +
                               " share no labeled test nodes");
      }
    }
  }
  return res;
}

}  // namespace cldg

#endif  // CLDG_INVARIANCE_HPP_
