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

#ifndef CLDG_LOSS_HPP_
#define CLDG_LOSS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cldg/error.hpp"
#include "cldg/kernels.hpp"
#include "cldg/matrix.hpp"
#include "cldg/model.hpp"

namespace cldg {

/// node: same node across views is the positive pair.
/// graph: node in one view vs. its neighborhood in another.
enum class ContrastLevel { kNode, kGraph };

inline ContrastLevel parse_level(std::string_view name) {
  if (name == "node") return ContrastLevel::kNode;
  if (name == "graph") return ContrastLevel::kGraph;
  throw ConfigError("unknown contrast level '" + std::string(name) + "'");
}

inline std::string_view to_string(ContrastLevel l) {
  return l == ContrastLevel::kNode ? "node" : "graph";
}

struct LossConfig {
  ContrastLevel level = ContrastLevel::kNode;
  double temperature = 0.5;

  void validate() const {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  }
};

template <Real T>
struct InfoNceResult {
  T loss = 0;
  Matrix<T> dq;
  Matrix<T> dk;
};

/// mean_i -log softmax_j(q_i . k_j / tau)[i], with gradients w.r.t. q and k.
/// The denominator runs over all j including the positive.
template <Real T>
InfoNceResult<T> infonce(const Matrix<T>& q, const Matrix<T>& k, T tau) {
  if (q.rows() == 0) throw DataError("infonce: empty batch");
  if (!(tau > T{0})) throw ConfigError("infonce: temperature must be > 0");
  if (q.rows() != k.rows() || q.cols() != k.cols()) {
    throw ShapeError("infonce: q " + q.shape() + " vs k " + k.shape());
  }
  const std::size_t n = q.rows();
  Matrix<T> logits = scale(matmul_nt(q, k), T{1} / tau);
  // Row softmax, max-subtracted; logits becomes d loss / d logits.
  T total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = logits.row(i);
    const T mx = *std::max_element(row.begin(), row.end());
    T sum = 0;
    for (T v : row) sum += std::exp(v - mx);
    const T log_z = mx + std::log(sum);
    total += log_z - row[i];
    for (T& v : row) v = std::exp(v - log_z);
    row[i] -= T{1};
  }
  const T inv_n = T{1} / static_cast<T>(n);
  Matrix<T> g = scale(logits, inv_n / tau);
  InfoNceResult<T> r;
  r.loss = total * inv_n;
  r.dq = matmul(g, k);
  r.dk = matmul_tn(g, q);
  return r;
}

template <Real T>
struct MultiViewLoss {
  T loss = 0;
  std::vector<Matrix<T>> d_node;   // per view, dL/d node_z
  std::vector<Matrix<T>> d_neigh;  // per view, dL/d neigh_z
};

/// Average of infonce over all ordered view pairs (q, k), q != k.
/// node level contrasts node_z[q] with node_z[k]; graph level contrasts
/// node_z[q] with neigh_z[k].
template <Real T>
MultiViewLoss<T> multi_view_loss(std::span<const ViewEmbeddings<T>> views,
                                 const LossConfig& cfg) {
  cfg.validate();
  if (views.size() < 2) throw DataError("multi_view_loss needs >= 2 views");
  const auto& ref = views[0];
  for (const auto& v : views) {
    if (v.nodes != ref.nodes || v.node_z.rows() != ref.node_z.rows() ||
        v.node_z.cols() != ref.node_z.cols() ||
        v.neigh_z.rows() != ref.neigh_z.rows() ||
        v.neigh_z.cols() != ref.neigh_z.cols()) {
      throw DataError("multi_view_loss: view embeddings are not row-aligned");
    }
  }
  const std::size_t nv = views.size();
  const T tau = static_cast<T>(cfg.temperature);
  const T w = T{1} / static_cast<T>(nv * (nv - 1));
  MultiViewLoss<T> out;
  for (const auto& v : views) {
    out.d_node.emplace_back(v.node_z.rows(), v.node_z.cols());
    out.d_neigh.emplace_back(v.neigh_z.rows(), v.neigh_z.cols());
  }
  for (std::size_t a = 0; a < nv; ++a) {
    for (std::size_t b = 0; b < nv; ++b) {
      if (a == b) continue;
      const bool node = cfg.level == ContrastLevel::kNode;
      const Matrix<T>& key = node ? views[b].node_z : views[b].neigh_z;
      auto r = infonce(views[a].node_z, key, tau);
      out.loss += w * r.loss;
      out.d_node[a] += scale(r.dq, w);
      (node ? out.d_node[b] : out.d_neigh[b]) += scale(r.dk, w);
    }
  }
  return out;
}

}  // namespace cldg

#endif  // CLDG_LOSS_HPP_
