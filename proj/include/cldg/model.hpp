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

// Forward model applied to every sampled view with one shared set of
// parameters:
//
//   H   = A relu(A X W1) W2                 two-layer GCN, A = D^-1/2 (A+I) D^-1/2
//   h_N = readout{ H_j : j in N(i) }        mean / max / sum over 1-hop neighbors
//   z   = l2norm(lrelu(h P1 + b1) P2 + b2)  projection head, applied to H_i and h_N
//
// Each stage keeps the activations its backward pass needs.

#ifndef CLDG_MODEL_HPP_
#define CLDG_MODEL_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cldg/error.hpp"
#include "cldg/graph.hpp"
#include "cldg/kernels.hpp"
#include "cldg/matrix.hpp"
#include "cldg/rng.hpp"

namespace cldg {

// ------------------------------------------------------------- adjacency

/// Symmetrically normalized adjacency with self-loops over a view's active
/// nodes, in CSR form. Rows are sorted by column.
struct NormalizedAdjacency {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col;
  std::vector<double> val;
  std::vector<double> degree;  // self-loop-augmented degree

  std::size_t nnz() const { return col.size(); }

  /// 1-hop neighbors of local row i, self excluded.
  std::vector<std::size_t> neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      if (col[k] != i) out.push_back(col[k]);
    }
    return out;
  }

  Matrix<double> dense() const {
    Matrix<double> m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        m(i, col[k]) = val[k];
      }
    }
    return m;
  }
};

/// Builds the normalized adjacency of a view. Edges are symmetrized and
/// deduplicated; edges from a node to itself are dropped in favor of the
/// added self-loop. With fanout_cap > 0, a node with more neighbors keeps a
/// random subset of fanout_cap of them, and an edge survives if either
/// endpoint kept it.
inline NormalizedAdjacency normalize_adjacency(const SampledView& view,
                                               std::size_t fanout_cap = 0,
                                               Rng* rng = nullptr) {
  if (view.num_active() == 0) {
    throw DataError("normalize_adjacency: view has no active nodes");
  }
  const std::size_t n = view.num_active();
  std::vector<std::vector<std::size_t>> nbr(n);
  for (std::size_t k = 0; k < view.num_edges(); ++k) {
    const auto& e = view.edge(k);
    const std::size_t u = view.local_index(e.src);
    const std::size_t v = view.local_index(e.dst);
    if (u == v) continue;
    nbr[u].push_back(v);
    nbr[v].push_back(u);
  }
  for (auto& list : nbr) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  if (fanout_cap > 0) {
    if (rng == nullptr) throw ConfigError("fanout cap requires an rng");
    std::vector<std::vector<std::size_t>> kept(n);
    for (std::size_t i = 0; i < n; ++i) {
      kept[i] = nbr[i].size() > fanout_cap ? rng->sample(nbr[i], fanout_cap)
                                           : nbr[i];
    }
    std::vector<std::vector<std::size_t>> sym(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j : kept[i]) {
        sym[i].push_back(j);
        sym[j].push_back(i);
      }
    }
    for (auto& list : sym) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    nbr = std::move(sym);
  }

  NormalizedAdjacency a;
  a.n = n;
  a.degree.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    a.degree[i] = static_cast<double>(nbr[i].size() + 1);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto it = std::lower_bound(nbr[i].begin(), nbr[i].end(), i);
    nbr[i].insert(it, i);
    for (std::size_t j : nbr[i]) {
      a.col.push_back(j);
      a.val.push_back(j == i ? 1.0 / a.degree[i]
                             : 1.0 / std::sqrt(a.degree[i] * a.degree[j]));
    }
    a.row_ptr.push_back(a.col.size());
  }
  return a;
}

/// Y = A X. A is symmetric, so this is also its own adjoint.
template <Real T>
Matrix<T> spmm(const NormalizedAdjacency& a, const Matrix<T>& x) {
  if (x.rows() != a.n) {
    throw ShapeError("spmm: adjacency [" + std::to_string(a.n) + "x" +
                     std::to_string(a.n) + "] * " + x.shape());
  }
  Matrix<T> y(a.n, x.cols());
  const std::size_t d = x.cols();
  parallel_rows(a.n, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i) {
      T* yi = y.data() + i * d;
      for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
        const T w = static_cast<T>(a.val[k]);
        const T* xj = x.data() + a.col[k] * d;
        for (std::size_t c = 0; c < d; ++c) yi[c] += w * xj[c];
      }
    }
  });
  return y;
}

// ------------------------------------------------------------ parameters

struct ModelDims {
  std::size_t d_in = 0;
  std::size_t d_hidden = 128;
  std::size_t d_out = 64;

  /// d_in*d_hidden + d_hidden*d_out + 2*(d_out^2 + d_out).
  std::size_t parameter_count() const {
    return d_in * d_hidden + d_hidden * d_out + 2 * (d_out * d_out + d_out);
  }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// All trainable tensors: GCN weights and the projection head.
template <Real T>
struct ModelParams {
  Matrix<T> gcn_w1;   // d_in x d_hidden
  Matrix<T> gcn_w2;   // d_hidden x d_out
  Matrix<T> proj_w1;  // d_out x d_out
  Matrix<T> proj_b1;  // 1 x d_out
  Matrix<T> proj_w2;  // d_out x d_out
  Matrix<T> proj_b2;  // 1 x d_out

  static constexpr std::size_t kTensorCount = 6;
  static constexpr std::array<std::string_view, kTensorCount> kNames = {
      "gcn_w1", "gcn_w2", "proj_w1", "proj_b1", "proj_w2", "proj_b2"};

  static ModelParams zeros(const ModelDims& d) {
    return {Matrix<T>(d.d_in, d.d_hidden), Matrix<T>(d.d_hidden, d.d_out),
            Matrix<T>(d.d_out, d.d_out),   Matrix<T>(1, d.d_out),
            Matrix<T>(d.d_out, d.d_out),   Matrix<T>(1, d.d_out)};
  }

  /// Glorot-uniform weights, zero biases.
  static ModelParams glorot(const ModelDims& d, std::uint64_t seed) {
    if (d.d_in == 0 || d.d_hidden == 0 || d.d_out == 0) {
      throw ConfigError("model dimensions must be positive");
    }
    ModelParams p = zeros(d);
    auto init = [&](Matrix<T>& w, std::uint64_t k) {
      Rng rng(derive_seed(seed, Stream::kInit, k));
      const double limit =
          std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (T& v : w.values()) v = static_cast<T>(rng.uniform(-limit, limit));
    };
    init(p.gcn_w1, 0);
    init(p.gcn_w2, 1);
    init(p.proj_w1, 2);
    init(p.proj_w2, 3);
    return p;
  }

  ModelDims dims() const {
    return {gcn_w1.rows(), gcn_w1.cols(), gcn_w2.cols()};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Matrix<T>* t : tensors()) n += t->size();
    return n;
  }

  std::array<Matrix<T>*, kTensorCount> tensors() {
    return {&gcn_w1, &gcn_w2, &proj_w1, &proj_b1, &proj_w2, &proj_b2};
  }
  std::array<const Matrix<T>*, kTensorCount> tensors() const {
    return {&gcn_w1, &gcn_w2, &proj_w1, &proj_b1, &proj_w2, &proj_b2};
  }

  ModelParams& operator+=(const ModelParams& o) {
    auto a = tensors();
    auto b = o.tensors();
    for (std::size_t k = 0; k < kTensorCount; ++k) *a[k] += *b[k];
    return *this;
  }

  void validate() const {
    const ModelDims d = dims();
    if (gcn_w2.rows() != d.d_hidden || proj_w1.rows() != d.d_out ||
        proj_w1.cols() != d.d_out || proj_b1.rows() != 1 ||
        proj_b1.cols() != d.d_out || proj_w2.rows() != d.d_out ||
        proj_w2.cols() != d.d_out || proj_b2.rows() != 1 ||
        proj_b2.cols() != d.d_out) {
      throw ShapeError("inconsistent model parameter shapes");
    }
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// --------------------------------------------------------------- encoder

enum class Activation { kRelu, kLinear };

/// Activations saved by encode().
template <Real T>
struct EncodeCache {
  Matrix<T> ax;   // A X
  Matrix<T> z1;   // A X W1
  Matrix<T> a1;   // act(z1)
  Matrix<T> aa1;  // A act(z1)
  Matrix<T> h;    // A act(z1) W2
};

/// Two-layer GCN over the rows of `x` (the view's active nodes).
template <Real T>
EncodeCache<T> encode(const NormalizedAdjacency& adj, const Matrix<T>& x,
                      const ModelParams<T>& p,
                      Activation act = Activation::kRelu) {
  if (x.cols() != p.gcn_w1.rows()) {
    throw ShapeError("encode: features " + x.shape() + " vs gcn_w1 " +
                     p.gcn_w1.shape());
  }
  EncodeCache<T> c;
  c.ax = spmm(adj, x);
  c.z1 = matmul(c.ax, p.gcn_w1);
  c.a1 = act == Activation::kRelu ? relu(c.z1) : c.z1;
  c.aa1 = spmm(adj, c.a1);
  c.h = matmul(c.aa1, p.gcn_w2);
  return c;
}

/// Accumulates dL/dW1 and dL/dW2 into `grads`.
template <Real T>
void encode_backward(const NormalizedAdjacency& adj, const EncodeCache<T>& c,
                     const Matrix<T>& dh, const ModelParams<T>& p,
                     ModelParams<T>& grads,
                     Activation act = Activation::kRelu) {
  auto g2 = matmul_backward(c.aa1, p.gcn_w2, dh);
  grads.gcn_w2 += g2.db;
  Matrix<T> da1 = spmm(adj, g2.da);
  Matrix<T> dz1 = act == Activation::kRelu ? relu_backward(c.z1, da1) : da1;
  grads.gcn_w1 += matmul_tn(c.ax, dz1);
}

// --------------------------------------------------------------- readout

inline ReduceOp parse_readout(std::string_view name) {
  if (name == "mean") return ReduceOp::kMean;
  if (name == "max") return ReduceOp::kMax;
  if (name == "sum") return ReduceOp::kSum;
  throw ConfigError("unknown readout '" + std::string(name) + "'");
}

inline std::string_view to_string(ReduceOp op) {
  switch (op) {
    case ReduceOp::kMean: return "mean";
    case ReduceOp::kMax: return "max";
    case ReduceOp::kSum: return "sum";
  }
  return "?";
}

template <Real T>
struct ReadoutCache {
  Segments segments;
  SegmentReduced<T> reduced;
  ReduceOp op = ReduceOp::kMean;
  std::size_t input_rows = 0;
};

/// Neighborhood representation of each batch row (local indices). A node
/// with no neighbors in the view falls back to its own row.
template <Real T>
ReadoutCache<T> readout(const NormalizedAdjacency& adj, const Matrix<T>& h,
                        std::span<const std::size_t> batch_local, ReduceOp op) {
  ReadoutCache<T> c;
  c.op = op;
  c.input_rows = h.rows();
  for (std::size_t i : batch_local) {
    if (i >= adj.n) {
      throw DataError("readout: batch row " + std::to_string(i) +
                      " not active in view");
    }
    auto nb = adj.neighbors(i);
    if (nb.empty()) nb.push_back(i);
    c.segments.push(nb);
  }
  c.reduced = segment_reduce(h, c.segments, op);
  return c;
}

template <Real T>
Matrix<T> readout_backward(const ReadoutCache<T>& c, const Matrix<T>& dout) {
  return segment_reduce_backward(c.reduced, c.segments, c.op, dout,
                                 c.input_rows);
}

// ------------------------------------------------------- projection head

template <Real T>
struct ProjectCache {
  Matrix<T> x;
  Matrix<T> y1;  // x P1 + b1
  Matrix<T> a1;  // lrelu(y1)
  RowNormalized<T> z;
};

template <Real T>
ProjectCache<T> project(const Matrix<T>& x, const ModelParams<T>& p) {
  if (x.cols() != p.proj_w1.rows()) {
    throw ShapeError("project: input " + x.shape() + " vs proj_w1 " +
                     p.proj_w1.shape());
  }
  ProjectCache<T> c;
  c.x = x;
  c.y1 = add_bias(matmul(x, p.proj_w1), p.proj_b1);
  c.a1 = leaky_relu(c.y1);
  c.z = row_l2_normalize(add_bias(matmul(c.a1, p.proj_w2), p.proj_b2));
  return c;
}

/// Accumulates projection-head gradients; returns dL/dx.
template <Real T>
Matrix<T> project_backward(const ProjectCache<T>& c, const Matrix<T>& dz,
                           const ModelParams<T>& p, ModelParams<T>& grads) {
  Matrix<T> dy2 = row_l2_normalize_backward(c.z, dz);
  grads.proj_b2 += add_bias_backward(dy2);
  auto g2 = matmul_backward(c.a1, p.proj_w2, dy2);
  grads.proj_w2 += g2.db;
  Matrix<T> dy1 = leaky_relu_backward(c.y1, g2.da);
  grads.proj_b1 += add_bias_backward(dy1);
  auto g1 = matmul_backward(c.x, p.proj_w1, dy1);
  grads.proj_w1 += g1.db;
  return std::move(g1.da);
}

// ------------------------------------------------------------ full model

struct ModelOptions {
  ReduceOp readout = ReduceOp::kMean;
  Activation activation = Activation::kRelu;
  std::size_t fanout_cap = 0;
};

/// Projected embeddings of one view. Row r refers to nodes[r] in every view.
template <Real T>
struct ViewEmbeddings {
  Matrix<T> node_z;
  Matrix<T> neigh_z;
  std::vector<std::size_t> nodes;
};

/// Forward and backward pass of the model on one view for a fixed batch.
template <Real T>
class ViewPass {
 public:
  ViewPass(const SampledView& view, std::span<const std::size_t> batch,
           const ModelOptions& opts = {}, Rng* fanout_rng = nullptr)
      : opts_(opts),
        adj_(normalize_adjacency(view, opts.fanout_cap, fanout_rng)),
        x_(view.template features<T>()),
        batch_(batch.begin(), batch.end()) {
    for (std::size_t node : batch_) {
      if (!view.is_active(node)) {
        throw DataError("batch node " +
                        std::to_string(view.graph().node_id(node)) +
                        " is not active in view");
      }
      local_.push_back(view.local_index(node));
    }
  }

  const NormalizedAdjacency& adjacency() const { return adj_; }
  const EncodeCache<T>& encoded() const { return enc_; }

  ViewEmbeddings<T> forward(const ModelParams<T>& p) {
    enc_ = encode(adj_, x_, p, opts_.activation);
    node_ = project(enc_.h.gather_rows(local_), p);
    ro_ = readout(adj_, enc_.h, local_, opts_.readout);
    neigh_ = project(ro_.reduced.out, p);
    return {node_.z.out, neigh_.z.out, batch_};
  }

  /// Accumulates parameter gradients given dL/d node_z and dL/d neigh_z.
  void backward(const Matrix<T>& d_node_z, const Matrix<T>& d_neigh_z,
                const ModelParams<T>& p, ModelParams<T>& grads) const {
    Matrix<T> dh(enc_.h.rows(), enc_.h.cols());
    Matrix<T> d_node_h = project_backward(node_, d_node_z, p, grads);
    for (std::size_t r = 0; r < local_.size(); ++r) {
      auto src = d_node_h.row(r);
      auto dst = dh.row(local_[r]);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
    Matrix<T> d_neigh_h = project_backward(neigh_, d_neigh_z, p, grads);
    dh += readout_backward(ro_, d_neigh_h);
    encode_backward(adj_, enc_, dh, p, grads, opts_.activation);
  }

 private:
  ModelOptions opts_;
  NormalizedAdjacency adj_;
  Matrix<T> x_;
  std::vector<std::size_t> batch_;
  std::vector<std::size_t> local_;
  EncodeCache<T> enc_;
  ProjectCache<T> node_;
  ReadoutCache<T> ro_;
  ProjectCache<T> neigh_;
};

/// Embeds a batch (dense node indices) in every view with shared params.
template <Real T>
std::vector<ViewEmbeddings<T>> embed_views(std::span<const SampledView> views,
                                           std::span<const std::size_t> batch,
                                           const ModelParams<T>& p,
                                           const ModelOptions& opts = {}) {
  std::vector<ViewEmbeddings<T>> out;
  for (const auto& v : views) {
    ViewPass<T> pass(v, batch, opts);
    out.push_back(pass.forward(p));
  }
  return out;
}

}  // namespace cldg

#endif  // CLDG_MODEL_HPP_
