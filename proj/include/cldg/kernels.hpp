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

// Dense forward/backward kernels. Every forward kernel has a matching
// *_backward that maps the gradient of the output to the gradient of the
// input(s), using activations saved by the caller.

#ifndef CLDG_KERNELS_HPP_
#define CLDG_KERNELS_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "cldg/error.hpp"
#include "cldg/matrix.hpp"

namespace cldg {

namespace detail {
inline std::atomic<int>& thread_count() {
  static std::atomic<int> n{1};
  return n;
}
}  // namespace detail

/// Caps kernel parallelism. Results do not depend on the setting because
/// work is split by output row.
inline void set_num_threads(int n) { detail::thread_count() = std::max(1, n); }
inline int num_threads() { return detail::thread_count(); }

/// Runs fn(begin, end) over contiguous row blocks.
template <typename Fn>
void parallel_rows(std::size_t rows, Fn&& fn) {
  const std::size_t threads = static_cast<std::size_t>(num_threads());
  if (threads <= 1 || rows < 64) {
    fn(std::size_t{0}, rows);
    return;
  }
  const std::size_t chunk = (rows + threads - 1) / threads;
  std::vector<std::jthread> pool;
  for (std::size_t b = 0; b < rows; b += chunk) {
    pool.emplace_back([&fn, b, e = std::min(rows, b + chunk)] { fn(b, e); });
  }
}

template <Real T>
void check_finite(const Matrix<T>& m, const char* what) {
  if (checked_mode() && !m.all_finite()) {
    throw NumericError(std::string("non-finite value in ") + what);
  }
}

// ---------------------------------------------------------------- matmul

/// C = A * B.
template <Real T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape() + " * " + b.shape());
  }
  check_finite(a, "matmul lhs");
  check_finite(b, "matmul rhs");
  Matrix<T> c(a.rows(), b.cols());
  const std::size_t k_dim = a.cols();
  const std::size_t n = b.cols();
  parallel_rows(a.rows(), [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i) {
      T* ci = c.data() + i * n;
      for (std::size_t k = 0; k < k_dim; ++k) {
        const T aik = a(i, k);
        if (aik == T{0}) continue;
        const T* bk = b.data() + k * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
      }
    }
  });
  return c;
}

/// C = A^T * B.
template <Real T>
Matrix<T> matmul_tn(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + a.shape() + "^T * " + b.shape());
  }
  Matrix<T> c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  parallel_rows(a.cols(), [&](std::size_t r0, std::size_t r1) {
    for (std::size_t k = 0; k < a.rows(); ++k) {
      const T* bk = b.data() + k * n;
      for (std::size_t i = r0; i < r1; ++i) {
        const T aki = a(k, i);
        if (aki == T{0}) continue;
        T* ci = c.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
      }
    }
  });
  return c;
}

/// C = A * B^T.
template <Real T>
Matrix<T> matmul_nt(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + a.shape() + " * " + b.shape() + "^T");
  }
  Matrix<T> c(a.rows(), b.rows());
  const std::size_t k_dim = a.cols();
  parallel_rows(a.rows(), [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i) {
      const T* ai = a.data() + i * k_dim;
      for (std::size_t j = 0; j < b.rows(); ++j) {
        const T* bj = b.data() + j * k_dim;
        T s = 0;
        for (std::size_t k = 0; k < k_dim; ++k) s += ai[k] * bj[k];
        c(i, j) = s;
      }
    }
  });
  return c;
}

template <Real T>
struct MatmulGrads {
  Matrix<T> da;
  Matrix<T> db;
};

template <Real T>
MatmulGrads<T> matmul_backward(const Matrix<T>& a, const Matrix<T>& b,
                               const Matrix<T>& dc) {
  if (dc.rows() != a.rows() || dc.cols() != b.cols()) {
    throw ShapeError("matmul_backward: grad " + dc.shape() + " for " +
                     a.shape() + " * " + b.shape());
  }
  return {matmul_nt(dc, b), matmul_tn(a, dc)};
}

// ------------------------------------------------------------------ bias

/// Y = X + 1 b, with b a 1 x cols row.
template <Real T>
Matrix<T> add_bias(const Matrix<T>& x, const Matrix<T>& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw ShapeError("add_bias: input " + x.shape() + " bias " + bias.shape());
  }
  check_finite(x, "add_bias input");
  Matrix<T> y = x;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += bias[j];
  }
  return y;
}

/// Gradient w.r.t. the bias; the input gradient is dy itself.
template <Real T>
Matrix<T> add_bias_backward(const Matrix<T>& dy) {
  Matrix<T> db(1, dy.cols());
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    for (std::size_t j = 0; j < dy.cols(); ++j) db[j] += dy(i, j);
  }
  return db;
}

// ----------------------------------------------------------- activations

template <Real T>
Matrix<T> relu(const Matrix<T>& x) {
  check_finite(x, "relu input");
  Matrix<T> y = x;
  for (auto& v : y.values()) v = v > T{0} ? v : T{0};
  return y;
}

template <Real T>
Matrix<T> relu_backward(const Matrix<T>& x, const Matrix<T>& dy) {
  if (x.rows() != dy.rows() || x.cols() != dy.cols()) {
    throw ShapeError("relu_backward: " + x.shape() + " vs " + dy.shape());
  }
  Matrix<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x[i] > T{0})) dx[i] = T{0};
  }
  return dx;
}

inline constexpr double kLeakySlope = 0.01;

template <Real T>
Matrix<T> leaky_relu(const Matrix<T>& x, T slope = T(kLeakySlope)) {
  check_finite(x, "leaky_relu input");
  Matrix<T> y = x;
  for (auto& v : y.values()) v = v > T{0} ? v : slope * v;
  return y;
}

template <Real T>
Matrix<T> leaky_relu_backward(const Matrix<T>& x, const Matrix<T>& dy,
                              T slope = T(kLeakySlope)) {
  if (x.rows() != dy.rows() || x.cols() != dy.cols()) {
    throw ShapeError("leaky_relu_backward: " + x.shape() + " vs " + dy.shape());
  }
  Matrix<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x[i] > T{0})) dx[i] *= slope;
  }
  return dx;
}

template <Real T>
Matrix<T> scale(const Matrix<T>& x, T s) {
  Matrix<T> y = x;
  for (auto& v : y.values()) v *= s;
  return y;
}

template <Real T>
Matrix<T> scale_backward(const Matrix<T>& dy, T s) {
  return scale(dy, s);
}

// --------------------------------------------------------- normalization

template <Real T>
struct RowNormalized {
  Matrix<T> out;
  std::vector<T> norms;  // L2 norm of each input row
};

/// y_i = x_i / ||x_i||. A zero row is an error naming the row.
template <Real T>
RowNormalized<T> row_l2_normalize(const Matrix<T>& x) {
  check_finite(x, "row_l2_normalize input");
  RowNormalized<T> r{x, std::vector<T>(x.rows())};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    T ss = 0;
    for (T v : x.row(i)) ss += v * v;
    const T norm = std::sqrt(ss);
    if (!(norm > T{0})) {
      throw NumericError("row_l2_normalize: row " + std::to_string(i) +
                         " has zero norm");
    }
    r.norms[i] = norm;
    for (T& v : r.out.row(i)) v /= norm;
  }
  return r;
}

/// dx_i = (dy_i - y_i (y_i . dy_i)) / ||x_i||.
template <Real T>
Matrix<T> row_l2_normalize_backward(const RowNormalized<T>& fwd,
                                    const Matrix<T>& dy) {
  const Matrix<T>& y = fwd.out;
  if (y.rows() != dy.rows() || y.cols() != dy.cols()) {
    throw ShapeError("row_l2_normalize_backward: " + y.shape() + " vs " +
                     dy.shape());
  }
  Matrix<T> dx(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    T dot = 0;
    for (std::size_t j = 0; j < y.cols(); ++j) dot += y(i, j) * dy(i, j);
    for (std::size_t j = 0; j < y.cols(); ++j) {
      dx(i, j) = (dy(i, j) - y(i, j) * dot) / fwd.norms[i];
    }
  }
  return dx;
}

// -------------------------------------------------------- segment reduce

enum class ReduceOp { kMean, kMax, kSum };

/// Segment s covers members[offsets[s] .. offsets[s+1]), each an input row.
struct Segments {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> members;

  std::size_t count() const { return offsets.size() - 1; }
  std::size_t length(std::size_t s) const {
    return offsets[s + 1] - offsets[s];
  }
  std::span<const std::size_t> segment(std::size_t s) const {
    return {members.data() + offsets[s], length(s)};
  }
  void push(std::span<const std::size_t> rows) {
    members.insert(members.end(), rows.begin(), rows.end());
    offsets.push_back(members.size());
  }
};

template <Real T>
struct SegmentReduced {
  Matrix<T> out;
  // For kMax: the input row that produced each output entry.
  std::vector<std::size_t> argmax;
};

template <Real T>
SegmentReduced<T> segment_reduce(const Matrix<T>& x, const Segments& seg,
                                 ReduceOp op) {
  check_finite(x, "segment_reduce input");
  const std::size_t d = x.cols();
  SegmentReduced<T> r{Matrix<T>(seg.count(), d), {}};
  if (op == ReduceOp::kMax) r.argmax.assign(seg.count() * d, 0);
  for (std::size_t s = 0; s < seg.count(); ++s) {
    auto rows = seg.segment(s);
    if (rows.empty()) {
      throw ShapeError("segment_reduce: segment " + std::to_string(s) +
                       " is empty");
    }
    for (std::size_t m : rows) {
      if (m >= x.rows()) {
        throw ShapeError("segment_reduce: member row " + std::to_string(m) +
                         " out of range for " + x.shape());
      }
    }
    auto out = r.out.row(s);
    if (op == ReduceOp::kMax) {
      for (std::size_t j = 0; j < d; ++j) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t arg = rows[0];
        for (std::size_t m : rows) {
          if (x(m, j) > best) {
            best = x(m, j);
            arg = m;
          }
        }
        out[j] = best;
        r.argmax[s * d + j] = arg;
      }
    } else {
      for (std::size_t m : rows) {
        auto xr = x.row(m);
        for (std::size_t j = 0; j < d; ++j) out[j] += xr[j];
      }
      if (op == ReduceOp::kMean) {
        const T inv = T{1} / static_cast<T>(rows.size());
        for (T& v : out) v *= inv;
      }
    }
  }
  return r;
}

template <Real T>
Matrix<T> segment_reduce_backward(const SegmentReduced<T>& fwd,
                                  const Segments& seg, ReduceOp op,
                                  const Matrix<T>& dout,
                                  std::size_t input_rows) {
  if (dout.rows() != seg.count() || dout.cols() != fwd.out.cols()) {
    throw ShapeError("segment_reduce_backward: grad " + dout.shape() +
                     " for " + fwd.out.shape());
  }
  const std::size_t d = dout.cols();
  Matrix<T> dx(input_rows, d);
  for (std::size_t s = 0; s < seg.count(); ++s) {
    auto g = dout.row(s);
    if (op == ReduceOp::kMax) {
      for (std::size_t j = 0; j < d; ++j) dx(fwd.argmax[s * d + j], j) += g[j];
      continue;
    }
    const T w = op == ReduceOp::kMean
                    ? T{1} / static_cast<T>(seg.length(s))
                    : T{1};
    for (std::size_t m : seg.segment(s)) {
      auto xr = dx.row(m);
      for (std::size_t j = 0; j < d; ++j) xr[j] += w * g[j];
    }
  }
  return dx;
}

}  // namespace cldg

#endif  // CLDG_KERNELS_HPP_
