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

#ifndef CLDG_ADAM_HPP_
#define CLDG_ADAM_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cldg/error.hpp"
#include "cldg/matrix.hpp"

namespace cldg {

struct AdamConfig {
  double lr = 4e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Coupled L2: added to the gradient before the moment update.
  double weight_decay = 0.0;
};

template <Real T>
struct AdamState {
  AdamConfig config;
  std::vector<Matrix<T>> m;
  std::vector<Matrix<T>> v;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::span<Matrix<T>* const> params)
      : config(cfg) {
    for (const Matrix<T>* p : params) {
      m.emplace_back(p->rows(), p->cols());
      v.emplace_back(p->rows(), p->cols());
    }
  }
};

/// One Adam update with bias correction, in place.
template <Real T>
void adam_step(std::span<Matrix<T>* const> params,
               std::span<const Matrix<T>> grads, AdamState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) +
                     " params, " + std::to_string(grads.size()) + " grads, " +
                     std::to_string(state.m.size()) + " accumulators");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T bc1 = static_cast<T>(1.0 - std::pow(c.beta1, t));
  const T bc2 = static_cast<T>(1.0 - std::pow(c.beta2, t));
  const T b1 = static_cast<T>(c.beta1);
  const T b2 = static_cast<T>(c.beta2);
  const T lr = static_cast<T>(c.lr);
  const T eps = static_cast<T>(c.eps);
  const T wd = static_cast<T>(c.weight_decay);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix<T>& p = *params[k];
    const Matrix<T>& g = grads[k];
    if (p.rows() != g.rows() || p.cols() != g.cols() ||
        p.rows() != state.m[k].rows() || p.cols() != state.m[k].cols()) {
      throw ShapeError("adam_step: tensor " + std::to_string(k) + " param " +
                       p.shape() + " grad " + g.shape());
    }
    if (checked_mode() && !g.all_finite()) {
      throw NumericError("adam_step: non-finite gradient in tensor " +
                         std::to_string(k));
    }
    Matrix<T>& m = state.m[k];
    Matrix<T>& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const T gi = g[i] + wd * p[i];
      m[i] = b1 * m[i] + (T{1} - b1) * gi;
      v[i] = b2 * v[i] + (T{1} - b2) * gi * gi;
      const T mhat = m[i] / bc1;
      const T vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace cldg

#endif  // CLDG_ADAM_HPP_
