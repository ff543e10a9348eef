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

// End-to-end gradient check on a fixed 12-node, two-view graph: analytic
// gradients of the contrastive loss against central finite differences.

#ifndef CLDG_GRADCHECK_HPP_
#define CLDG_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cldg/graph.hpp"
#include "cldg/loss.hpp"
#include "cldg/model.hpp"
#include "cldg/rng.hpp"
#include "cldg/sampler.hpp"
#include "cldg/trainer.hpp"

namespace cldg {

/// |a - b| / max(|a|, |b|, floor).
inline double relative_error(double analytic, double numeric,
                             double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central difference of f at x along every entry of `m` (modified in place
/// and restored).
template <Real T>
Matrix<T> numeric_gradient(Matrix<T>& m, const std::function<double()>& f,
                           double h = 1e-5) {
  Matrix<T> g(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const T orig = m[i];
    m[i] = static_cast<T>(orig + h);
    const double up = f();
    m[i] = static_cast<T>(orig - h);
    const double down = f();
    m[i] = orig;
    g[i] = static_cast<T>((up - down) / (2.0 * h));
  }
  return g;
}

/// Largest relative_error over all entries.
template <Real T>
double max_relative_error(const Matrix<T>& analytic, const Matrix<T>& numeric,
                          double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(static_cast<double>(analytic[i]),
                                           static_cast<double>(numeric[i]), floor));
  }
  return worst;
}

/// 12 nodes on a ring, each ring edge present in both halves of [0, 20],
/// plus seeded chords that differ between the halves.
inline TemporalGraph gradcheck_graph(std::uint64_t seed, std::size_t d_in = 6) {
  constexpr std::size_t n = 12;
  Rng rng(derive_seed(seed, Stream::kSynth, 12));
  std::vector<TemporalEdge> edges;
  for (std::size_t half = 0; half < 2; ++half) {
    const double base = half == 0 ? 0.0 : 10.5;
    for (std::size_t i = 0; i < n; ++i) {
      edges.push_back({i, (i + 1) % n, base + rng.uniform(0.0, 9.5)});
    }
    for (std::size_t c = 0; c < 6; ++c) {
      std::size_t u = rng.below(n);
      std::size_t v = rng.below(n);
      edges.push_back({u, v, base + rng.uniform(0.0, 9.5)});
    }
  }
  std::vector<NodeId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  auto x = synthesize_features(ids, edges,
                               {FeaturePolicy::kSeededRandom, d_in, seed});
  for (double& v : x.values()) v *= 3.0;
  return TemporalGraph::create(std::move(ids), std::move(edges), std::move(x));
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<std::string> lines;  // one per level and tensor
};

/// Checks both contrast levels and every parameter tensor.
inline GradCheckReport run_gradcheck(std::uint64_t seed,
                                     ReduceOp readout = ReduceOp::kMean,
                                     double h = 1e-5) {
  const TemporalGraph g = gradcheck_graph(seed);
  std::vector<SampledView> views = {slice(g, TimeInterval{0.0, 10.0}),
                                    slice(g, TimeInterval{10.5, 20.0})};
  auto batch = shared_nodes(views);
  ModelOptions opts;
  opts.readout = readout;
  ModelParams<double> p = ModelParams<double>::glorot({6, 8, 5}, seed);
  // Nonzero biases so their gradients are exercised away from the origin.
  Rng rng(derive_seed(seed, Stream::kInit, 99));
  for (double& v : p.proj_b1.values()) v = rng.uniform(-0.5, 0.5);
  for (double& v : p.proj_b2.values()) v = rng.uniform(-0.5, 0.5);

  GradCheckReport rep;
  for (ContrastLevel level : {ContrastLevel::kNode, ContrastLevel::kGraph}) {
    LossConfig lc{level, 0.5};
    auto analytic = loss_and_gradients<double>(views, batch, p, lc, opts);
    auto loss_fn = [&] {
      return loss_and_gradients<double>(views, batch, p, lc, opts).loss;
    };
    auto pt = p.tensors();
    auto gt = analytic.grads.tensors();
    for (std::size_t k = 0; k < pt.size(); ++k) {
      auto numeric = numeric_gradient(*pt[k], loss_fn, h);
      const double err = max_relative_error(*gt[k], numeric);
      rep.max_rel_error = std::max(rep.max_rel_error, err);
      rep.lines.push_back(std::string(to_string(level)) + " " +
                          std::string(ModelParams<double>::kNames[k]) +
                          " max_rel_err=" + std::to_string(err));
    }
  }
  return rep;
}

}  // namespace cldg

#endif  // CLDG_GRADCHECK_HPP_
