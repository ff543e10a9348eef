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

#ifndef CLDG_SYNTHETIC_HPP_
#define CLDG_SYNTHETIC_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cldg/error.hpp"
#include "cldg/graph.hpp"
#include "cldg/rng.hpp"

namespace cldg {

/// Temporal stochastic block model with time-invariant communities.
struct SyntheticConfig {
  std::size_t k = 4;  // communities
  std::size_t n = 400;
  double timespan = 20.0;
  // Relative weight of a single node pair inside / across communities.
  double p_in = 10.0;
  double p_out = 1.0;
  std::size_t events = 8000;
  std::uint64_t seed = 0;
  FeatureSynthesis features;

  void validate() const {
    if (k < 1) throw ConfigError("synthetic: k must be >= 1");
    if (n < 2 * k) throw ConfigError("synthetic: need n >= 2k");
    if (!(timespan > 0.0)) throw ConfigError("synthetic: T must be > 0");
    if (!(p_out >= 0.0) || !(p_in > p_out)) {
      throw ConfigError("synthetic: need p_in > p_out >= 0");
    }
    if (events < n) throw ConfigError("synthetic: need events >= n");
  }
};

/// Draws `events` timestamped edges. Each event picks a node pair with
/// probability proportional to p_in (same community) or p_out (different
/// communities), and a timestamp uniform on [0, T]. Nodes left without an
/// edge get one self-event. Labels are the community ids.
inline TemporalGraph generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, Stream::kSynth));

  std::vector<int> community(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    community[i] = static_cast<int>(i % cfg.k);
  }
  rng.shuffle(community);
  std::vector<std::vector<std::size_t>> members(cfg.k);
  for (std::size_t i = 0; i < cfg.n; ++i) members[community[i]].push_back(i);

  auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
  std::vector<double> intra_weight(cfg.k);
  double intra_pairs = 0.0;
  for (std::size_t c = 0; c < cfg.k; ++c) {
    intra_weight[c] = pairs(static_cast<double>(members[c].size()));
    intra_pairs += intra_weight[c];
  }
  const double inter_pairs = pairs(static_cast<double>(cfg.n)) - intra_pairs;
  const double p_intra =
      cfg.p_in * intra_pairs / (cfg.p_in * intra_pairs + cfg.p_out * inter_pairs);

  std::vector<TemporalEdge> edges;
  edges.reserve(cfg.events + cfg.n);
  std::vector<char> touched(cfg.n, 0);
  for (std::size_t e = 0; e < cfg.events; ++e) {
    std::size_t u = 0;
    std::size_t v = 0;
    if (rng.uniform() < p_intra) {
      double r = rng.uniform() * intra_pairs;
      std::size_t c = 0;
      while (c + 1 < cfg.k && r >= intra_weight[c]) r -= intra_weight[c++];
      const auto& m = members[c];
      u = m[rng.below(m.size())];
      do {
        v = m[rng.below(m.size())];
      } while (v == u);
    } else {
      do {
        u = rng.below(cfg.n);
        v = rng.below(cfg.n);
      } while (community[u] == community[v]);
    }
    touched[u] = touched[v] = 1;
    edges.push_back({u, v, rng.uniform(0.0, cfg.timespan)});
  }
  for (std::size_t i = 0; i < cfg.n; ++i) {
    if (!touched[i]) edges.push_back({i, i, rng.uniform(0.0, cfg.timespan)});
  }
  std::stable_sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    return a.timestamp < b.timestamp;
  });

  std::vector<NodeId> ids(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) ids[i] = i;
  NodeLabels labels;
  labels.class_of = community;
  for (std::size_t c = 0; c < cfg.k; ++c) labels.names.push_back(std::to_string(c));
  Matrix<double> x = synthesize_features(ids, edges, cfg.features);
  return TemporalGraph::create(std::move(ids), std::move(edges), std::move(x),
                               std::move(labels));
}

}  // namespace cldg

#endif  // CLDG_SYNTHETIC_HPP_
