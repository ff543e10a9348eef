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

#ifndef CLDG_TRAINER_HPP_
#define CLDG_TRAINER_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cldg/adam.hpp"
#include "cldg/checkpoint.hpp"
#include "cldg/error.hpp"
#include "cldg/graph.hpp"
#include "cldg/io.hpp"
#include "cldg/loss.hpp"
#include "cldg/model.hpp"
#include "cldg/rng.hpp"
#include "cldg/sampler.hpp"

namespace cldg {

struct TrainConfig {
  SamplerConfig sampler;
  LossConfig loss;
  ModelDims dims;  // d_in = 0 means "take it from the graph"
  ModelOptions model;
  double lr = 4e-3;
  double weight_decay = 5e-4;
  std::size_t batch_size = 256;
  std::size_t epochs = 100;
  std::size_t batches_per_epoch = 1;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> checkpoint_path;
  std::size_t checkpoint_every = 0;  // 0 = only at the end

  void validate() const {
    sampler.validate();
    loss.validate();
    if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batches_per_epoch < 1) {
      throw ConfigError("batches_per_epoch must be >= 1");
    }
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  std::size_t shared = 0;
  std::vector<ViewWindow> windows;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  /// epoch,loss,shared,lo1,hi1,...,lov,hiv. Wall time is left out so the
  /// file is reproducible byte for byte.
  std::string to_csv() const {
    std::ostringstream os;
    os << "epoch,loss,shared";
    const std::size_t v = epochs.empty() ? 0 : epochs.front().windows.size();
    for (std::size_t i = 1; i <= v; ++i) os << ",lo" << i << ",hi" << i;
    os << '\n';
    for (const auto& r : epochs) {
      os << r.epoch << ',' << io::format_double(r.loss) << ',' << r.shared;
      for (const auto& w : r.windows) {
        os << ',' << io::format_double(w.lo) << ',' << io::format_double(w.hi);
      }
      os << '\n';
    }
    return os.str();
  }
};

/// Intersection of the views' active node sets (dense indices, ascending).
inline std::vector<std::size_t> shared_nodes(std::span<const SampledView> views) {
  if (views.empty()) return {};
  std::vector<std::size_t> acc(views[0].active_nodes().begin(),
                               views[0].active_nodes().end());
  for (std::size_t k = 1; k < views.size(); ++k) {
    std::vector<std::size_t> next;
    auto other = views[k].active_nodes();
    std::set_intersection(acc.begin(), acc.end(), other.begin(), other.end(),
                          std::back_inserter(next));
    acc = std::move(next);
  }
  return acc;
}

/// min(batch_size, |shared|) distinct nodes, uniform without replacement.
inline std::vector<std::size_t> make_minibatch(std::span<const std::size_t> shared,
                                               std::size_t batch_size, Rng& rng) {
  if (shared.empty()) {
    throw DataError(
        "no shared nodes across sampled views; try a smaller s or another "
        "sampling strategy");
  }
  return rng.sample(std::vector<std::size_t>(shared.begin(), shared.end()),
                    batch_size);
}

template <Real T>
struct TrainResult {
  ModelParams<T> params;
  TrainLog log;
};

inline std::string describe_windows(std::span<const ViewWindow> windows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    os << (i ? ", " : "") << "[" << windows[i].lo << ", " << windows[i].hi << "]";
  }
  return os.str();
}

/// Loss and parameter gradients for one minibatch over fixed views.
template <Real T>
struct StepResult {
  T loss = 0;
  ModelParams<T> grads;
};

template <Real T>
StepResult<T> loss_and_gradients(std::span<const SampledView> views,
                                 std::span<const std::size_t> batch,
                                 const ModelParams<T>& params,
                                 const LossConfig& loss_cfg,
                                 const ModelOptions& opts = {},
                                 std::span<Rng> fanout_rngs = {}) {
  std::vector<ViewPass<T>> passes;
  std::vector<ViewEmbeddings<T>> emb;
  passes.reserve(views.size());
  for (std::size_t k = 0; k < views.size(); ++k) {
    Rng* rng = k < fanout_rngs.size() ? &fanout_rngs[k] : nullptr;
    passes.emplace_back(views[k], batch, opts, rng);
    emb.push_back(passes.back().forward(params));
  }
  auto mv = multi_view_loss<T>(emb, loss_cfg);
  StepResult<T> r{mv.loss, ModelParams<T>::zeros(params.dims())};
  for (std::size_t k = 0; k < passes.size(); ++k) {
    passes[k].backward(mv.d_node[k], mv.d_neigh[k], params, r.grads);
  }
  return r;
}

/// Contrastive training loop. `on_epoch` is called after every epoch.
template <Real T>
TrainResult<T> train(const TemporalGraph& graph, const TrainConfig& cfg_in,
                     const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  TrainConfig cfg = cfg_in;
  if (cfg.dims.d_in == 0) cfg.dims.d_in = graph.feature_dim();
  if (cfg.dims.d_in != graph.feature_dim()) {
    throw ConfigError("d_in " + std::to_string(cfg.dims.d_in) +
                      " does not match feature dimension " +
                      std::to_string(graph.feature_dim()));
  }
  cfg.validate();
  if (!(graph.timespan() > 0.0)) throw DataError("degenerate timespan");

  TrainResult<T> out{ModelParams<T>::glorot(cfg.dims, cfg.seed), {}};
  AdamConfig adam_cfg{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  auto tensors = out.params.tensors();
  AdamState<T> adam(adam_cfg, std::span<Matrix<T>* const>(tensors));

  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto start = std::chrono::steady_clock::now();
    auto sv = sample_views(graph, cfg.sampler, e);
    auto shared = shared_nodes(sv.views);
    Rng batch_rng(derive_seed(cfg.seed, Stream::kMinibatch, e));
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < cfg.batches_per_epoch; ++b) {
      auto batch = make_minibatch(shared, cfg.batch_size, batch_rng);
      std::vector<Rng> fanout;
      if (cfg.model.fanout_cap > 0) {
        for (std::size_t k = 0; k < sv.views.size(); ++k) {
          fanout.emplace_back(derive_seed(cfg.seed, Stream::kFanout,
                                          e * cfg.batches_per_epoch + b, k));
        }
      }
      StepResult<T> step;
      try {
        step = loss_and_gradients<T>(sv.views, batch, out.params, cfg.loss,
                                     cfg.model, fanout);
      } catch (const NumericError& err) {
        throw NumericError(std::string(err.what()) + " at epoch " +
                           std::to_string(e + 1) + " with windows " +
                           describe_windows(sv.windows));
      }
      if (!std::isfinite(static_cast<double>(step.loss))) {
        throw NumericError("non-finite loss at epoch " + std::to_string(e + 1) +
                           " with windows " + describe_windows(sv.windows));
      }
      epoch_loss += static_cast<double>(step.loss);
      auto g = step.grads.tensors();
      std::vector<Matrix<T>> grads;
      for (const Matrix<T>* t : g) grads.push_back(*t);
      adam_step<T>(tensors, grads, adam);
    }
    EpochRecord rec;
    rec.epoch = e + 1;
    rec.loss = epoch_loss / static_cast<double>(cfg.batches_per_epoch);
    rec.shared = shared.size();
    rec.windows = sv.windows;
    rec.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    out.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (cfg.checkpoint_path && cfg.checkpoint_every > 0 &&
        (e + 1) % cfg.checkpoint_every == 0) {
      save_checkpoint(*cfg.checkpoint_path, out.params);
    }
  }
  if (cfg.checkpoint_path) save_checkpoint(*cfg.checkpoint_path, out.params);
  return out;
}

/// Encoder output (pre-projection) for every node, using the whole timespan
/// as one view. Nodes without edges see only their self-loop.
template <Real T>
Matrix<T> embed_all(const TemporalGraph& graph, const ModelParams<T>& params,
                    Activation act = Activation::kRelu) {
  auto view = SampledView::whole(graph, /*include_isolated=*/true);
  auto adj = normalize_adjacency(view);
  return encode(adj, view.features<T>(), params, act).h;
}

}  // namespace cldg

#endif  // CLDG_TRAINER_HPP_
