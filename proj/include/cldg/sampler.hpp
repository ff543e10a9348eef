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

// Timespan view sampling.
//
// Every window has length dt/s where dt = t_max - t_min, and is centered at
// a sampled time c with c in [t_min + dt/2s, t_max - dt/2s]. The strategies
// differ only in how the v centers relate to each other:
//
//   sequential    v distinct slots of the s-way partition (v <= s)
//   high overlap  c_{i+1} = c_i + dt/4s     (adjacent windows share 75%)
//   low overlap   c_{i+1} = c_i + 3dt/4s    (adjacent windows share 25%)
//   random        independent uniform centers

#ifndef CLDG_SAMPLER_HPP_
#define CLDG_SAMPLER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cldg/error.hpp"
#include "cldg/graph.hpp"
#include "cldg/rng.hpp"

namespace cldg {

enum class Strategy { kSequential, kHighOverlap, kLowOverlap, kRandom };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kSequential: return "sequential";
    case Strategy::kHighOverlap: return "high";
    case Strategy::kLowOverlap: return "low";
    case Strategy::kRandom: return "random";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view name) {
  if (name == "sequential") return Strategy::kSequential;
  if (name == "high" || name == "high_overlap") return Strategy::kHighOverlap;
  if (name == "low" || name == "low_overlap") return Strategy::kLowOverlap;
  if (name == "random") return Strategy::kRandom;
  throw ConfigError("unknown sampling strategy '" + std::string(name) + "'");
}

struct SamplerConfig {
  Strategy strategy = Strategy::kSequential;
  std::size_t s = 4;  // window length is timespan / s
  std::size_t v = 2;  // views per epoch
  std::uint64_t seed = 0;

  void validate() const {
    if (s < 1) throw ConfigError("s must be >= 1");
    if (v < 2) throw ConfigError("v must be >= 2");
    if (strategy == Strategy::kSequential && v > s) {
      throw ConfigError("sequential strategy requires v <= s (v=" +
                        std::to_string(v) + ", s=" + std::to_string(s) + ")");
    }
  }
};

struct ViewWindow {
  double center = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  Strategy strategy = Strategy::kSequential;
  std::uint64_t epoch = 0;

  TimeInterval interval() const { return {lo, hi}; }
  double length() const { return hi - lo; }
};

/// Intersection length of two windows (0 when disjoint).
inline double overlap_length(const ViewWindow& a, const ViewWindow& b) {
  return std::max(0.0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
}

namespace detail {

// Power of two at least as large as the spacing of doubles near |t|.
inline double time_quantum(double t_min, double t_max) {
  const double mag = std::max({std::abs(t_min), std::abs(t_max), 1e-300});
  int exp = 0;
  std::frexp(mag, &exp);
  return std::ldexp(1.0, exp - 52);
}

}  // namespace detail

/// Window of length dt/s around `center`. The lower edge is snapped to the
/// time quantum of the graph so that hi - lo is the exact length whenever
/// dt/s is representable on that grid.
inline ViewWindow make_window(double center, double t_min, double t_max,
                              std::size_t s, Strategy strategy = Strategy::kRandom,
                              std::uint64_t epoch = 0) {
  const double dt = t_max - t_min;
  const double len = dt / static_cast<double>(s);
  const double q = detail::time_quantum(t_min, t_max);
  double lo = std::round((center - 0.5 * len) / q) * q;
  lo = std::max(lo, t_min);
  double hi = std::min(lo + len, t_max);
  return {center, lo, hi, strategy, epoch};
}

/// Feasible range of the first center for a stepped (overlap) strategy.
/// `tail` is the multiplier k in t_max - k * dt / 4s.
struct CenterRange {
  double lo;
  double hi;
};

inline CenterRange stepped_first_center_range(double t_min, double t_max,
                                              std::size_t s, double tail) {
  const double dt = t_max - t_min;
  return {t_min + dt / (2.0 * static_cast<double>(s)),
          t_max - tail * dt / (4.0 * static_cast<double>(s))};
}

inline std::vector<double> stepped_centers(double first, double step,
                                           std::size_t v) {
  std::vector<double> c(v);
  for (std::size_t i = 0; i < v; ++i) c[i] = first + static_cast<double>(i) * step;
  return c;
}

/// v distinct slot midpoints t_min + (2k-1) dt/2s, in draw order.
inline std::vector<double> sequential_centers(const SamplerConfig& cfg,
                                              double dt, double t_min, Rng& rng) {
  if (cfg.v > cfg.s) {
    throw ConfigError("sequential strategy requires v <= s (v=" +
                      std::to_string(cfg.v) + ", s=" + std::to_string(cfg.s) +
                      ")");
  }
  std::vector<std::size_t> slots(cfg.s);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  slots = rng.sample(std::move(slots), cfg.v);
  std::vector<double> c;
  const double s = static_cast<double>(cfg.s);
  for (std::size_t k : slots) {
    c.push_back(t_min + (2.0 * static_cast<double>(k) + 1.0) * dt / (2.0 * s));
  }
  return c;
}

namespace detail {
inline std::vector<double> stepped(const SamplerConfig& cfg, double dt,
                                   double t_min, Rng& rng, double tail,
                                   double step_quarters, const char* name) {
  const double s = static_cast<double>(cfg.s);
  auto r = stepped_first_center_range(t_min, t_min + dt, cfg.s, tail);
  if (r.lo > r.hi) {
    std::ostringstream os;
    os << name << " strategy: empty range for the first center; need t_min + "
       << "dt/2s <= t_max - (" << tail << ")*dt/4s but " << r.lo << " > "
       << r.hi << " (s=" << cfg.s << ", v=" << cfg.v << ")";
    throw ConfigError(os.str());
  }
  return stepped_centers(rng.uniform(r.lo, r.hi), step_quarters * dt / (4.0 * s),
                         cfg.v);
}
}  // namespace detail

/// First center uniform on [t_min + dt/2s, t_max - (2+v) dt/4s], then steps
/// of dt/4s.
inline std::vector<double> high_overlap_centers(const SamplerConfig& cfg,
                                                double dt, double t_min,
                                                Rng& rng) {
  return detail::stepped(cfg, dt, t_min, rng, 2.0 + static_cast<double>(cfg.v),
                         1.0, "high-overlap");
}

/// First center uniform on [t_min + dt/2s, t_max - (2+3v) dt/4s], then steps
/// of 3dt/4s.
inline std::vector<double> low_overlap_centers(const SamplerConfig& cfg,
                                               double dt, double t_min,
                                               Rng& rng) {
  return detail::stepped(cfg, dt, t_min, rng,
                         2.0 + 3.0 * static_cast<double>(cfg.v), 3.0,
                         "low-overlap");
}

inline std::vector<double> random_centers(const SamplerConfig& cfg, double dt,
                                          double t_min, Rng& rng) {
  const double half = dt / (2.0 * static_cast<double>(cfg.s));
  std::vector<double> c(cfg.v);
  for (double& x : c) x = rng.uniform(t_min + half, t_min + dt - half);
  return c;
}

/// The v windows of one epoch. `attempt` selects an alternative stream and
/// is used when a previous draw produced an empty view.
inline std::vector<ViewWindow> sample_windows(double t_min, double t_max,
                                              const SamplerConfig& cfg,
                                              std::uint64_t epoch,
                                              std::uint64_t attempt = 0) {
  cfg.validate();
  const double dt = t_max - t_min;
  if (!(dt > 0.0)) throw DataError("degenerate timespan");
  Rng rng(derive_seed(cfg.seed, Stream::kSampler, epoch, attempt));
  std::vector<double> centers;
  switch (cfg.strategy) {
    case Strategy::kSequential:
      centers = sequential_centers(cfg, dt, t_min, rng);
      break;
    case Strategy::kHighOverlap:
      centers = high_overlap_centers(cfg, dt, t_min, rng);
      break;
    case Strategy::kLowOverlap:
      centers = low_overlap_centers(cfg, dt, t_min, rng);
      break;
    case Strategy::kRandom:
      centers = random_centers(cfg, dt, t_min, rng);
      break;
  }
  std::vector<ViewWindow> w;
  w.reserve(centers.size());
  for (double c : centers) {
    w.push_back(make_window(c, t_min, t_max, cfg.s, cfg.strategy, epoch));
  }
  return w;
}

inline std::vector<ViewWindow> sample_windows(const TemporalGraph& graph,
                                              const SamplerConfig& cfg,
                                              std::uint64_t epoch,
                                              std::uint64_t attempt = 0) {
  return sample_windows(graph.t_min(), graph.t_max(), cfg, epoch, attempt);
}

inline SampledView slice(const TemporalGraph& graph, const ViewWindow& w) {
  return slice(graph, w.interval());
}

/// Windows plus their sliced views.
struct SampledViews {
  std::vector<ViewWindow> windows;
  std::vector<SampledView> views;
};

inline constexpr int kMaxEmptyViewRetries = 20;

/// Samples and slices one epoch's views. A draw with an empty view is
/// retried on a fresh stream up to kMaxEmptyViewRetries times.
inline SampledViews sample_views(const TemporalGraph& graph,
                                 const SamplerConfig& cfg, std::uint64_t epoch) {
  std::string last_empty;
  for (int attempt = 0; attempt <= kMaxEmptyViewRetries; ++attempt) {
    SampledViews out;
    out.windows = sample_windows(graph, cfg, epoch,
                                 static_cast<std::uint64_t>(attempt));
    bool ok = true;
    for (const auto& w : out.windows) {
      out.views.push_back(slice(graph, w));
      if (out.views.back().is_empty()) {
        std::ostringstream os;
        os << "[" << w.lo << ", " << w.hi << "]";
        last_empty = os.str();
        ok = false;
        break;
      }
    }
    if (ok) return out;
  }
  throw DataError("sampled view " + last_empty + " in epoch " +
                  std::to_string(epoch) + " has no edges after " +
                  std::to_string(kMaxEmptyViewRetries) + " retries");
}

}  // namespace cldg

#endif  // CLDG_SAMPLER_HPP_
