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

#ifndef CLDG_SPLIT_HPP_
#define CLDG_SPLIT_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "cldg/error.hpp"
#include "cldg/graph.hpp"
#include "cldg/io.hpp"
#include "cldg/rng.hpp"

namespace cldg {

struct SplitRatios {
  std::array<double, 3> parts = {1.0, 1.0, 8.0};  // train, val, test

  double total() const { return parts[0] + parts[1] + parts[2]; }

  /// Parses "a:b:c".
  static SplitRatios parse(std::string_view text) {
    SplitRatios r;
    std::size_t start = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      std::size_t pos = text.find(':', start);
      if ((i < 2) == (pos == std::string_view::npos)) {
        throw ConfigError("ratios must look like a:b:c, got '" +
                          std::string(text) + "'");
      }
      auto tok = text.substr(start, pos == std::string_view::npos
                                        ? std::string_view::npos
                                        : pos - start);
      if (!io::parse_double(tok, r.parts[i]) || !(r.parts[i] >= 0.0)) {
        throw ConfigError("bad ratio '" + std::string(tok) + "'");
      }
      start = pos + 1;
    }
    if (!(r.total() > 0.0)) throw ConfigError("ratios sum to zero");
    return r;
  }

  std::string to_string() const {
    return io::format_double(parts[0]) + ":" + io::format_double(parts[1]) +
           ":" + io::format_double(parts[2]);
  }
};

/// Disjoint train/val/test lists of dense node indices (ascending).
struct SplitSpec {
  SplitRatios ratios;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::vector<std::string> warnings;
};

namespace detail {

// Largest-remainder rounding of `n * w_i / sum(w)` to integers summing to n.
inline std::array<std::size_t, 3> apportion(std::size_t n,
                                            const std::array<double, 3>& w) {
  const double total = w[0] + w[1] + w[2];
  std::array<std::size_t, 3> out{};
  std::array<double, 3> frac{};
  std::size_t used = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    const double q = static_cast<double>(n) * w[p] / total;
    out[p] = static_cast<std::size_t>(std::floor(q));
    frac[p] = q - std::floor(q);
    used += out[p];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; used < n; k = (k + 1) % 3, ++used) ++out[order[k]];
  return out;
}

}  // namespace detail

/// Stratified random split of the labeled nodes. Overall part sizes follow
/// the ratios by largest remainder; each class is split as close to the
/// ratios as those totals allow. A class with fewer than three members goes
/// wholly to train and is reported in `warnings`.
inline SplitSpec make_split(const NodeLabels& labels, const SplitRatios& ratios,
                            std::uint64_t seed) {
  SplitSpec spec;
  spec.ratios = ratios;
  spec.seed = seed;
  const std::size_t nc = labels.num_classes();
  std::vector<std::vector<std::size_t>> members(nc);
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < labels.class_of.size(); ++i) {
    if (labels.class_of[i] >= 0) {
      members[labels.class_of[i]].push_back(i);
      ++labeled;
    }
  }
  if (labeled < 10) {
    throw DataError("make_split needs at least 10 labeled nodes, got " +
                    std::to_string(labeled));
  }

  std::vector<std::size_t> split_classes;
  std::size_t pool = 0;
  for (std::size_t c = 0; c < nc; ++c) {
    Rng rng(derive_seed(seed, Stream::kSplit, c));
    rng.shuffle(members[c]);
    if (members[c].empty()) continue;
    if (members[c].size() < 3) {
      spec.warnings.push_back("class '" + labels.names[c] + "' has " +
                              std::to_string(members[c].size()) +
                              " members; placed wholly in train");
      spec.train.insert(spec.train.end(), members[c].begin(), members[c].end());
      continue;
    }
    split_classes.push_back(c);
    pool += members[c].size();
  }

  const auto& w = ratios.parts;
  const double total = ratios.total();
  auto deficit = detail::apportion(pool, w);
  std::vector<std::array<std::size_t, 3>> quota(nc);
  std::vector<std::size_t> leftover(nc, 0);
  std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
  for (std::size_t c : split_classes) {
    const double n = static_cast<double>(members[c].size());
    std::size_t assigned = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      const double q = n * w[p] / total;
      quota[c][p] = static_cast<std::size_t>(std::floor(q));
      assigned += quota[c][p];
      deficit[p] -= quota[c][p];
      cand.emplace_back(q - std::floor(q), c, p);
    }
    leftover[c] = members[c].size() - assigned;
  }
  std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    return std::get<0>(a) > std::get<0>(b);
  });
  for (const auto& [f, c, p] : cand) {
    if (leftover[c] > 0 && deficit[p] > 0) {
      ++quota[c][p];
      --leftover[c];
      --deficit[p];
    }
  }
  for (std::size_t c : split_classes) {
    for (std::size_t p = 0; p < 3 && leftover[c] > 0; ++p) {
      while (leftover[c] > 0 && deficit[p] > 0) {
        ++quota[c][p];
        --leftover[c];
        --deficit[p];
      }
    }
  }

  for (std::size_t c : split_classes) {
    auto it = members[c].begin();
    spec.train.insert(spec.train.end(), it, it + quota[c][0]);
    it += quota[c][0];
    spec.val.insert(spec.val.end(), it, it + quota[c][1]);
    it += quota[c][1];
    spec.test.insert(spec.test.end(), it, members[c].end());
  }
  std::sort(spec.train.begin(), spec.train.end());
  std::sort(spec.val.begin(), spec.val.end());
  std::sort(spec.test.begin(), spec.test.end());
  return spec;
}

}  // namespace cldg

#endif  // CLDG_SPLIT_HPP_
