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

#ifndef CLDG_METRICS_HPP_
#define CLDG_METRICS_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cldg/error.hpp"

namespace cldg {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  std::size_t total = 0;
};

/// Accuracy and support-weighted F1. Precision, recall and F1 are 0 where
/// their denominators vanish.
inline ClassificationMetrics classification_metrics(std::span<const int> truth,
                                                    std::span<const int> pred,
                                                    std::size_t num_classes) {
  if (truth.size() != pred.size()) {
    throw DataError("classification_metrics: " + std::to_string(truth.size()) +
                    " labels vs " + std::to_string(pred.size()) +
                    " predictions");
  }
  std::vector<std::size_t> tp(num_classes), fp(num_classes), fn(num_classes);
  ClassificationMetrics m;
  m.total = truth.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = pred[i];
    if (t < 0 || static_cast<std::size_t>(t) >= num_classes || p < 0 ||
        static_cast<std::size_t>(p) >= num_classes) {
      throw DataError("classification_metrics: class id out of range");
    }
    if (t == p) {
      ++correct;
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  m.per_class.resize(num_classes);
  if (m.total == 0) return m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& cm = m.per_class[c];
    cm.support = tp[c] + fn[c];
    const double pd = static_cast<double>(tp[c] + fp[c]);
    const double rd = static_cast<double>(tp[c] + fn[c]);
    cm.precision = pd > 0 ? static_cast<double>(tp[c]) / pd : 0.0;
    cm.recall = rd > 0 ? static_cast<double>(tp[c]) / rd : 0.0;
    const double s = cm.precision + cm.recall;
    cm.f1 = s > 0 ? 2.0 * cm.precision * cm.recall / s : 0.0;
    m.weighted_f1 += static_cast<double>(cm.support) /
                     static_cast<double>(m.total) * cm.f1;
  }
  return m;
}

}  // namespace cldg

#endif  // CLDG_METRICS_HPP_
