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

// Linear evaluation: a multinomial logistic regression trained on frozen
// embeddings of the train split, with the epoch picked on the val split.

#ifndef CLDG_LINEAR_PROBE_HPP_
#define CLDG_LINEAR_PROBE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cldg/adam.hpp"
#include "cldg/error.hpp"
#include "cldg/graph.hpp"
#include "cldg/kernels.hpp"
#include "cldg/matrix.hpp"
#include "cldg/metrics.hpp"
#include "cldg/split.hpp"

#include <nlohmann/json.hpp>

namespace cldg {

struct ProbeConfig {
  double lr = 1e-2;
  double weight_decay = 1e-4;
  std::size_t epochs = 300;
};

/// logits = X W + b.
struct LinearClassifier {
  Matrix<double> w;  // d x classes
  Matrix<double> b;  // 1 x classes

  static LinearClassifier zeros(std::size_t dim, std::size_t classes) {
    return {Matrix<double>(dim, classes), Matrix<double>(1, classes)};
  }

  std::size_t num_classes() const { return w.cols(); }

  Matrix<double> logits(const Matrix<double>& x) const {
    return add_bias(matmul(x, w), b);
  }

  /// Argmax class per row; ties go to the lowest class id.
  std::vector<int> predict(const Matrix<double>& x) const {
    Matrix<double> z = logits(x);
    std::vector<int> out(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto r = z.row(i);
      out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
  }
};

/// Mean softmax cross-entropy of `clf` on (x, y) and its gradients.
struct ProbeLoss {
  double loss = 0.0;
  Matrix<double> dw;
  Matrix<double> db;
};

inline ProbeLoss probe_loss(const LinearClassifier& clf, const Matrix<double>& x,
                            std::span<const int> y) {
  if (x.rows() != y.size() || x.rows() == 0) {
    throw DataError("probe_loss: " + x.shape() + " rows vs " +
                    std::to_string(y.size()) + " labels");
  }
  Matrix<double> z = clf.logits(x);
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  ProbeLoss r;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    const double log_z = mx + std::log(sum);
    r.loss += (log_z - row[y[i]]) * inv_n;
    for (double& v : row) v = std::exp(v - log_z) * inv_n;
    row[y[i]] -= inv_n;
  }
  r.dw = matmul_tn(x, z);
  r.db = add_bias_backward(z);
  return r;
}

struct ProbeResult {
  LinearClassifier classifier;
  std::size_t best_epoch = 0;  // 0 = initialization
  double best_val_accuracy = 0.0;
  double train_accuracy = 0.0;
};

namespace detail {
inline double accuracy_of(const LinearClassifier& clf, const Matrix<double>& x,
                          std::span<const int> y) {
  if (y.empty()) return 0.0;
  auto p = clf.predict(x);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += p[i] == y[i];
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

inline std::vector<int> labels_of(const NodeLabels& labels,
                                  std::span<const std::size_t> rows) {
  std::vector<int> y;
  for (std::size_t r : rows) y.push_back(labels.class_of[r]);
  return y;
}
}  // namespace detail

/// Trains a zero-initialized linear classifier with Adam on the train rows
/// of `embeddings` and returns the parameters of the epoch with the best
/// validation accuracy (earliest on ties; the last epoch if val is empty).
inline ProbeResult train_linear_probe(const Matrix<double>& embeddings,
                                      const NodeLabels& labels,
                                      const SplitSpec& split,
                                      const ProbeConfig& cfg = {}) {
  if (embeddings.rows() != labels.class_of.size()) {
    throw DataError("embeddings cover " + std::to_string(embeddings.rows()) +
                    " rows but labels cover " +
                    std::to_string(labels.class_of.size()));
  }
  if (split.train.empty()) throw DataError("empty train split");
  auto y_train = detail::labels_of(labels, split.train);
  if (std::set<int>(y_train.begin(), y_train.end()).size() < 2) {
    throw DataError("degenerate train split: a single class");
  }
  auto y_val = detail::labels_of(labels, split.val);
  Matrix<double> x_train = embeddings.gather_rows(split.train);
  Matrix<double> x_val = embeddings.gather_rows(split.val);

  ProbeResult best;
  LinearClassifier clf =
      LinearClassifier::zeros(embeddings.cols(), labels.num_classes());
  best.classifier = clf;
  best.best_val_accuracy = detail::accuracy_of(clf, x_val, y_val);

  std::array<Matrix<double>*, 2> params = {&clf.w, &clf.b};
  AdamState<double> adam({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay},
                         std::span<Matrix<double>* const>(params));
  for (std::size_t e = 1; e <= cfg.epochs; ++e) {
    auto g = probe_loss(clf, x_train, y_train);
    std::array<Matrix<double>, 2> grads = {std::move(g.dw), std::move(g.db)};
    adam_step<double>(params, grads, adam);
    if (y_val.empty()) {
      best.classifier = clf;
      best.best_epoch = e;
      continue;
    }
    const double acc = detail::accuracy_of(clf, x_val, y_val);
    if (acc > best.best_val_accuracy) {
      best.best_val_accuracy = acc;
      best.best_epoch = e;
      best.classifier = clf;
    }
  }
  best.train_accuracy = detail::accuracy_of(best.classifier, x_train, y_train);
  return best;
}

/// Accuracy, weighted F1 and per-class metrics on the test split.
struct EvalReport {
  ClassificationMetrics metrics;
  std::vector<std::string> class_names;
  nlohmann::json config = nlohmann::json::object();

  double accuracy() const { return metrics.accuracy; }
  double weighted_f1() const { return metrics.weighted_f1; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["accuracy"] = metrics.accuracy;
    j["weighted_f1"] = metrics.weighted_f1;
    j["test_size"] = metrics.total;
    auto& pc = j["per_class"] = nlohmann::json::array();
    for (std::size_t c = 0; c < metrics.per_class.size(); ++c) {
      const auto& m = metrics.per_class[c];
      pc.push_back({{"class", class_names.at(c)},
                    {"precision", m.precision},
                    {"recall", m.recall},
                    {"f1", m.f1},
                    {"support", m.support}});
    }
    j["config"] = config;
    return j;
  }
};

inline EvalReport evaluate(const LinearClassifier& clf,
                           const Matrix<double>& embeddings,
                           const NodeLabels& labels, const SplitSpec& split) {
  if (split.test.empty()) throw DataError("empty test split");
  auto truth = detail::labels_of(labels, split.test);
  auto pred = clf.predict(embeddings.gather_rows(split.test));
  EvalReport r;
  r.metrics = classification_metrics(truth, pred, labels.num_classes());
  r.class_names = labels.names;
  return r;
}

/// Split, probe and evaluate in one call.
inline EvalReport linear_evaluation(const Matrix<double>& embeddings,
                                    const NodeLabels& labels,
                                    const SplitRatios& ratios,
                                    std::uint64_t seed,
                                    const ProbeConfig& cfg = {}) {
  auto split = make_split(labels, ratios, seed);
  auto probe = train_linear_probe(embeddings, labels, split, cfg);
  auto report = evaluate(probe.classifier, embeddings, labels, split);
  report.config = {{"ratios", ratios.to_string()},
                   {"seed", seed},
                   {"lr", cfg.lr},
                   {"weight_decay", cfg.weight_decay},
                   {"epochs", cfg.epochs},
                   {"best_epoch", probe.best_epoch},
                   {"best_val_accuracy", probe.best_val_accuracy},
                   {"split_sizes",
                    {split.train.size(), split.val.size(), split.test.size()}},
                   {"warnings", split.warnings}};
  return report;
}

}  // namespace cldg

#endif  // CLDG_LINEAR_PROBE_HPP_
