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


#include <array>
#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace cldg {
namespace {

using testing::frobenius_dot;
using testing::kinkless_matrix;
using testing::random_matrix;

// Checks backward(x, g) against d/dx <g, f(x)> by central differences.
void expect_backward_matches(
    Matrix<double> x, const std::function<Matrix<double>(const Matrix<double>&)>& f,
    const std::function<Matrix<double>(const Matrix<double>&, const Matrix<double>&)>&
        backward,
    std::uint64_t seed, double tol = 1e-6) {
  const Matrix<double> y = f(x);
  const Matrix<double> g = random_matrix(y.rows(), y.cols(), seed);
  const Matrix<double> analytic = backward(x, g);
  auto numeric = numeric_gradient<double>(x, [&] { return frobenius_dot(g, f(x)); });
  EXPECT_LT(max_relative_error(analytic, numeric), tol);
}

TEST(Matrix, ShapeAndAccess) {
  Matrix<double> m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.row(1)[0], 4.0);
  EXPECT_EQ(m.shape(), "[2x3]");
  std::array<std::size_t, 2> idx = {1, 1};
  auto g = m.gather_rows(idx);
  EXPECT_EQ(g(1, 0), 4.0);
  EXPECT_EQ(m.cast<float>()(0, 1), 2.0f);
}

TEST(Kernels, MatmulIdentity) {
  Matrix<double> a{{1, 2}, {3, 4}};
  EXPECT_EQ(matmul(a, Matrix<double>::identity(2)), a);
}

TEST(Kernels, MatmulVariantsAgree) {
  auto a = random_matrix(4, 3, 1);
  auto b = random_matrix(4, 5, 2);
  auto c = random_matrix(6, 3, 3);
  Matrix<double> at(3, 4), ct(3, 6);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) at(j, i) = a(i, j);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 3; ++j) ct(j, i) = c(i, j);
  EXPECT_LT(max_abs_diff(matmul_tn(a, b), matmul(at, b)), 1e-15);
  EXPECT_LT(max_abs_diff(matmul_nt(a, c), matmul(a, ct)), 1e-15);
}

TEST(Kernels, ShapeErrors) {
  EXPECT_THROW(matmul(Matrix<double>(2, 3), Matrix<double>(2, 3)), ShapeError);
  EXPECT_THROW(add_bias(Matrix<double>(2, 3), Matrix<double>(1, 2)), ShapeError);
}

TEST(Kernels, RowNormalize345) {
  auto r = row_l2_normalize(Matrix<double>{{3, 4}});
  EXPECT_DOUBLE_EQ(r.out(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(r.out(0, 1), 0.8);
}

TEST(Kernels, RowNormalizeZeroRowNamesRow) {
  try {
    row_l2_normalize(Matrix<double>{{1, 0}, {0, 0}});
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(Kernels, MatmulBackward) {
  auto b = random_matrix(3, 5, 11);
  expect_backward_matches(
      random_matrix(4, 3, 10), [&](const auto& x) { return matmul(x, b); },
      [&](const auto& x, const auto& g) { return matmul_backward(x, b, g).da; }, 12);
  auto a = random_matrix(4, 3, 13);
  expect_backward_matches(
      random_matrix(3, 5, 14), [&](const auto& x) { return matmul(a, x); },
      [&](const auto& x, const auto& g) { return matmul_backward(a, x, g).db; }, 15);
}

TEST(Kernels, AddBiasBackward) {
  auto x = random_matrix(4, 3, 20);
  expect_backward_matches(
      random_matrix(1, 3, 21), [&](const auto& b) { return add_bias(x, b); },
      [&](const auto&, const auto& g) { return add_bias_backward(g); }, 22);
}

TEST(Kernels, ReluBackward) {
  expect_backward_matches(
      kinkless_matrix(4, 3, 30), [](const auto& x) { return relu(x); },
      [](const auto& x, const auto& g) { return relu_backward(x, g); }, 31);
}

TEST(Kernels, LeakyReluBackward) {
  expect_backward_matches(
      kinkless_matrix(4, 3, 40), [](const auto& x) { return leaky_relu(x); },
      [](const auto& x, const auto& g) { return leaky_relu_backward(x, g); }, 41);
  Matrix<double> neg{{-2.0}};
  EXPECT_DOUBLE_EQ(leaky_relu(neg)(0, 0), -0.02);
}

TEST(Kernels, ScaleBackward) {
  expect_backward_matches(
      random_matrix(4, 3, 50), [](const auto& x) { return scale(x, 2.5); },
      [](const auto&, const auto& g) { return scale_backward(g, 2.5); }, 51);
}

TEST(Kernels, RowNormalizeBackward) {
  expect_backward_matches(
      kinkless_matrix(4, 3, 60), [](const auto& x) { return row_l2_normalize(x).out; },
      [](const auto& x, const auto& g) {
        return row_l2_normalize_backward(row_l2_normalize(x), g);
      },
      61);
}

Segments test_segments() {
  Segments s;
  std::array<std::size_t, 2> a = {0, 2};
  std::array<std::size_t, 3> b = {1, 2, 3};
  std::array<std::size_t, 1> c = {3};
  s.push(a);
  s.push(b);
  s.push(c);
  return s;
}

TEST(Kernels, SegmentReduceBackward) {
  const Segments seg = test_segments();
  for (ReduceOp op : {ReduceOp::kMean, ReduceOp::kMax, ReduceOp::kSum}) {
    expect_backward_matches(
        random_matrix(4, 3, 70),
        [&](const auto& x) { return segment_reduce(x, seg, op).out; },
        [&](const auto& x, const auto& g) {
          return segment_reduce_backward(segment_reduce(x, seg, op), seg, op, g,
                                         x.rows());
        },
        71);
  }
}

TEST(Kernels, SegmentReduceEmptySegment) {
  Segments s;
  s.push(std::span<const std::size_t>{});
  EXPECT_THROW(segment_reduce(Matrix<double>(2, 2), s, ReduceOp::kMean), ShapeError);
}

TEST(Kernels, AdjointIdentity) {
  // <g, K(x + d) - K(x)> ~ <backward(g), d> for a small perturbation d.
  auto b = random_matrix(3, 5, 81);
  const Segments seg = test_segments();
  using Fwd = std::function<Matrix<double>(const Matrix<double>&)>;
  using Bwd = std::function<Matrix<double>(const Matrix<double>&, const Matrix<double>&)>;
  std::vector<std::pair<Fwd, Bwd>> kernels = {
      {[&](const auto& x) { return matmul(x, b); },
       [&](const auto& x, const auto& g) { return matmul_backward(x, b, g).da; }},
      {[](const auto& x) { return leaky_relu(x); },
       [](const auto& x, const auto& g) { return leaky_relu_backward(x, g); }},
      {[](const auto& x) { return row_l2_normalize(x).out; },
       [](const auto& x, const auto& g) {
         return row_l2_normalize_backward(row_l2_normalize(x), g);
       }},
      {[&](const auto& x) { return segment_reduce(x, seg, ReduceOp::kMean).out; },
       [&](const auto& x, const auto& g) {
         return segment_reduce_backward(segment_reduce(x, seg, ReduceOp::kMean), seg,
                                        ReduceOp::kMean, g, x.rows());
       }},
  };
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    auto x = kinkless_matrix(4, 3, 90 + k);
    auto d = random_matrix(4, 3, 100 + k);
    for (double& v : d.values()) v *= 1e-6;
    auto y = kernels[k].first(x);
    auto g = random_matrix(y.rows(), y.cols(), 110 + k);
    Matrix<double> xd = x;
    xd += d;
    auto y2 = kernels[k].first(xd);
    double lhs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += g[i] * (y2[i] - y[i]);
    const double rhs = frobenius_dot(kernels[k].second(x, g), d);
    EXPECT_NEAR(lhs, rhs, 1e-10) << "kernel " << k;
  }
}

TEST(Kernels, ThreadCountDoesNotChangeResults) {
  auto a = random_matrix(97, 40, 120);
  auto b = random_matrix(40, 33, 121);
  set_num_threads(1);
  auto one = matmul(a, b);
  set_num_threads(4);
  auto four = matmul(a, b);
  set_num_threads(1);
  EXPECT_EQ(one, four);
}

TEST(Kernels, CheckedModeCatchesNonFinite) {
  set_checked_mode(true);
  Matrix<double> bad{{std::nan(""), 1.0}};
  EXPECT_THROW(row_l2_normalize(bad), NumericError);
  set_checked_mode(false);
}

// ------------------------------------------------------------------ adam

double adam_scalar(double p, double g, double lr, int steps) {
  Matrix<double> m{{p}};
  std::array<Matrix<double>*, 1> ps = {&m};
  AdamState<double> st({lr, 0.9, 0.999, 1e-8, 0.0}, std::span<Matrix<double>* const>(ps));
  for (int i = 0; i < steps; ++i) {
    std::array<Matrix<double>, 1> gs = {Matrix<double>{{g}}};
    adam_step<double>(ps, gs, st);
  }
  return m(0, 0);
}

TEST(Adam, FirstStepMovesByLr) {
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  const double expected = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
  EXPECT_NEAR(adam_scalar(1.0, 1.0, 0.1, 1), expected, 1e-15);
  EXPECT_NEAR(adam_scalar(1.0, 1.0, 0.1, 1), 0.9, 1e-8);
}

TEST(Adam, ZeroGradientFixedPoint) {
  auto p = random_matrix(3, 2, 5);
  auto orig = p;
  std::array<Matrix<double>*, 1> ps = {&p};
  AdamState<double> st({0.1, 0.9, 0.999, 1e-8, 0.0}, std::span<Matrix<double>* const>(ps));
  for (int i = 0; i < 10; ++i) {
    std::array<Matrix<double>, 1> gs = {Matrix<double>(3, 2)};
    adam_step<double>(ps, gs, st);
  }
  EXPECT_EQ(p, orig);
}

TEST(Adam, ConstantGradientMonotone) {
  // Scalar reference recurrence alongside the library.
  double ref = 2.0, m = 0, v = 0;
  Matrix<double> p{{2.0}};
  std::array<Matrix<double>*, 1> ps = {&p};
  AdamState<double> st({0.01, 0.9, 0.999, 1e-8, 0.0}, std::span<Matrix<double>* const>(ps));
  double prev = p(0, 0);
  for (int t = 1; t <= 100; ++t) {
    std::array<Matrix<double>, 1> gs = {Matrix<double>{{0.3}}};
    adam_step<double>(ps, gs, st);
    m = 0.9 * m + 0.1 * 0.3;
    v = 0.999 * v + 0.001 * 0.09;
    ref -= 0.01 * (m / (1 - std::pow(0.9, t))) /
           (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_LT(p(0, 0), prev);
    EXPECT_NEAR(p(0, 0), ref, 1e-12);
    prev = p(0, 0);
  }
}

TEST(Adam, CoupledWeightDecay) {
  Matrix<double> p{{1.0}};
  std::array<Matrix<double>*, 1> ps = {&p};
  AdamState<double> st({0.1, 0.9, 0.999, 1e-8, 0.5}, std::span<Matrix<double>* const>(ps));
  std::array<Matrix<double>, 1> gs = {Matrix<double>{{0.0}}};
  adam_step<double>(ps, gs, st);
  // Effective gradient 0.5 * p = 0.5; first step still moves by ~lr.
  EXPECT_NEAR(p(0, 0), 0.9, 1e-7);
}

TEST(Adam, RejectsNonFiniteGradientInCheckedMode) {
  set_checked_mode(true);
  Matrix<double> p{{1.0}};
  std::array<Matrix<double>*, 1> ps = {&p};
  AdamState<double> st({0.1, 0.9, 0.999, 1e-8, 0.0}, std::span<Matrix<double>* const>(ps));
  std::array<Matrix<double>, 1> gs = {Matrix<double>{{INFINITY}}};
  EXPECT_THROW(adam_step<double>(ps, gs, st), NumericError);
  set_checked_mode(false);
}

}  // namespace
}  // namespace cldg
