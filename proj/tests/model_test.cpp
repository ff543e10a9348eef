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


#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace cldg {
namespace {

using testing::random_matrix;

ModelParams<double> identity_params(std::size_t d) {
  auto p = ModelParams<double>::zeros({d, d, d});
  p.gcn_w1 = Matrix<double>::identity(d);
  p.gcn_w2 = Matrix<double>::identity(d);
  p.proj_w1 = Matrix<double>::identity(d);
  p.proj_w2 = Matrix<double>::identity(d);
  return p;
}

ModelParams<double> random_params(const ModelDims& d, std::uint64_t seed) {
  auto p = ModelParams<double>::glorot(d, seed);
  Rng rng(seed + 1000);
  for (double& v : p.proj_b1.values()) v = rng.uniform(-0.3, 0.3);
  for (double& v : p.proj_b2.values()) v = rng.uniform(-0.3, 0.3);
  return p;
}

TemporalGraph single_node(std::size_t d) {
  Matrix<double> x(1, d);
  for (std::size_t j = 0; j < d; ++j) x(0, j) = 0.5 + j;
  return TemporalGraph::create({42}, {}, std::move(x), std::nullopt,
                               TimeInterval{0.0, 1.0});
}

// Dense D^-1/2 (A + I) D^-1/2 straight from an edge list.
Matrix<double> dense_oracle(std::size_t n, std::span<const TemporalEdge> edges) {
  Matrix<double> a(n, n);
  for (const auto& e : edges) {
    if (e.src == e.dst) continue;
    a(e.src, e.dst) = 1.0;
    a(e.dst, e.src) = 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  std::vector<double> deg(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  return a;
}

Matrix<double> dense_matmul(const Matrix<double>& a, const Matrix<double>& b) {
  Matrix<double> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

TEST(Adjacency, IsolatedNode) {
  auto g = single_node(2);
  auto adj = normalize_adjacency(SampledView::whole(g, true));
  EXPECT_EQ(adj.dense(), (Matrix<double>{{1.0}}));
}

TEST(Adjacency, SingleEdge) {
  auto g = testing::make_graph(2, {{0, 1, 0.0}});
  auto d = normalize_adjacency(SampledView::whole(g)).dense();
  for (double v : d.values()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Adjacency, DuplicatesAndSelfEdgesIgnored) {
  auto g = testing::make_graph(2, {{0, 1, 0.0}, {1, 0, 1.0}, {0, 1, 2.0}, {0, 0, 3.0}});
  auto d = normalize_adjacency(SampledView::whole(g)).dense();
  for (double v : d.values()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Adjacency, MatchesDenseOracle) {
  auto g = testing::random_graph(30, 60, 0.0, 1.0, 7);
  auto view = SampledView::whole(g, true);
  ASSERT_EQ(view.num_active(), 30u);
  auto adj = normalize_adjacency(view);
  EXPECT_LT(max_abs_diff(adj.dense(), dense_oracle(30, g.edges())), 1e-12);
}

TEST(Adjacency, FanoutCap) {
  auto g = testing::random_graph(30, 300, 0.0, 1.0, 8);
  auto view = SampledView::whole(g);
  Rng rng(1);
  auto full = normalize_adjacency(view);
  auto big = normalize_adjacency(view, 1000, &rng);
  EXPECT_EQ(full.dense(), big.dense());
  auto capped = normalize_adjacency(view, 2, &rng);
  EXPECT_LT(capped.nnz(), full.nnz());
  EXPECT_THROW(normalize_adjacency(view, 2, nullptr), ConfigError);
}

TEST(Encode, IsolatedNodeIdentity) {
  auto g = single_node(3);
  auto view = SampledView::whole(g, true);
  auto enc = encode(normalize_adjacency(view), view.features(), identity_params(3),
                    Activation::kLinear);
  EXPECT_EQ(enc.h, g.features());
}

TEST(Encode, PathGraphDenseOracle) {
  // 0 - 1 - 2 with small integer weights.
  auto g = TemporalGraph::create({0, 1, 2}, {{0, 1, 0.0}, {1, 2, 1.0}},
                                 Matrix<double>{{1, 0}, {0, 1}, {1, 1}});
  auto p = ModelParams<double>::zeros({2, 3, 2});
  p.gcn_w1 = Matrix<double>{{1, -1, 2}, {0, 1, -2}};
  p.gcn_w2 = Matrix<double>{{1, 0}, {2, 1}, {0, -1}};
  auto view = SampledView::whole(g);
  auto h = encode(normalize_adjacency(view), view.features(), p).h;

  const double r6 = 1.0 / std::sqrt(6.0);
  Matrix<double> a{{0.5, r6, 0}, {r6, 1.0 / 3.0, r6}, {0, r6, 0.5}};
  auto z1 = dense_matmul(dense_matmul(a, g.features()), p.gcn_w1);
  for (double& v : z1.values()) v = std::max(v, 0.0);
  auto expected = dense_matmul(dense_matmul(a, z1), p.gcn_w2);
  EXPECT_LT(max_abs_diff(h, expected), 1e-10);
}

TEST(Encode, GradientsMatchFiniteDifferences) {
  auto g = testing::random_graph(10, 25, 0.0, 1.0, 9, 4);
  auto view = SampledView::whole(g, true);
  auto adj = normalize_adjacency(view);
  auto x = view.features();
  auto p = random_params({4, 6, 3}, 10);
  auto gout = random_matrix(10, 3, 11);
  auto loss = [&] { return testing::frobenius_dot(gout, encode(adj, x, p).h); };
  auto grads = ModelParams<double>::zeros(p.dims());
  encode_backward(adj, encode(adj, x, p), gout, p, grads);
  EXPECT_LT(max_relative_error(grads.gcn_w1, numeric_gradient(p.gcn_w1, loss)), 1e-4);
  EXPECT_LT(max_relative_error(grads.gcn_w2, numeric_gradient(p.gcn_w2, loss)), 1e-4);
}

TEST(Readout, MeanAndSumExample) {
  // Node 0 connected to 1 and 2.
  auto g = testing::make_graph(3, {{0, 1, 0.0}, {0, 2, 0.0}}, 2);
  auto adj = normalize_adjacency(SampledView::whole(g));
  Matrix<double> h{{9, 9}, {1, 3}, {3, 5}};
  std::array<std::size_t, 1> batch = {0};
  EXPECT_EQ(readout(adj, h, batch, ReduceOp::kMean).reduced.out,
            (Matrix<double>{{2, 4}}));
  EXPECT_EQ(readout(adj, h, batch, ReduceOp::kSum).reduced.out,
            (Matrix<double>{{4, 8}}));
  EXPECT_EQ(readout(adj, h, batch, ReduceOp::kMax).reduced.out,
            (Matrix<double>{{3, 5}}));
}

TEST(Readout, IsolatedFallsBackToSelf) {
  auto g = single_node(2);
  auto adj = normalize_adjacency(SampledView::whole(g, true));
  Matrix<double> h{{7, 8}};
  std::array<std::size_t, 1> batch = {0};
  EXPECT_EQ(readout(adj, h, batch, ReduceOp::kMean).reduced.out, h);
}

TEST(Readout, MatchesNaiveLoop) {
  auto g = testing::random_graph(20, 50, 0.0, 1.0, 12);
  auto view = SampledView::whole(g);
  auto adj = normalize_adjacency(view);
  auto h = random_matrix(view.num_active(), 5, 13);
  std::vector<std::size_t> batch(view.num_active());
  std::iota(batch.begin(), batch.end(), 0);
  // Neighbor sets from the raw edges.
  std::vector<std::set<std::size_t>> nb(view.num_active());
  for (const auto& e : g.edges()) {
    if (e.src == e.dst) continue;
    nb[view.local_index(e.src)].insert(view.local_index(e.dst));
    nb[view.local_index(e.dst)].insert(view.local_index(e.src));
  }
  for (ReduceOp op : {ReduceOp::kMean, ReduceOp::kMax, ReduceOp::kSum}) {
    auto out = readout(adj, h, batch, op).reduced.out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::set<std::size_t> members = nb[i];
      if (members.empty()) members.insert(i);
      for (std::size_t j = 0; j < 5; ++j) {
        double acc = op == ReduceOp::kMax ? -INFINITY : 0.0;
        for (std::size_t m : members) {
          acc = op == ReduceOp::kMax ? std::max(acc, h(m, j)) : acc + h(m, j);
        }
        if (op == ReduceOp::kMean) acc /= static_cast<double>(members.size());
        EXPECT_NEAR(out(i, j), acc, 1e-12);
      }
    }
  }
}

TEST(Readout, PermutationInvariant) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_matrix(12, 4, 100 + trial);
    std::vector<std::size_t> members = {0, 3, 4, 7, 9, 11};
    Segments a;
    a.push(members);
    auto shuffled = members;
    rng.shuffle(shuffled);
    Segments b;
    b.push(shuffled);
    for (ReduceOp op : {ReduceOp::kMean, ReduceOp::kMax, ReduceOp::kSum}) {
      EXPECT_LT(max_abs_diff(segment_reduce(x, a, op).out, segment_reduce(x, b, op).out),
                1e-12);
    }
  }
}

TEST(Project, UnitRows) {
  auto p = random_params({3, 4, 6}, 20);
  auto z = project(random_matrix(15, 6, 21), p).z.out;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double ss = 0;
    for (double v : z.row(i)) ss += v * v;
    EXPECT_NEAR(std::sqrt(ss), 1.0, 1e-6);
  }
  // Re-normalizing changes nothing.
  EXPECT_LT(max_abs_diff(row_l2_normalize(z).out, z), 1e-12);
}

TEST(Project, IdentityHead345) {
  Matrix<double> x(1, 5);
  x(0, 0) = 3;
  x(0, 1) = 4;
  auto z = project(x, identity_params(5)).z.out;
  EXPECT_DOUBLE_EQ(z(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(z(0, 1), 0.8);
  for (std::size_t j = 2; j < 5; ++j) EXPECT_EQ(z(0, j), 0.0);
}

TEST(Project, GradientsMatchFiniteDifferences) {
  auto p = random_params({3, 4, 5}, 22);
  auto x = random_matrix(6, 5, 23);
  auto gz = random_matrix(6, 5, 24);
  auto loss = [&] { return testing::frobenius_dot(gz, project(x, p).z.out); };
  auto grads = ModelParams<double>::zeros(p.dims());
  auto dx = project_backward(project(x, p), gz, p, grads);
  EXPECT_LT(max_relative_error(grads.proj_w1, numeric_gradient(p.proj_w1, loss)), 1e-4);
  EXPECT_LT(max_relative_error(grads.proj_b1, numeric_gradient(p.proj_b1, loss)), 1e-4);
  EXPECT_LT(max_relative_error(grads.proj_w2, numeric_gradient(p.proj_w2, loss)), 1e-4);
  EXPECT_LT(max_relative_error(grads.proj_b2, numeric_gradient(p.proj_b2, loss)), 1e-4);
  EXPECT_LT(max_relative_error(dx, numeric_gradient(x, loss)), 1e-4);
}

TEST(Model, ParameterCount) {
  ModelDims d{128, 128, 64};
  EXPECT_EQ(d.parameter_count(), 32896u);
  EXPECT_EQ(ModelParams<double>::glorot(d, 1).parameter_count(), 32896u);
}

TEST(Model, IdenticalWindowsGiveIdenticalEmbeddings) {
  auto g = testing::random_graph(16, 60, 0.0, 10.0, 30);
  std::vector<SampledView> views = {slice(g, TimeInterval{2, 8}),
                                    slice(g, TimeInterval{2, 8})};
  auto batch = shared_nodes(views);
  auto emb = embed_views<double>(views, batch, random_params({4, 8, 5}, 31));
  EXPECT_EQ(emb[0].node_z, emb[1].node_z);
  EXPECT_EQ(emb[0].neigh_z, emb[1].neigh_z);
}

TEST(Model, BatchOfOne) {
  auto g = testing::random_graph(16, 60, 0.0, 10.0, 32);
  std::vector<SampledView> views = {SampledView::whole(g)};
  std::vector<std::size_t> batch = {views[0].active_nodes()[0]};
  auto emb = embed_views<double>(views, batch, random_params({4, 8, 5}, 33));
  ASSERT_EQ(emb[0].node_z.rows(), 1u);
  ASSERT_EQ(emb[0].neigh_z.cols(), 5u);
  double a = 0, b = 0;
  for (double v : emb[0].node_z.values()) a += v * v;
  for (double v : emb[0].neigh_z.values()) b += v * v;
  EXPECT_NEAR(a, 1.0, 1e-12);
  EXPECT_NEAR(b, 1.0, 1e-12);
}

TEST(Model, ComposesEncodeReadoutProject) {
  std::vector<TemporalEdge> edges;
  for (std::size_t i = 0; i < 8; ++i) {
    edges.push_back({i, (i + 1) % 8, 1.0});
    edges.push_back({i, (i + 3) % 8, 6.0});
  }
  auto g = testing::make_graph(8, edges, 4, 34);
  std::vector<SampledView> views = {slice(g, TimeInterval{0, 2}),
                                    slice(g, TimeInterval{5, 7})};
  std::vector<std::size_t> batch = {1, 4, 6};
  auto p = random_params({4, 6, 3}, 35);
  auto emb = embed_views<double>(views, batch, p);
  for (std::size_t k = 0; k < 2; ++k) {
    auto adj = normalize_adjacency(views[k]);
    auto h = encode(adj, views[k].features(), p).h;
    std::vector<std::size_t> local;
    for (std::size_t b : batch) local.push_back(views[k].local_index(b));
    auto node = project(h.gather_rows(local), p).z.out;
    auto neigh = project(readout(adj, h, local, ReduceOp::kMean).reduced.out, p).z.out;
    EXPECT_EQ(emb[k].node_z, node);
    EXPECT_EQ(emb[k].neigh_z, neigh);
  }
}

TEST(Model, SharedWeightsAffectEveryView) {
  auto g = testing::random_graph(16, 80, 0.0, 10.0, 36);
  std::vector<SampledView> views = {slice(g, TimeInterval{0, 6}),
                                    slice(g, TimeInterval{4, 10})};
  auto batch = shared_nodes(views);
  auto p = random_params({4, 8, 5}, 37);
  auto before = embed_views<double>(views, batch, p);
  p.gcn_w2(0, 0) += 0.5;
  auto after = embed_views<double>(views, batch, p);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_GT(max_abs_diff(before[k].node_z, after[k].node_z), 0.0);
}

TEST(Model, BatchNodeMustBeActive) {
  auto g = testing::make_graph(3, {{0, 1, 0.0}, {1, 2, 5.0}});
  auto view = slice(g, TimeInterval{0, 1});
  std::vector<std::size_t> batch = {2};
  EXPECT_THROW(ViewPass<double>(view, batch), DataError);
}

TEST(EmbedAll, ShapeAndDeterminism) {
  auto g = testing::make_graph(3, {{0, 1, 0.0}, {1, 2, 1.0}}, 4);
  auto p = random_params({4, 6, 5}, 40);
  auto a = embed_all(g, p);
  EXPECT_EQ(a.rows(), 3u);
  EXPECT_EQ(a.cols(), 5u);
  EXPECT_EQ(a, embed_all(g, p));
}

TEST(EmbedAll, SingleNodeIdentity) {
  auto g = single_node(4);
  EXPECT_EQ(embed_all(g, identity_params(4), Activation::kLinear), g.features());
}

TEST(Model, FloatPathRuns) {
  auto g = testing::random_graph(16, 80, 0.0, 10.0, 41);
  std::vector<SampledView> views = {slice(g, TimeInterval{0, 6}),
                                    slice(g, TimeInterval{4, 10})};
  auto batch = shared_nodes(views);
  auto p = ModelParams<float>::glorot({4, 8, 5}, 42);
  auto r = loss_and_gradients<float>(views, batch, p, LossConfig{});
  EXPECT_TRUE(std::isfinite(r.loss));
}

}  // namespace
}  // namespace cldg
