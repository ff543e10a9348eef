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
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace cldg {
namespace {

TrainConfig small_config(std::uint64_t seed = 3) {
  TrainConfig c;
  c.sampler.strategy = Strategy::kSequential;
  c.sampler.s = 2;
  c.sampler.v = 2;
  c.sampler.seed = seed;
  c.dims = {0, 8, 5};
  c.epochs = 1;
  c.seed = seed;
  return c;
}

TEST(SharedNodes, IdenticalViews) {
  auto g = testing::random_graph(20, 60, 0.0, 10.0, 1);
  std::vector<SampledView> v = {slice(g, TimeInterval{0, 5}), slice(g, TimeInterval{0, 5})};
  auto s = shared_nodes(v);
  EXPECT_TRUE(std::equal(s.begin(), s.end(), v[0].active_nodes().begin(),
                         v[0].active_nodes().end()));
}

TEST(SharedNodes, EveryNodeInEveryWindow) {
  std::vector<TemporalEdge> edges;
  for (std::size_t i = 0; i < 10; ++i) {
    edges.push_back({i, (i + 1) % 10, 1.0});
    edges.push_back({i, (i + 5) % 10, 9.0});
  }
  auto g = testing::make_graph(10, edges);
  std::vector<SampledView> v = {slice(g, TimeInterval{0, 5}), slice(g, TimeInterval{5, 10})};
  EXPECT_EQ(shared_nodes(v).size(), 10u);
}

TEST(SharedNodes, Intersection) {
  auto g = testing::make_graph(5, {{1, 2, 0.0}, {2, 3, 0.5}, {2, 3, 2.0}, {3, 4, 2.5}});
  std::vector<SampledView> v = {slice(g, TimeInterval{0, 1}), slice(g, TimeInterval{2, 3})};
  EXPECT_EQ(shared_nodes(v), (std::vector<std::size_t>{2, 3}));
}

TEST(Minibatch, ClampsToShared) {
  std::vector<std::size_t> shared(10);
  std::iota(shared.begin(), shared.end(), 0);
  Rng rng(1);
  auto b = make_minibatch(shared, 256, rng);
  EXPECT_EQ(std::set<std::size_t>(b.begin(), b.end()).size(), 10u);
}

TEST(Minibatch, DistinctIds) {
  std::vector<std::size_t> shared(1000);
  std::iota(shared.begin(), shared.end(), 0);
  Rng rng(2);
  auto b = make_minibatch(shared, 256, rng);
  EXPECT_EQ(b.size(), 256u);
  EXPECT_EQ(std::set<std::size_t>(b.begin(), b.end()).size(), 256u);
}

TEST(Minibatch, UniformFrequencies) {
  const std::size_t n = 50, k = 10, draws = 10000;
  std::vector<std::size_t> shared(n);
  std::iota(shared.begin(), shared.end(), 0);
  std::vector<std::size_t> count(n);
  Rng rng(3);
  for (std::size_t t = 0; t < draws; ++t) {
    for (std::size_t x : make_minibatch(shared, k, rng)) ++count[x];
  }
  const double p = static_cast<double>(k) / n;
  const double sigma = std::sqrt(draws * p * (1 - p));
  // 4 sigma: 50 cells are tested at once.
  for (std::size_t c : count) EXPECT_LE(std::abs(c - draws * p), 4 * sigma);
}

TEST(Minibatch, EmptySharedSetIsDataError) {
  Rng rng(4);
  try {
    make_minibatch({}, 4, rng);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("smaller s"), std::string::npos);
  }
}

TEST(Train, OneEpochOneRecord) {
  auto g = gradcheck_graph(7);
  auto r = train<double>(g, small_config());
  ASSERT_EQ(r.log.epochs.size(), 1u);
  EXPECT_TRUE(std::isfinite(r.log.epochs[0].loss));
  EXPECT_EQ(r.log.epochs[0].epoch, 1u);
  EXPECT_EQ(r.log.epochs[0].windows.size(), 2u);
}

TEST(Train, BitIdenticalRuns) {
  auto g = testing::random_graph(60, 600, 0.0, 20.0, 5, 6);
  auto cfg = small_config(11);
  cfg.sampler.strategy = Strategy::kRandom;
  cfg.epochs = 8;
  auto a = train<double>(g, cfg);
  auto b = train<double>(g, cfg);
  EXPECT_EQ(a.log.to_csv(), b.log.to_csv());
  EXPECT_TRUE(a.params == b.params);
  for (std::size_t e = 0; e < a.log.epochs.size(); ++e) {
    EXPECT_EQ(a.log.epochs[e].loss, b.log.epochs[e].loss);
  }
}

TEST(Train, SeedChangesTrajectory) {
  auto g = testing::random_graph(60, 600, 0.0, 20.0, 5, 6);
  auto a = train<double>(g, small_config(1));
  auto b = train<double>(g, small_config(2));
  EXPECT_FALSE(a.params == b.params);
}

TEST(Train, LogCsvLayout) {
  auto g = gradcheck_graph(7);
  auto cfg = small_config();
  cfg.epochs = 2;
  auto csv = train<double>(g, cfg).log.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,loss,shared,lo1,hi1,lo2,hi2");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Train, NonFiniteLossIsNumericError) {
  auto g = gradcheck_graph(7);
  auto x = g.features();
  x(0, 0) = std::nan("");
  auto bad = g.with_features(x);
  try {
    train<double>(bad, small_config());
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
  }
}

TEST(Train, FeatureDimMismatch) {
  auto g = gradcheck_graph(7);
  auto cfg = small_config();
  cfg.dims.d_in = 99;
  EXPECT_THROW(train<double>(g, cfg), ConfigError);
}

TEST(Train, UpdatesEveryTensor) {
  auto g = gradcheck_graph(7);
  auto cfg = small_config();
  auto init = ModelParams<double>::glorot({6, 8, 5}, cfg.seed);
  auto trained = train<double>(g, cfg).params;
  auto a = init.tensors();
  auto b = trained.tensors();
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_GT(max_abs_diff(*a[k], *b[k]), 0.0) << ModelParams<double>::kNames[k];
  }
}

TEST(Train, FloatPrecision) {
  auto g = gradcheck_graph(7);
  auto cfg = small_config();
  cfg.epochs = 3;
  auto r = train<float>(g, cfg);
  for (const auto& e : r.log.epochs) EXPECT_TRUE(std::isfinite(e.loss));
}

TEST(Train, PeriodicCheckpoint) {
  auto dir = testing::scratch_dir("train_ckpt");
  auto g = gradcheck_graph(7);
  auto cfg = small_config();
  cfg.epochs = 3;
  cfg.checkpoint_path = dir / "p.ckpt";
  cfg.checkpoint_every = 1;
  auto r = train<double>(g, cfg);
  EXPECT_TRUE(load_checkpoint<double>(dir / "p.ckpt") == r.params);
  EXPECT_FALSE(std::filesystem::exists(dir / "p.ckpt.tmp"));
}

TEST(GradCheck, FixtureWithinTolerance) {
  for (ReduceOp op : {ReduceOp::kMean, ReduceOp::kMax, ReduceOp::kSum}) {
    auto rep = run_gradcheck(7, op);
    EXPECT_LT(rep.max_rel_error, 1e-4) << to_string(op);
    EXPECT_EQ(rep.lines.size(), 12u);
  }
}

TEST(GradCheck, FanoutCapGradients) {
  auto g = gradcheck_graph(3);
  std::vector<SampledView> views = {slice(g, TimeInterval{0, 10}),
                                    slice(g, TimeInterval{10.5, 20})};
  auto batch = shared_nodes(views);
  ModelOptions opts;
  opts.fanout_cap = 2;
  auto p = ModelParams<double>::glorot({6, 8, 5}, 3);
  auto rngs = [] { return std::vector<Rng>{Rng(1), Rng(2)}; };
  auto r0 = rngs();
  auto analytic = loss_and_gradients<double>(views, batch, p, {}, opts, r0);
  auto f = [&] {
    auto r = rngs();
    return loss_and_gradients<double>(views, batch, p, {}, opts, r).loss;
  };
  EXPECT_LT(max_relative_error(analytic.grads.gcn_w1, numeric_gradient(p.gcn_w1, f)), 1e-4);
}

TEST(Checkpoint, BitExactRoundTrip) {
  auto dir = testing::scratch_dir("ckpt_rt");
  auto p = ModelParams<double>::glorot({5, 7, 3}, 9);
  p.proj_b1(0, 1) = -0.0;
  p.proj_b2(0, 2) = 1e-310;
  save_checkpoint(dir / "a.ckpt", p);
  auto q = load_checkpoint<double>(dir / "a.ckpt");
  EXPECT_EQ(serialize_params(q), serialize_params(p));
  EXPECT_EQ(read_file_bytes(dir / "a.ckpt").substr(0, 8), "CLDGCKPT");
}

TEST(Checkpoint, FloatWidthRecorded) {
  auto p = ModelParams<float>::glorot({2, 3, 2}, 1);
  auto bytes = serialize_params(p);
  EXPECT_EQ(checkpoint_scalar_width(bytes), 4u);
  EXPECT_THROW(deserialize_params<double>(bytes), DataError);
  EXPECT_TRUE(deserialize_params<float>(bytes) == p);
}

TEST(Checkpoint, RejectsCorruption) {
  auto bytes = serialize_params(ModelParams<double>::glorot({2, 3, 2}, 1));
  EXPECT_THROW(deserialize_params<double>("garbage"), DataError);
  EXPECT_THROW(deserialize_params<double>(bytes.substr(0, bytes.size() - 3)), DataError);
  EXPECT_THROW(deserialize_params<double>(bytes + "x"), DataError);
  auto bad = bytes;
  bad[3] = 'X';
  EXPECT_THROW(deserialize_params<double>(bad), DataError);
}

}  // namespace
}  // namespace cldg
