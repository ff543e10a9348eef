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


// Shared fixtures for the unit tests.

#ifndef CLDG_TESTS_TEST_UTIL_HPP_
#define CLDG_TESTS_TEST_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <unistd.h>
#include <vector>

#include "cldg/cldg.hpp"

namespace cldg::testing {

inline Matrix<double> random_matrix(std::size_t r, std::size_t c, std::uint64_t seed,
                                    double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Matrix<double> m(r, c);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

/// Entries bounded away from zero, so kinks (relu, max) are not hit by
/// finite differences.
inline Matrix<double> kinkless_matrix(std::size_t r, std::size_t c,
                                      std::uint64_t seed) {
  Rng rng(seed);
  Matrix<double> m(r, c);
  for (double& v : m.values()) {
    v = rng.uniform(0.1, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  }
  return m;
}

inline double frobenius_dot(const Matrix<double>& a, const Matrix<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Graph with identity node ids 0..n-1 and seeded random features.
inline TemporalGraph make_graph(std::size_t n, std::vector<TemporalEdge> edges,
                                std::size_t d = 4, std::uint64_t seed = 1) {
  std::vector<NodeId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  auto x = random_matrix(n, d, seed);
  return TemporalGraph::create(std::move(ids), std::move(edges), std::move(x));
}

/// n nodes, m random edges with timestamps uniform on [t0, t1].
inline TemporalGraph random_graph(std::size_t n, std::size_t m, double t0,
                                  double t1, std::uint64_t seed,
                                  std::size_t d = 4) {
  Rng rng(seed);
  std::vector<TemporalEdge> edges;
  for (std::size_t k = 0; k < m; ++k) {
    edges.push_back({rng.below(n), rng.below(n), rng.uniform(t0, t1)});
  }
  return make_graph(n, std::move(edges), d, seed + 1);
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() /
           ("cldg_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  return read_file_bytes(p);
}

}  // namespace cldg::testing

#endif  // CLDG_TESTS_TEST_UTIL_HPP_
