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

// Binary parameter checkpoint, little-endian:
//
//   char[8]   magic "CLDGCKPT"
//   u32       format version (1)
//   u32       scalar width in bytes (8 = float64, 4 = float32)
//   u64 x 3   d_in, d_hidden, d_out
//   6 x { u64 rows, u64 cols, rows*cols scalars }
//             gcn_w1, gcn_w2, proj_w1, proj_b1, proj_w2, proj_b2
//
// Values are stored verbatim, so a save/load round trip is bit-exact.

#ifndef CLDG_CHECKPOINT_HPP_
#define CLDG_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>
#include <vector>

#include "cldg/error.hpp"
#include "cldg/io.hpp"
#include "cldg/model.hpp"

namespace cldg {

inline constexpr char kCheckpointMagic[8] = {'C', 'L', 'D', 'G',
                                             'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace detail {

template <typename V>
void put(std::string& out, V v) {
  char buf[sizeof(V)];
  std::memcpy(buf, &v, sizeof(V));
  out.append(buf, sizeof(V));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  template <typename V>
  V get() {
    if (pos_ + sizeof(V) > bytes_.size()) {
      throw DataError("checkpoint truncated");
    }
    V v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <Real T>
std::string serialize_params(const ModelParams<T>& p) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put<std::uint32_t>(out, kCheckpointVersion);
  detail::put<std::uint32_t>(out, sizeof(T));
  const ModelDims d = p.dims();
  detail::put<std::uint64_t>(out, d.d_in);
  detail::put<std::uint64_t>(out, d.d_hidden);
  detail::put<std::uint64_t>(out, d.d_out);
  for (const Matrix<T>* t : p.tensors()) {
    detail::put<std::uint64_t>(out, t->rows());
    detail::put<std::uint64_t>(out, t->cols());
    for (T v : t->values()) detail::put<T>(out, v);
  }
  return out;
}

/// Scalar width recorded in a checkpoint (4 or 8).
inline std::uint32_t checkpoint_scalar_width(const std::string& bytes) {
  detail::Reader r(bytes);
  for (char c : kCheckpointMagic) {
    if (r.get<char>() != c) throw DataError("not a CLDG checkpoint");
  }
  if (r.get<std::uint32_t>() != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version");
  }
  return r.get<std::uint32_t>();
}

template <Real T>
ModelParams<T> deserialize_params(const std::string& bytes) {
  if (checkpoint_scalar_width(bytes) != sizeof(T)) {
    throw DataError("checkpoint scalar width does not match requested type");
  }
  detail::Reader r(bytes);
  for (std::size_t i = 0; i < sizeof(kCheckpointMagic) + 8; ++i) r.get<char>();
  ModelDims d;
  d.d_in = r.get<std::uint64_t>();
  d.d_hidden = r.get<std::uint64_t>();
  d.d_out = r.get<std::uint64_t>();
  ModelParams<T> p = ModelParams<T>::zeros(d);
  for (Matrix<T>* t : p.tensors()) {
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (rows != t->rows() || cols != t->cols()) {
      throw DataError("checkpoint tensor shape does not match its dims");
    }
    for (T& v : t->values()) v = r.get<T>();
  }
  if (!r.done()) throw DataError("trailing bytes in checkpoint");
  return p;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <Real T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& p) {
  write_file_atomic(path, serialize_params(p));
}

template <Real T>
ModelParams<T> load_checkpoint(const std::filesystem::path& path) {
  return deserialize_params<T>(read_file_bytes(path));
}

}  // namespace cldg

#endif  // CLDG_CHECKPOINT_HPP_
