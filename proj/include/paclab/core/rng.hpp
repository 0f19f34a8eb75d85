// Copyright 2026 The PACLab Authors
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

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace paclab {

/// Named random streams. Keeping data sampling, augmentation and weight
/// initialization on separate streams means toggling one of them never
/// perturbs the draw sequence of another.
enum class Stream : std::uint64_t {
  kDataSampling = 1,
  kAugmentation = 2,
  kInit = 3,
  kAnalysis = 4,
};

inline const char* stream_name(Stream s) {
  switch (s) {
    case Stream::kDataSampling: return "data-sampling";
    case Stream::kAugmentation: return "augmentation";
    case Stream::kInit: return "init";
    case Stream::kAnalysis: return "analysis";
  }
  return "unknown";
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stable mix of a seed with an arbitrary derivation path.
inline std::uint64_t mix_path(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p));
  return h;
}

}  // namespace detail

/// A deterministic random stream. The same (seed, stream_id, path) always
/// yields the identical draw sequence. One stream has a single owner; fork
/// sub-streams instead of sharing.
class RngStream {
 public:
  RngStream(std::uint64_t seed, Stream id)
      : RngStream(seed, id, {}) {}

  RngStream(std::uint64_t seed, Stream id,
            std::initializer_list<std::uint64_t> path)
      : seed_(seed), id_(id) {
    std::uint64_t h = detail::mix_path(seed ^ static_cast<std::uint64_t>(id),
                                       path);
    eng_.seed(h);
  }

  std::uint64_t seed() const { return seed_; }
  Stream id() const { return id_; }

  /// Number of public draw calls made so far.
  std::uint64_t draws() const { return draws_; }

  /// Raw 64 random bits.
  std::uint64_t next_u64() {
    ++draws_;
    return eng_();
  }

  /// Uniform double in [0, 1).
  double uniform() {
    ++draws_;
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n). n must be >= 1.
  std::uint32_t uniform_index(std::uint32_t n) {
    ++draws_;
    // Multiply-shift; deterministic and fast. The bias is < 2^-32.
    std::uint64_t x = eng_();
    return static_cast<std::uint32_t>(
        (static_cast<__uint128_t>(x) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (no internal caching, two words/draw).
  double normal() {
    ++draws_;
    double u1, u2;
    do {
      u1 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    } while (u1 <= 0.0);
    u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Fisher-Yates shuffle using this stream (self-contained so the sequence
  /// does not depend on the standard library's std::shuffle details).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Child stream for a derivation path element (e.g. per step, per image).
  RngStream fork(std::uint64_t a, std::uint64_t b = 0,
                 std::uint64_t c = 0) const {
    return RngStream(seed_, id_, {a, b, c});
  }

  /// Serialized engine state (checkpointable).
  std::string state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void restore(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
  }

 private:
  std::uint64_t seed_ = 0;
  Stream id_ = Stream::kDataSampling;
  std::mt19937_64 eng_;
  std::uint64_t draws_ = 0;
};

}  // namespace paclab
