// Copyright 2026 The cosine-audit Authors. All Rights Reserved.
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

// Seeded random streams that reproduce bit-for-bit across platforms.
//
// std::mt19937_64 has a standardized output sequence, but the standard
// distributions do not, so every variate below is derived from raw engine
// output by hand. Independent consumers draw from named streams whose seeds
// are derived from the user seed with splitmix64.

#include <cmath>
#include <cstdint>
#include <random>

#include "cosaudit/matrix_core.hpp"

namespace cosaudit {

// Stream order used by the simulator. The numbering is part of the output
// format: changing it changes every generated dataset.
enum class Stream : std::uint64_t {
  kClusters = 0,
  kExponents = 1,
  kPopularities = 2,
  kPreferences = 3,
  kActivity = 4,
  kPicks = 5,
  // Streams below are used by tests and audits, not the simulator.
  kDenseData = 16,
  kRotation = 17,
  kScaling = 18,
  kOracleInit = 19,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, Stream stream)
      : engine_(splitmix64(splitmix64(seed) ^
                           splitmix64(static_cast<std::uint64_t>(stream) + 1))) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal (Marsaglia polar method).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 uses the boost
  // Gamma(shape + 1) * U^(1/shape).
  double gamma(double shape) {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  DataMatrix uniform_matrix(Index rows, Index cols, double lo = 0.0, double hi = 1.0) {
    DataMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

  DataMatrix normal_matrix(Index rows, Index cols) {
    DataMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Dense matrix of Uniform(0, 1) entries; the standard seeded test input.
inline DataMatrix seeded_uniform_matrix(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed, Stream::kDenseData);
  return rng.uniform_matrix(rows, cols);
}

}  // namespace cosaudit
