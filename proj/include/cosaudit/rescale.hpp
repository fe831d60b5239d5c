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

// Gauge transformations of an embedding pair: a positive diagonal D maps
// (A, B) to (A D, B D^-1), an orthogonal R maps (A, B) to (A R, B R).
// Both leave A B^T unchanged.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include "cosaudit/matrix_core.hpp"
#include "cosaudit/mf_solvers.hpp"
#include "cosaudit/random.hpp"

namespace cosaudit {

class DiagonalScaling {
 public:
  explicit DiagonalScaling(Vector entries) : entries_(std::move(entries)) {
    for (Index i = 0; i < entries_.size(); ++i) {
      if (!std::isfinite(entries_(i)) || entries_(i) <= 0.0) {
        throw InvalidArgument("scaling entry " + std::to_string(i) +
                              " must be finite and > 0");
      }
    }
  }

  static DiagonalScaling identity(Index k) { return DiagonalScaling(Vector::Ones(k)); }

  const Vector& entries() const { return entries_; }
  Index size() const { return entries_.size(); }
  Vector inverse() const { return entries_.cwiseInverse(); }

  DiagonalScaling compose(const DiagonalScaling& other) const {
    if (other.size() != size()) throw InvalidArgument("scaling lengths differ");
    return DiagonalScaling(entries_.cwiseProduct(other.entries_));
  }

 private:
  Vector entries_;
};

class RotationMatrix {
 public:
  static constexpr double kTolerance = 1e-8;

  explicit RotationMatrix(DataMatrix values) : values_(std::move(values)) {
    if (values_.rows() != values_.cols() || values_.rows() < 1) {
      throw InvalidArgument("rotation must be a nonempty square matrix");
    }
    const DataMatrix gram = values_.transpose() * values_;
    const double err = (gram - DataMatrix::Identity(values_.rows(), values_.cols()))
                           .cwiseAbs()
                           .maxCoeff();
    if (!(err <= kTolerance)) {
      throw InvalidArgument("rotation is not orthogonal (max |R^T R - I| = " +
                            std::to_string(err) + ")");
    }
  }

  const DataMatrix& values() const { return values_; }
  Index size() const { return values_.rows(); }

 private:
  DataMatrix values_;
};

enum class ScalingFamily { kIdentity, kCollapse, kInverse, kSymmetricMatching };

inline const char* to_string(ScalingFamily f) {
  switch (f) {
    case ScalingFamily::kIdentity: return "identity";
    case ScalingFamily::kCollapse: return "collapse";
    case ScalingFamily::kInverse: return "inverse";
    case ScalingFamily::kSymmetricMatching: return "symmetric-matching";
  }
  return "unknown";
}

inline ScalingFamily parse_family(std::string_view tag) {
  if (tag == "identity") return ScalingFamily::kIdentity;
  if (tag == "collapse") return ScalingFamily::kCollapse;
  if (tag == "inverse") return ScalingFamily::kInverse;
  if (tag == "symmetric-matching") return ScalingFamily::kSymmetricMatching;
  throw InvalidArgument("unknown scaling family '" + std::string(tag) +
                        "' (expected identity|collapse|inverse|symmetric-matching)");
}

inline EmbeddingPair apply_scaling(const EmbeddingPair& pair, const DiagonalScaling& d) {
  if (d.size() != pair.rank || d.size() != pair.A.cols()) {
    throw InvalidArgument("scaling length " + std::to_string(d.size()) +
                          " does not match rank " + std::to_string(pair.rank));
  }
  EmbeddingPair out = pair;
  out.A = pair.A * d.entries().asDiagonal();
  out.B = pair.B * d.inverse().asDiagonal();
  out.scaled = true;
  return out;
}

// The named choices of D, computed from the pair's spectrum and lambda.
//   collapse:           (1 + lambda/sigma^2)^(-1/2)   -> B D^-1 = V for ProductReg
//   inverse:            (1 + lambda/sigma^2)^(+1/2)   -> A D    = V for ProductReg
//   symmetric-matching: sigma^(-1/2)
inline DiagonalScaling named_scaling(const EmbeddingPair& pair, ScalingFamily family) {
  const Index k = pair.sigma.size();
  if (k != pair.rank) throw InvalidArgument("pair spectrum length does not match its rank");
  if (family == ScalingFamily::kIdentity) return DiagonalScaling::identity(k);

  Vector d(k);
  for (Index i = 0; i < k; ++i) {
    const double s = pair.sigma(i);
    if (!(s > 0.0)) {
      throw InvalidArgument(std::string("family ") + to_string(family) +
                            " undefined: singular value " + std::to_string(i) + " is zero");
    }
    const double ratio = pair.lambda / (s * s);
    switch (family) {
      case ScalingFamily::kCollapse: d(i) = 1.0 / std::sqrt(1.0 + ratio); break;
      case ScalingFamily::kInverse: d(i) = std::sqrt(1.0 + ratio); break;
      case ScalingFamily::kSymmetricMatching: d(i) = 1.0 / std::sqrt(s); break;
      case ScalingFamily::kIdentity: d(i) = 1.0; break;
    }
  }
  return DiagonalScaling(std::move(d));
}

inline EmbeddingPair apply_rotation(const EmbeddingPair& pair, const RotationMatrix& r) {
  if (r.size() != pair.A.cols()) {
    throw InvalidArgument("rotation size " + std::to_string(r.size()) +
                          " does not match rank " + std::to_string(pair.A.cols()));
  }
  EmbeddingPair out = pair;
  out.A = pair.A * r.values();
  out.B = pair.B * r.values();
  return out;
}

// Q factor of a seeded Gaussian matrix, with columns signed so that R's
// diagonal is positive (the Haar-distributed choice).
inline RotationMatrix random_rotation(Index k, std::uint64_t seed) {
  if (k < 1) throw InvalidArgument("rotation size must be >= 1");
  Rng rng(seed, Stream::kRotation);
  const DataMatrix g = rng.normal_matrix(k, k);
  Eigen::HouseholderQR<DataMatrix> qr(g);
  DataMatrix q = qr.householderQ() * DataMatrix::Identity(k, k);
  const DataMatrix r = qr.matrixQR();
  for (Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return RotationMatrix(std::move(q));
}

// Log-uniform entries in [lo, hi].
inline DiagonalScaling random_scaling(Index k, std::uint64_t seed, double lo = 0.1,
                                      double hi = 10.0) {
  Rng rng(seed, Stream::kScaling);
  Vector d(k);
  for (Index i = 0; i < k; ++i) d(i) = std::exp(rng.uniform(std::log(lo), std::log(hi)));
  return DiagonalScaling(std::move(d));
}

}  // namespace cosaudit
