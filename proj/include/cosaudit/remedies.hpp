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

// Alternatives to cosine on raw embeddings: standardize X before training,
// or measure similarity on the smoothed data X A B^T, which depends on the
// factors only through their (gauge-invariant) product.

#include <algorithm>
#include <cmath>
#include <string>

#include "cosaudit/matrix_core.hpp"
#include "cosaudit/mf_solvers.hpp"
#include "cosaudit/similarity.hpp"

namespace cosaudit {

class ZeroVarianceError : public Error {
 public:
  explicit ZeroVarianceError(Index column)
      : Error("column " + std::to_string(column) + " has zero variance"), column_(column) {}
  Index column() const { return column_; }

 private:
  Index column_;
};

struct Standardization {
  DataMatrix data;
  Vector column_means;
  Vector column_stds;  // sample standard deviation, divisor n - 1
};

inline Standardization standardize(const DataMatrix& x) {
  require_nonempty(x, "X");
  require_finite(x, "X");
  if (x.rows() < 2) throw InvalidArgument("standardize needs at least 2 rows");
  Standardization s;
  s.column_means = x.colwise().mean().transpose();
  s.data = x.rowwise() - s.column_means.transpose();
  s.column_stds = (s.data.colwise().squaredNorm() / static_cast<double>(x.rows() - 1))
                      .cwiseSqrt()
                      .transpose();
  for (Index j = 0; j < x.cols(); ++j) {
    // Relative threshold: a constant column leaves only rounding noise.
    const double scale = std::max(1.0, std::abs(s.column_means(j)));
    if (!(s.column_stds(j) > 1e-12 * scale)) throw ZeroVarianceError(j);
  }
  s.data = s.data * s.column_stds.cwiseInverse().asDiagonal();
  return s;
}

inline DataMatrix unstandardize(const DataMatrix& z, const Vector& means, const Vector& stds) {
  if (z.cols() != means.size() || z.cols() != stds.size()) {
    throw InvalidArgument("standardization parameters do not match column count");
  }
  return (z * stds.asDiagonal()).rowwise() + means.transpose();
}

// Cosine between users, each represented by its row of X A B^T.
inline SimilarityMatrix backprojected_user_cosine(const DataMatrix& x, const EmbeddingPair& pair,
                                                  ZeroRowPolicy policy = ZeroRowPolicy::kThrow) {
  const DataMatrix smoothed = predicted_scores(x, pair);
  return detail::cosine_similarity(smoothed, smoothed, true, SimilarityKind::kUserUser, policy);
}

// Cosine between items, each represented by its column of X A B^T.
inline SimilarityMatrix backprojected_item_cosine(const DataMatrix& x, const EmbeddingPair& pair,
                                                  ZeroRowPolicy policy = ZeroRowPolicy::kThrow) {
  const DataMatrix profiles = predicted_scores(x, pair).transpose();
  return detail::cosine_similarity(profiles, profiles, true, SimilarityKind::kItemItem, policy);
}

}  // namespace cosaudit
