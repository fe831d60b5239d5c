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


#include "cosaudit/remedies.hpp"

#include <cmath>

#include "cosaudit/rescale.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace cosaudit {
namespace {

using testing::std_uniform_matrix;

TEST(Standardize, TwoRowColumn) {
  DataMatrix x(2, 1);
  x << 1.0, 3.0;
  const Standardization s = standardize(x);
  EXPECT_DOUBLE_EQ(s.column_means(0), 2.0);
  EXPECT_DOUBLE_EQ(s.column_stds(0), std::sqrt(2.0));
  EXPECT_NEAR(s.data(0, 0), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(s.data(1, 0), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Standardize, ZeroMeanUnitSampleVariance) {
  const DataMatrix x = std_uniform_matrix(50, 7, 1, -3.0, 5.0);
  const Standardization s = standardize(x);
  for (Index j = 0; j < 7; ++j) {
    EXPECT_NEAR(s.data.col(j).mean(), 0.0, 1e-12);
    EXPECT_NEAR(s.data.col(j).squaredNorm() / 49.0, 1.0, 1e-12);
  }
  EXPECT_LT((unstandardize(s.data, s.column_means, s.column_stds) - x).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(Standardize, ConstantColumnIsRejected) {
  DataMatrix x = std_uniform_matrix(5, 3, 2);
  x.col(1).setConstant(7.25);
  try {
    standardize(x);
    FAIL() << "expected ZeroVarianceError";
  } catch (const ZeroVarianceError& e) {
    EXPECT_EQ(e.column(), 1);
  }
  EXPECT_THROW(standardize(DataMatrix::Ones(1, 3)), InvalidArgument);
  EXPECT_THROW(unstandardize(x, Vector::Zero(2), Vector::Ones(3)), InvalidArgument);
}

TEST(Backprojection, InvariantToScalingAndRotation) {
  const DataMatrix x = std_uniform_matrix(15, 8, 3);
  const EmbeddingPair pair = solve_objective1(x, 4, 0.5);
  const DataMatrix base = backprojected_user_cosine(x, pair).values;
  const DataMatrix base_items = backprojected_item_cosine(x, pair).values;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EmbeddingPair s = apply_scaling(pair, random_scaling(4, seed));
    EXPECT_LT((backprojected_user_cosine(x, s).values - base).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((backprojected_item_cosine(x, s).values - base_items).cwiseAbs().maxCoeff(), 1e-10);
    const EmbeddingPair r = apply_rotation(pair, random_rotation(4, seed));
    EXPECT_LT((backprojected_user_cosine(x, r).values - base).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Backprojection, UnshrunkFullRankMatchesRawCosine) {
  const DataMatrix x = std_uniform_matrix(10, 5, 4);
  const EmbeddingPair pair = solve_objective1(x, 5, 0.0);
  EXPECT_LT((backprojected_user_cosine(x, pair).values - cosine_of_rows(x, x))
                .cwiseAbs()
                .maxCoeff(),
            1e-9);
  const DataMatrix xt = x.transpose();
  EXPECT_LT((backprojected_item_cosine(x, pair).values - cosine_of_rows(xt, xt))
                .cwiseAbs()
                .maxCoeff(),
            1e-9);
}

TEST(Backprojection, ZeroUserRow) {
  DataMatrix x = std_uniform_matrix(6, 4, 5);
  x.row(2).setZero();
  const EmbeddingPair pair = solve_objective1(x, 3, 0.1);
  EXPECT_THROW(backprojected_user_cosine(x, pair), ZeroRowError);
  const SimilarityMatrix s = backprojected_user_cosine(x, pair, ZeroRowPolicy::kExclude);
  EXPECT_EQ(s.excluded_rows, std::vector<Index>{2});
  EXPECT_EQ(s.values.rows(), 5);
}

TEST(Standardize, StandardizedTrainingChangesEmbeddings) {
  const DataMatrix x = std_uniform_matrix(30, 6, 6);
  const Standardization s = standardize(x);
  const EmbeddingPair raw = solve_objective1(x, 3, 1.0);
  const EmbeddingPair std_pair = solve_objective1(s.data, 3, 1.0);
  EXPECT_GT((raw.B.cwiseAbs() - std_pair.B.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-3);
}

}  // namespace
}  // namespace cosaudit
