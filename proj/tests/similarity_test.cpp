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


#include "cosaudit/similarity.hpp"

#include <cmath>

#include "cosaudit/rescale.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace cosaudit {
namespace {

using testing::brute_force_cosine;
using testing::max_abs_diff;
using testing::std_uniform_matrix;

EmbeddingPair make_pair(DataMatrix a, DataMatrix b) {
  EmbeddingPair p;
  p.rank = a.cols();
  p.sigma = Vector::Ones(p.rank);
  p.A = std::move(a);
  p.B = std::move(b);
  return p;
}

TEST(ItemItem, CosineMatchesBruteForce) {
  const DataMatrix x = std_uniform_matrix(10, 6, 1);
  const EmbeddingPair pair = solve_objective1(x, 3, 0.2);
  const SimilarityMatrix s = item_item(x, pair, Metric::kCosine);
  EXPECT_EQ(s.kind, SimilarityKind::kItemItem);
  EXPECT_LT(max_abs_diff(s.values, brute_force_cosine(pair.B, pair.B)), 1e-12);
  EXPECT_EQ(s.values.diagonal(), Vector::Ones(6));
  EXPECT_EQ(s.row_ids, detail::iota_ids(6));
}

TEST(ItemItem, DotIsGram) {
  const DataMatrix x = std_uniform_matrix(10, 6, 2);
  const EmbeddingPair pair = solve_objective1(x, 3, 0.2);
  const SimilarityMatrix s = item_item(x, pair, Metric::kDot);
  EXPECT_LT(max_abs_diff(s.values, pair.B * pair.B.transpose()), 1e-14);
  EXPECT_EQ(s.metric, Metric::kDot);
}

TEST(ItemItem, ZeroEmbeddingPolicy) {
  DataMatrix b(3, 2);
  b << 1, 0, 0, 0, 1, 1;
  const EmbeddingPair pair = make_pair(DataMatrix::Ones(3, 2), b);
  const DataMatrix x = DataMatrix::Ones(2, 3);
  try {
    item_item(x, pair, Metric::kCosine);
    FAIL() << "expected ZeroRowError";
  } catch (const ZeroRowError& e) {
    EXPECT_EQ(e.index(), 1);
  }
  const SimilarityMatrix s = item_item(x, pair, Metric::kCosine, ZeroRowPolicy::kExclude);
  EXPECT_EQ(s.row_ids, (std::vector<Index>{0, 2}));
  EXPECT_EQ(s.excluded_rows, (std::vector<Index>{1}));
  EXPECT_NEAR(s.values(0, 1), 1.0 / std::sqrt(2.0), 1e-15);
  // Dot similarity is defined for zero rows.
  EXPECT_NO_THROW(item_item(x, pair, Metric::kDot));
}

TEST(UserUser, UsesProjectedRows) {
  const DataMatrix x = std_uniform_matrix(9, 5, 3);
  const EmbeddingPair pair = solve_objective2(x, 3, 0.1);
  const DataMatrix users = x * pair.A;
  EXPECT_LT(max_abs_diff(user_user(x, pair, Metric::kCosine).values,
                         brute_force_cosine(users, users)),
            1e-12);
  EXPECT_LT(max_abs_diff(user_user(x, pair, Metric::kDot).values, users * users.transpose()),
            1e-12);
}

TEST(UserItem, DotEqualsPredictedScores) {
  const DataMatrix x = std_uniform_matrix(9, 5, 4);
  const EmbeddingPair pair = solve_objective1(x, 3, 0.1);
  EXPECT_LT(max_abs_diff(user_item(x, pair, Metric::kDot).values, predicted_scores(x, pair)),
            1e-12);
  const SimilarityMatrix cos = user_item(x, pair, Metric::kCosine);
  EXPECT_EQ(cos.values.rows(), 9);
  EXPECT_EQ(cos.values.cols(), 5);
  EXPECT_LT(max_abs_diff(cos.values, brute_force_cosine(x * pair.A, pair.B)), 1e-12);
}

TEST(Similarity, ShapeMismatchThrows) {
  const DataMatrix x = std_uniform_matrix(4, 3, 5);
  const EmbeddingPair pair = make_pair(DataMatrix::Ones(4, 2), DataMatrix::Ones(3, 2));
  EXPECT_THROW(item_item(x, pair, Metric::kCosine), InvalidArgument);
  EXPECT_THROW(similarity(SimilarityKind::kUserUser, x, pair, Metric::kDot), InvalidArgument);
}

TEST(Similarity, DotDependsOnScalingCosineOfCollapsedItemsIsIdentity) {
  const DataMatrix x = std_uniform_matrix(20, 6, 6);
  const EmbeddingPair pair = solve_objective1(x, 6, 2.0);
  const EmbeddingPair c = apply_scaling(pair, named_scaling(pair, ScalingFamily::kCollapse));
  const SimilarityMatrix s = item_item(x, c, Metric::kCosine);
  EXPECT_LT(max_abs_diff(s.values, DataMatrix::Identity(6, 6)), 1e-10);
  const SimilarityMatrix base = item_item(x, pair, Metric::kCosine);
  EXPECT_GT(max_abs_diff(base.values, s.values), 1e-3);
}

TEST(Parse, KindsAndMetrics) {
  for (auto k : {SimilarityKind::kItemItem, SimilarityKind::kUserUser, SimilarityKind::kUserItem})
    EXPECT_EQ(parse_kind(to_string(k)), k);
  EXPECT_EQ(parse_metric("dot"), Metric::kDot);
  EXPECT_EQ(parse_metric("cosine"), Metric::kCosine);
  EXPECT_THROW(parse_metric("euclid"), InvalidArgument);
  EXPECT_THROW(parse_kind("item"), InvalidArgument);
}

TEST(RankingEqual, IdenticalOrdersAgree) {
  DataMatrix s1(2, 3), s2(2, 3);
  s1 << 0.9, 0.1, 0.5, 1, 2, 3;
  s2 << 10, -4, 2, -3, 0, 8;
  EXPECT_EQ(ranking_equal(s1, s2), (std::vector<bool>{true, true}));
}

TEST(RankingEqual, SwapIsDetected) {
  DataMatrix s1(1, 3), s2(1, 3);
  s1 << 0.9, 0.1, 0.5;
  s2 << 0.9, 0.5, 0.1;
  EXPECT_EQ(ranking_equal(s1, s2), std::vector<bool>{false});
}

TEST(RankingEqual, TiesMustMatchAsSets) {
  DataMatrix s1(1, 3), s2(1, 3), s3(1, 3);
  s1 << 1.0, 1.0 + 1e-12, 0.2;
  s2 << 1.0 + 1e-12, 1.0, 0.2;
  s3 << 1.0, 0.5, 0.2;
  EXPECT_EQ(ranking_equal(s1, s2), std::vector<bool>{true});
  EXPECT_EQ(ranking_equal(s1, s3), std::vector<bool>{false});
}

TEST(RankingEqual, ShapeAndIdChecks) {
  EXPECT_THROW(ranking_equal(DataMatrix::Zero(2, 2), DataMatrix::Zero(2, 3)), InvalidArgument);
  SimilarityMatrix a, b;
  a.values = b.values = DataMatrix::Zero(2, 2);
  a.row_ids = a.col_ids = {0, 1};
  b.row_ids = {0, 2};
  b.col_ids = {0, 1};
  EXPECT_THROW(ranking_equal(a, b), InvalidArgument);
}

}  // namespace
}  // namespace cosaudit
