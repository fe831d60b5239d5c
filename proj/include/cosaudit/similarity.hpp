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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "cosaudit/matrix_core.hpp"
#include "cosaudit/mf_solvers.hpp"

namespace cosaudit {

enum class SimilarityKind { kItemItem, kUserUser, kUserItem };
enum class Metric { kCosine, kDot };

inline const char* to_string(SimilarityKind k) {
  switch (k) {
    case SimilarityKind::kItemItem: return "item-item";
    case SimilarityKind::kUserUser: return "user-user";
    case SimilarityKind::kUserItem: return "user-item";
  }
  return "unknown";
}

inline const char* to_string(Metric m) { return m == Metric::kCosine ? "cosine" : "dot"; }

inline SimilarityKind parse_kind(std::string_view tag) {
  if (tag == "item-item") return SimilarityKind::kItemItem;
  if (tag == "user-user") return SimilarityKind::kUserUser;
  if (tag == "user-item") return SimilarityKind::kUserItem;
  throw InvalidArgument("unknown similarity kind '" + std::string(tag) + "'");
}

inline Metric parse_metric(std::string_view tag) {
  if (tag == "cosine") return Metric::kCosine;
  if (tag == "dot") return Metric::kDot;
  throw InvalidArgument("unknown metric '" + std::string(tag) + "' (expected cosine|dot)");
}

// What to do with zero-norm embedding rows under the cosine metric.
enum class ZeroRowPolicy { kThrow, kExclude };

struct SimilarityMatrix {
  DataMatrix values;
  SimilarityKind kind = SimilarityKind::kItemItem;
  Metric metric = Metric::kCosine;
  // Original entity index of each row / column of values.
  std::vector<Index> row_ids;
  std::vector<Index> col_ids;
  // Entities dropped because their embedding is zero (kExclude only).
  std::vector<Index> excluded_rows;
  std::vector<Index> excluded_cols;
};

namespace detail {

inline std::vector<Index> iota_ids(Index count) {
  std::vector<Index> ids(static_cast<std::size_t>(count));
  std::iota(ids.begin(), ids.end(), Index{0});
  return ids;
}

// Splits rows of m into retained (nonzero) and excluded ids.
inline std::pair<std::vector<Index>, std::vector<Index>> partition_zero_rows(
    const DataMatrix& m, ZeroRowPolicy policy) {
  std::vector<Index> kept, dropped;
  for (Index i = 0; i < m.rows(); ++i) {
    if (m.row(i).norm() >= kZeroNormThreshold) {
      kept.push_back(i);
    } else if (policy == ZeroRowPolicy::kThrow) {
      throw ZeroRowError(i);
    } else {
      dropped.push_back(i);
    }
  }
  return {std::move(kept), std::move(dropped)};
}

inline DataMatrix select_rows(const DataMatrix& m, const std::vector<Index>& ids) {
  DataMatrix out(static_cast<Index>(ids.size()), m.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) out.row(static_cast<Index>(r)) = m.row(ids[r]);
  return out;
}

inline SimilarityMatrix cosine_similarity(const DataMatrix& left, const DataMatrix& right,
                                          bool same, SimilarityKind kind,
                                          ZeroRowPolicy policy) {
  SimilarityMatrix s;
  s.kind = kind;
  s.metric = Metric::kCosine;
  std::tie(s.row_ids, s.excluded_rows) = partition_zero_rows(left, policy);
  if (same) {
    s.col_ids = s.row_ids;
    s.excluded_cols = s.excluded_rows;
    const DataMatrix rows = select_rows(left, s.row_ids);
    s.values = cosine_of_rows(rows, rows);
  } else {
    std::tie(s.col_ids, s.excluded_cols) = partition_zero_rows(right, policy);
    s.values = cosine_of_rows(select_rows(left, s.row_ids), select_rows(right, s.col_ids));
  }
  return s;
}

inline SimilarityMatrix dot_similarity(DataMatrix values, SimilarityKind kind) {
  SimilarityMatrix s;
  s.kind = kind;
  s.metric = Metric::kDot;
  s.row_ids = iota_ids(values.rows());
  s.col_ids = iota_ids(values.cols());
  s.values = std::move(values);
  return s;
}

}  // namespace detail

// Similarities between rows of B (item embeddings).
inline SimilarityMatrix item_item(const DataMatrix& x, const EmbeddingPair& pair, Metric metric,
                                  ZeroRowPolicy policy = ZeroRowPolicy::kThrow) {
  detail::check_factor_shapes(x, pair.A, pair.B);
  if (metric == Metric::kDot) {
    return detail::dot_similarity(pair.B * pair.B.transpose(), SimilarityKind::kItemItem);
  }
  return detail::cosine_similarity(pair.B, pair.B, true, SimilarityKind::kItemItem, policy);
}

// Similarities between rows of X A (user embeddings).
inline SimilarityMatrix user_user(const DataMatrix& x, const EmbeddingPair& pair, Metric metric,
                                  ZeroRowPolicy policy = ZeroRowPolicy::kThrow) {
  detail::check_factor_shapes(x, pair.A, pair.B);
  const DataMatrix users = x * pair.A;
  if (metric == Metric::kDot) {
    return detail::dot_similarity(users * users.transpose(), SimilarityKind::kUserUser);
  }
  return detail::cosine_similarity(users, users, true, SimilarityKind::kUserUser, policy);
}

// Similarities between rows of X A and rows of B. The dot metric equals
// predicted_scores.
inline SimilarityMatrix user_item(const DataMatrix& x, const EmbeddingPair& pair, Metric metric,
                                  ZeroRowPolicy policy = ZeroRowPolicy::kThrow) {
  detail::check_factor_shapes(x, pair.A, pair.B);
  const DataMatrix users = x * pair.A;
  if (metric == Metric::kDot) {
    return detail::dot_similarity(users * pair.B.transpose(), SimilarityKind::kUserItem);
  }
  return detail::cosine_similarity(users, pair.B, false, SimilarityKind::kUserItem, policy);
}

inline SimilarityMatrix similarity(SimilarityKind kind, const DataMatrix& x,
                                   const EmbeddingPair& pair, Metric metric,
                                   ZeroRowPolicy policy = ZeroRowPolicy::kThrow) {
  switch (kind) {
    case SimilarityKind::kItemItem: return item_item(x, pair, metric, policy);
    case SimilarityKind::kUserUser: return user_user(x, pair, metric, policy);
    case SimilarityKind::kUserItem: return user_item(x, pair, metric, policy);
  }
  throw InvalidArgument("unknown similarity kind");
}

inline constexpr double kDefaultTieTolerance = 1e-9;

namespace detail {

// Descending order of a row, cut into groups of entries that chain within
// tol of their predecessor. Each group is returned as a sorted id set.
inline std::vector<std::vector<Index>> tie_groups(const Eigen::Ref<const Vector>& row,
                                                  double tol) {
  std::vector<Index> order = iota_ids(row.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return row(a) > row(b); });
  std::vector<std::vector<Index>> groups;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || row(order[i - 1]) - row(order[i]) > tol) groups.emplace_back();
    groups.back().push_back(order[i]);
  }
  for (auto& g : groups) std::sort(g.begin(), g.end());
  return groups;
}

}  // namespace detail

// Row u is true iff rows u of s1 and s2 induce the same descending order,
// with entries within tol treated as ties that must match as sets.
inline std::vector<bool> ranking_equal(const DataMatrix& s1, const DataMatrix& s2,
                                       double tol = kDefaultTieTolerance) {
  if (s1.rows() != s2.rows() || s1.cols() != s2.cols()) {
    throw InvalidArgument("ranking_equal: shapes differ");
  }
  std::vector<bool> equal(static_cast<std::size_t>(s1.rows()));
  for (Index u = 0; u < s1.rows(); ++u) {
    const Vector r1 = s1.row(u).transpose();
    const Vector r2 = s2.row(u).transpose();
    equal[static_cast<std::size_t>(u)] =
        detail::tie_groups(r1, tol) == detail::tie_groups(r2, tol);
  }
  return equal;
}

inline std::vector<bool> ranking_equal(const SimilarityMatrix& s1, const SimilarityMatrix& s2,
                                       double tol = kDefaultTieTolerance) {
  if (s1.row_ids != s2.row_ids || s1.col_ids != s2.col_ids) {
    throw InvalidArgument("ranking_equal: similarity matrices index different entities");
  }
  return ranking_equal(s1.values, s2.values, tol);
}

}  // namespace cosaudit
