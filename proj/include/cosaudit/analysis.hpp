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

// Cluster recovery scores, the full-rank identity checks, and the
// multi-configuration audit that compares item-item similarities across
// objectives and rescalings.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cosaudit/matrix_core.hpp"
#include "cosaudit/mf_solvers.hpp"
#include "cosaudit/rescale.hpp"
#include "cosaudit/similarity.hpp"
#include "cosaudit/synthgen.hpp"

namespace cosaudit {

struct ClusterContrast {
  std::optional<double> within_mean;   // same-cluster pairs, i != j
  std::optional<double> between_mean;  // different-cluster pairs
  std::optional<double> contrast;      // within_mean - between_mean
};

// Mean off-diagonal similarity within and between ground-truth clusters.
// Rows and columns are mapped to items through s.row_ids; a mean with no
// contributing pairs is absent.
inline ClusterContrast cluster_contrast(const SimilarityMatrix& s, const GroundTruth& gt) {
  if (s.kind != SimilarityKind::kItemItem || s.values.rows() != s.values.cols() ||
      s.row_ids != s.col_ids) {
    throw InvalidArgument("cluster_contrast needs a square item-item similarity matrix");
  }
  double within = 0.0, between = 0.0;
  std::int64_t n_within = 0, n_between = 0;
  const Index m = s.values.rows();
  for (Index i = 0; i < m; ++i) {
    const Index ci = gt.item_cluster.at(static_cast<std::size_t>(s.row_ids[i]));
    for (Index j = 0; j < m; ++j) {
      if (i == j) continue;
      const Index cj = gt.item_cluster.at(static_cast<std::size_t>(s.col_ids[j]));
      if (ci == cj) {
        within += s.values(i, j);
        ++n_within;
      } else {
        between += s.values(i, j);
        ++n_between;
      }
    }
  }
  ClusterContrast out;
  if (n_within > 0) out.within_mean = within / static_cast<double>(n_within);
  if (n_between > 0) out.between_mean = between / static_cast<double>(n_between);
  if (out.within_mean && out.between_mean) out.contrast = *out.within_mean - *out.between_mean;
  return out;
}

// Permutes an item-item matrix into export order (cluster, then
// descending popularity). Excluded items stay excluded.
inline SimilarityMatrix order_for_export(const SimilarityMatrix& s, const GroundTruth& gt) {
  std::vector<Index> position(static_cast<std::size_t>(gt.num_items()), -1);
  for (std::size_t r = 0; r < s.row_ids.size(); ++r) {
    position[static_cast<std::size_t>(s.row_ids[r])] = static_cast<Index>(r);
  }
  std::vector<Index> local;
  for (Index item : export_item_order(gt)) {
    const Index at = position[static_cast<std::size_t>(item)];
    if (at >= 0) local.push_back(at);
  }
  SimilarityMatrix out = s;
  const Index m = static_cast<Index>(local.size());
  for (Index i = 0; i < m; ++i) {
    out.row_ids[static_cast<std::size_t>(i)] = s.row_ids[static_cast<std::size_t>(local[i])];
    for (Index j = 0; j < m; ++j) out.values(i, j) = s.values(local[i], local[j]);
  }
  out.col_ids = out.row_ids;
  return out;
}

// ---------------------------------------------------------------------------
// Full-rank identity checks.

inline constexpr double kCollapseOffdiagTolerance = 1e-6;
inline constexpr double kRawUserCosineTolerance = 1e-6;
inline constexpr double kRankingAgreementRequired = 1.0;
inline constexpr double kProductInvarianceTolerance = 1e-8;
inline constexpr int kInvarianceTrials = 5;

struct IdentityCheck {
  std::string name;
  std::string description;
  double value = 0.0;
  double threshold = 0.0;
  bool at_least = false;   // pass iff value >= threshold, else value <= threshold
  bool applicable = true;  // false when the identity needs k == p but X is rank deficient
  bool passed = false;
};

struct FullRankAudit {
  double lambda = 0.0;
  Index p = 0;
  Index rank = 0;
  std::vector<Index> zero_sigma_dims;
  std::vector<IdentityCheck> checks;  // (a) .. (d), in that order

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const IdentityCheck& c) { return !c.applicable || c.passed; });
  }
  const IdentityCheck* first_failure() const {
    for (const auto& c : checks)
      if (c.applicable && !c.passed) return &c;
    return nullptr;
  }
};

namespace detail {

inline IdentityCheck make_check(std::string name, std::string description, double value,
                                double threshold, bool at_least, bool applicable) {
  IdentityCheck c{std::move(name), std::move(description), value, threshold, at_least,
                  applicable, false};
  c.passed = std::isfinite(value) && (at_least ? value >= threshold : value <= threshold);
  return c;
}

}  // namespace detail

// Runs the four identities that hold for the ProductReg solution at k = p:
//   (a) collapse scaling makes item-item cosine the identity matrix,
//   (b) inverse scaling makes user-user cosine the cosine of raw X rows,
//   (c) under collapse, user-item cosine ranks items like the dot product,
//   (d) predicted scores do not move under random positive D.
// Dimensions with zero singular value are dropped and reported; (a) and
// (c) are then marked not applicable.
inline FullRankAudit audit_full_rank(const DataMatrix& x, double lambda,
                                     std::uint64_t seed = 0) {
  require_nonempty(x, "X");
  require_finite(x, "X");
  FullRankAudit audit;
  audit.lambda = lambda;
  audit.p = x.cols();
  const Index k_max = std::min(x.rows(), x.cols());
  const SvdFactors full = svd(x, k_max);
  const double tol = full.zero_tolerance();
  audit.rank = 0;
  for (Index i = 0; i < k_max; ++i) {
    if (full.singular_values(i) > tol) ++audit.rank;
  }
  for (Index i = audit.rank; i < audit.p; ++i) audit.zero_sigma_dims.push_back(i);
  if (audit.rank == 0) throw InvalidArgument("X has no nonzero singular values");
  const bool full_rank = audit.rank == audit.p;

  const EmbeddingPair pair = solve_objective1(full, audit.rank, lambda);
  const EmbeddingPair collapse = apply_scaling(pair, named_scaling(pair, ScalingFamily::kCollapse));
  const EmbeddingPair inverse = apply_scaling(pair, named_scaling(pair, ScalingFamily::kInverse));

  {
    const SimilarityMatrix s = item_item(x, collapse, Metric::kCosine, ZeroRowPolicy::kExclude);
    DataMatrix off = s.values;
    off.diagonal().setZero();
    const double value = off.size() > 0 ? off.cwiseAbs().maxCoeff() : 0.0;
    audit.checks.push_back(detail::make_check(
        "a", "max |off-diagonal| of item-item cosine under collapse scaling", value,
        kCollapseOffdiagTolerance, false, full_rank));
  }
  {
    const SimilarityMatrix s = user_user(x, inverse, Metric::kCosine, ZeroRowPolicy::kExclude);
    const DataMatrix raw = detail::select_rows(x, s.row_ids);
    const double value = (s.values - cosine_of_rows(raw, raw)).norm();
    audit.checks.push_back(detail::make_check(
        "b", "Frobenius distance between user-user cosine under inverse scaling and raw-data cosine",
        value, kRawUserCosineTolerance, false, true));
  }
  {
    const SimilarityMatrix cos = user_item(x, collapse, Metric::kCosine, ZeroRowPolicy::kExclude);
    const SimilarityMatrix dot = user_item(x, collapse, Metric::kDot);
    DataMatrix dot_sub(cos.values.rows(), cos.values.cols());
    for (Index i = 0; i < dot_sub.rows(); ++i)
      for (Index j = 0; j < dot_sub.cols(); ++j)
        dot_sub(i, j) = dot.values(cos.row_ids[static_cast<std::size_t>(i)],
                                   cos.col_ids[static_cast<std::size_t>(j)]);
    const auto equal = ranking_equal(cos.values, dot_sub);
    const double agree =
        equal.empty() ? 0.0
                      : static_cast<double>(std::count(equal.begin(), equal.end(), true)) /
                            static_cast<double>(equal.size());
    audit.checks.push_back(detail::make_check(
        "c", "fraction of users whose user-item cosine ranking equals the dot ranking under collapse",
        agree, kRankingAgreementRequired, true, full_rank));
  }
  {
    const DataMatrix base = predicted_scores(x, pair);
    const double base_norm = base.norm();
    double worst = 0.0;
    for (int t = 0; t < kInvarianceTrials; ++t) {
      const EmbeddingPair scaled =
          apply_scaling(pair, random_scaling(audit.rank, seed + static_cast<std::uint64_t>(t)));
      const double dev = (predicted_scores(x, scaled) - base).norm();
      worst = std::max(worst, base_norm > 0.0 ? dev / base_norm : dev);
    }
    audit.checks.push_back(detail::make_check(
        "d", "max relative change of predicted scores under 5 random positive scalings", worst,
        kProductInvarianceTolerance, false, true));
  }
  return audit;
}

// ---------------------------------------------------------------------------
// Multi-configuration audit.

struct PlanEntry {
  Objective objective = Objective::kProductReg;
  double lambda = 0.0;
  Index rank = 1;
  ScalingFamily family = ScalingFamily::kIdentity;
};

// ProductReg at lambda = 10,000 under three rescalings, and SplitReg at
// lambda = 100, all at the given rank.
inline std::vector<PlanEntry> default_plan(Index rank = 50) {
  return {
      {Objective::kProductReg, 10000.0, rank, ScalingFamily::kCollapse},
      {Objective::kProductReg, 10000.0, rank, ScalingFamily::kIdentity},
      {Objective::kProductReg, 10000.0, rank, ScalingFamily::kInverse},
      {Objective::kSplitReg, 100.0, rank, ScalingFamily::kIdentity},
  };
}

struct ConfigurationResult {
  PlanEntry entry;
  ClusterContrast contrast;
  SimilarityMatrix similarity;  // item-item cosine, export order
  std::vector<std::string> warnings;
};

struct AuditReport {
  std::vector<ConfigurationResult> configurations;
  std::optional<FullRankAudit> full_rank;
  nlohmann::json provenance = nlohmann::json::object();
};

inline ConfigurationResult run_configuration(const DataMatrix& x, const SvdFactors& factors,
                                             const GroundTruth& gt, const PlanEntry& entry) {
  ConfigurationResult result;
  result.entry = entry;
  EmbeddingPair pair = solve(factors, entry.rank, entry.lambda, entry.objective);
  if (entry.family != ScalingFamily::kIdentity) {
    pair = apply_scaling(pair, named_scaling(pair, entry.family));
  }
  result.warnings = pair.warnings;
  const SimilarityMatrix s = item_item(x, pair, Metric::kCosine, ZeroRowPolicy::kExclude);
  if (!s.excluded_rows.empty()) {
    result.warnings.push_back(std::to_string(s.excluded_rows.size()) +
                              " items have zero embeddings and were excluded");
  }
  result.contrast = cluster_contrast(s, gt);
  result.similarity = order_for_export(s, gt);
  return result;
}

// Solves every plan entry from one shared SVD. Entries run on up to
// `threads` workers; results keep plan order.
inline AuditReport compare_configurations(const DataMatrix& x, const GroundTruth& gt,
                                          const std::vector<PlanEntry>& plan,
                                          unsigned threads = 1) {
  require_nonempty(x, "X");
  require_finite(x, "X");
  if (gt.num_items() != x.cols()) {
    throw InvalidArgument("ground truth has " + std::to_string(gt.num_items()) +
                          " items but X has " + std::to_string(x.cols()) + " columns");
  }
  Index k_max = 0;
  for (const auto& e : plan) {
    if (e.rank < 1 || e.rank > std::min(x.rows(), x.cols())) {
      throw InvalidArgument("plan rank " + std::to_string(e.rank) + " out of range");
    }
    if (!std::isfinite(e.lambda) || e.lambda < 0.0) {
      throw InvalidArgument("plan lambda must be finite and >= 0");
    }
    k_max = std::max(k_max, e.rank);
  }

  AuditReport report;
  report.configurations.resize(plan.size());
  if (plan.empty()) return report;
  const SvdFactors factors = svd(x, k_max);

  std::vector<std::exception_ptr> errors(plan.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.size(); i = next++) {
      try {
        report.configurations[i] = run_configuration(x, factors, gt, plan[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned count =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(plan.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return report;
}

// ---------------------------------------------------------------------------
// JSON form of the report. Similarity matrices are exported separately.

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const ClusterContrast& c) {
  return {{"within_mean", optional_json(c.within_mean)},
          {"between_mean", optional_json(c.between_mean)},
          {"contrast", optional_json(c.contrast)}};
}

inline nlohmann::json to_json(const PlanEntry& e) {
  return {{"objective", objective_number(e.objective)},
          {"objective_tag", to_string(e.objective)},
          {"lambda", e.lambda},
          {"rank", e.rank},
          {"family", to_string(e.family)}};
}

inline nlohmann::json to_json(const FullRankAudit& a) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : a.checks) {
    checks.push_back({{"name", c.name},
                      {"description", c.description},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"comparison", c.at_least ? ">=" : "<="},
                      {"applicable", c.applicable},
                      {"passed", c.passed}});
  }
  return {{"lambda", a.lambda},   {"p", a.p},
          {"rank", a.rank},       {"zero_sigma_dims", a.zero_sigma_dims},
          {"checks", checks},     {"passed", a.passed()}};
}

inline nlohmann::json to_json(const AuditReport& r) {
  nlohmann::json configs = nlohmann::json::array();
  for (const auto& c : r.configurations) {
    configs.push_back({{"entry", to_json(c.entry)},
                       {"contrast", to_json(c.contrast)},
                       {"excluded_items", c.similarity.excluded_rows},
                       {"warnings", c.warnings}});
  }
  nlohmann::json out = {{"provenance", r.provenance}, {"configurations", configs}};
  out["full_rank"] = r.full_rank ? to_json(*r.full_rank) : nlohmann::json(nullptr);
  return out;
}

}  // namespace cosaudit
