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

// Synthetic user-item interactions with planted item clusters.
//
// Items are assigned to clusters, each cluster gets a power-law exponent,
// and item popularity within a cluster follows a Zipf law over generation
// order. Users draw cluster preferences from a symmetric Dirichlet, an
// activity level from a bounded Pareto, and then that many distinct items.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "cosaudit/matrix_core.hpp"
#include "cosaudit/random.hpp"

namespace cosaudit {

// Invalid configuration value; key() names the offending config key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

inline constexpr double kPreferenceConcentration = 0.5;
inline constexpr Index kMinItemsPerUser = 5;

struct SimConfig {
  Index n = 20000;
  Index p = 1000;
  Index clusters = 5;
  std::vector<double> cluster_probs;  // empty means uniform 1/C
  double beta_item_min = 0.25;
  double beta_item_max = 1.5;
  double beta_user = 0.5;
  std::uint64_t seed = 0;

  std::vector<double> resolved_cluster_probs() const {
    if (!cluster_probs.empty()) return cluster_probs;
    return std::vector<double>(static_cast<std::size_t>(std::max<Index>(clusters, 0)),
                               1.0 / static_cast<double>(clusters));
  }

  void validate() const {
    if (n < 1) throw ConfigError("n", "must be >= 1");
    if (p < 1) throw ConfigError("p", "must be >= 1");
    if (clusters < 1) throw ConfigError("C", "must be >= 1");
    const auto probs = resolved_cluster_probs();
    if (static_cast<Index>(probs.size()) != clusters) {
      throw ConfigError("cluster_probs", "length must equal C");
    }
    double total = 0.0;
    for (double q : probs) {
      if (!std::isfinite(q) || q < 0.0) {
        throw ConfigError("cluster_probs", "entries must be finite and >= 0");
      }
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("cluster_probs", "must sum to 1");
    if (!std::isfinite(beta_item_min)) throw ConfigError("beta_item_min", "must be finite");
    if (!std::isfinite(beta_item_max)) throw ConfigError("beta_item_max", "must be finite");
    if (beta_item_min > beta_item_max) {
      throw ConfigError("beta_item_min", "must not exceed beta_item_max");
    }
    if (!std::isfinite(beta_user) || beta_user < 0.0) {
      throw ConfigError("beta_user", "must be finite and >= 0");
    }
  }
};

struct GroundTruth {
  std::vector<Index> item_cluster;  // c_i in [0, C)
  Vector item_popularity;           // p_i > 0
  Vector cluster_exponents;         // beta_c
  DataMatrix user_prefs;            // n x C, rows sum to 1

  Index num_items() const { return static_cast<Index>(item_cluster.size()); }
  Index num_users() const { return user_prefs.rows(); }
  Index num_clusters() const { return cluster_exponents.size(); }
};

struct InteractionSample {
  DataMatrix matrix;                 // n x p, binary
  std::vector<Index> items_per_user;  // k_u
};

namespace detail {

// Index of the category selected by uniform draw u against weights.
// Falls back to the last positive weight when rounding overshoots.
inline Index pick_weighted(const double* weights, Index count, double total, double u) {
  const double target = u * total;
  double acc = 0.0;
  Index last_positive = -1;
  for (Index i = 0; i < count; ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

}  // namespace detail

inline GroundTruth sample_ground_truth(const SimConfig& config) {
  config.validate();
  const auto probs = config.resolved_cluster_probs();
  const Index p = config.p;
  const Index c = config.clusters;

  GroundTruth gt;
  gt.item_cluster.resize(static_cast<std::size_t>(p));
  Rng cluster_rng(config.seed, Stream::kClusters);
  for (auto& ci : gt.item_cluster) {
    ci = detail::pick_weighted(probs.data(), c, 1.0, cluster_rng.uniform());
  }

  gt.cluster_exponents.resize(c);
  Rng exponent_rng(config.seed, Stream::kExponents);
  for (Index k = 0; k < c; ++k) {
    gt.cluster_exponents(k) = exponent_rng.uniform(config.beta_item_min, config.beta_item_max);
  }

  // Zipf popularity by rank within the cluster, normalized per cluster.
  gt.item_popularity.resize(p);
  std::vector<Index> rank(static_cast<std::size_t>(c), 0);
  Vector cluster_mass = Vector::Zero(c);
  for (Index i = 0; i < p; ++i) {
    const Index ci = gt.item_cluster[static_cast<std::size_t>(i)];
    const double r = static_cast<double>(++rank[static_cast<std::size_t>(ci)]);
    gt.item_popularity(i) = std::pow(r, -gt.cluster_exponents(ci));
    cluster_mass(ci) += gt.item_popularity(i);
  }
  for (Index i = 0; i < p; ++i) {
    gt.item_popularity(i) /= cluster_mass(gt.item_cluster[static_cast<std::size_t>(i)]);
  }

  gt.user_prefs.resize(config.n, c);
  Rng pref_rng(config.seed, Stream::kPreferences);
  for (Index u = 0; u < config.n; ++u) {
    double total = 0.0;
    for (Index k = 0; k < c; ++k) {
      gt.user_prefs(u, k) = pref_rng.gamma(kPreferenceConcentration);
      total += gt.user_prefs(u, k);
    }
    gt.user_prefs.row(u) /= total;
  }
  return gt;
}

// p_ui proportional to user_prefs(u, c_i) * p_i, normalized over items.
inline Vector user_item_probabilities(const GroundTruth& gt, Index user) {
  if (user < 0 || user >= gt.num_users()) {
    throw InvalidArgument("user " + std::to_string(user) + " out of range");
  }
  Vector probs(gt.num_items());
  for (Index i = 0; i < gt.num_items(); ++i) {
    probs(i) = gt.user_prefs(user, gt.item_cluster[static_cast<std::size_t>(i)]) *
               gt.item_popularity(i);
  }
  return probs / probs.sum();
}

// Bounded Pareto draw of the number of items for one user.
inline Index sample_activity(Rng& rng, double beta_user, Index p) {
  const Index k_max = std::max<Index>(1, p / 2);
  const Index k_min = std::min(kMinItemsPerUser, k_max);
  const double raw = static_cast<double>(k_min) * std::pow(rng.uniform(), -beta_user);
  if (!(raw < static_cast<double>(k_max))) return k_max;
  return std::clamp(static_cast<Index>(std::llround(raw)), k_min, k_max);
}

inline std::pair<InteractionSample, GroundTruth> sample_interactions(const SimConfig& config) {
  GroundTruth gt = sample_ground_truth(config);
  const Index n = config.n;
  const Index p = config.p;

  InteractionSample sample;
  sample.matrix = DataMatrix::Zero(n, p);
  sample.items_per_user.resize(static_cast<std::size_t>(n));

  Rng activity_rng(config.seed, Stream::kActivity);
  for (auto& k : sample.items_per_user) k = sample_activity(activity_rng, config.beta_user, p);

  // Sequential draws without replacement, renormalizing after each pick.
  Rng pick_rng(config.seed, Stream::kPicks);
  std::vector<double> weights(static_cast<std::size_t>(p));
  for (Index u = 0; u < n; ++u) {
    const Vector probs = user_item_probabilities(gt, u);
    Index positive = 0;
    for (Index i = 0; i < p; ++i) {
      weights[static_cast<std::size_t>(i)] = probs(i);
      if (probs(i) > 0.0) ++positive;
    }
    auto& k_u = sample.items_per_user[static_cast<std::size_t>(u)];
    k_u = std::min(k_u, positive);
    for (Index draw = 0; draw < k_u; ++draw) {
      const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
      const Index item = detail::pick_weighted(weights.data(), p, total, pick_rng.uniform());
      sample.matrix(u, item) = 1.0;
      weights[static_cast<std::size_t>(item)] = 0.0;
    }
  }
  return {std::move(sample), std::move(gt)};
}

// 1 where two items share a cluster, 0 otherwise.
inline DataMatrix ground_truth_similarity(const GroundTruth& gt) {
  const Index p = gt.num_items();
  DataMatrix s(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      s(i, j) = gt.item_cluster[static_cast<std::size_t>(i)] ==
                        gt.item_cluster[static_cast<std::size_t>(j)]
                    ? 1.0
                    : 0.0;
  return s;
}

// Item permutation: by cluster, then descending popularity, then index.
inline std::vector<Index> export_item_order(const GroundTruth& gt) {
  std::vector<Index> order(static_cast<std::size_t>(gt.num_items()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const Index ca = gt.item_cluster[static_cast<std::size_t>(a)];
    const Index cb = gt.item_cluster[static_cast<std::size_t>(b)];
    if (ca != cb) return ca < cb;
    return gt.item_popularity(a) > gt.item_popularity(b);
  });
  return order;
}

}  // namespace cosaudit
