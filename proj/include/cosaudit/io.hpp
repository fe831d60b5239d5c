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

// File formats:
//   matrix CSV  - one row per line, comma-separated, no header, %.17g
//   PGM heatmap - plain (P2) graymap, values mapped linearly onto 0..255
//   JSON        - SimConfig, GroundTruth, EmbeddingPair meta, sidecars

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "cosaudit/matrix_core.hpp"
#include "cosaudit/mf_solvers.hpp"
#include "cosaudit/remedies.hpp"
#include "cosaudit/similarity.hpp"
#include "cosaudit/synthgen.hpp"

namespace cosaudit::io {

namespace fs = std::filesystem;
using nlohmann::json;

class IoError : public Error {
 public:
  using Error::Error;
};

// 17 significant digits: round-trips every double.
inline std::string format_number(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

inline std::string matrix_to_csv(const DataMatrix& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 24);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_number(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline DataMatrix matrix_from_csv(std::string_view text, const std::string& origin = "<csv>") {
  std::vector<double> values;
  Index rows = 0, cols = -1;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    Index count = 0;
    std::size_t field = 0;
    for (;;) {
      std::size_t comma = line.find(',', field);
      std::string_view token =
          line.substr(field, comma == std::string_view::npos ? std::string_view::npos
                                                             : comma - field);
      while (!token.empty() && (token.front() == ' ' || token.front() == '\t'))
        token.remove_prefix(1);
      while (!token.empty() && (token.back() == ' ' || token.back() == '\t'))
        token.remove_suffix(1);
      if (!token.empty() && token.front() == '+') token.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() ||
          !std::isfinite(v)) {
        throw IoError(origin + ": line " + std::to_string(rows + 1) + ": bad value '" +
                      std::string(token) + "'");
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      field = comma + 1;
    }
    if (cols < 0) cols = count;
    if (count != cols) {
      throw IoError(origin + ": line " + std::to_string(rows + 1) + " has " +
                    std::to_string(count) + " fields, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw IoError(origin + ": empty matrix");
  DataMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline DataMatrix read_matrix_csv(const fs::path& path) {
  return matrix_from_csv(read_text(path), path.string());
}

inline void write_matrix_csv(const fs::path& path, const DataMatrix& m) {
  write_text(path, matrix_to_csv(m));
}

// A vector stored as a single CSV row or a single CSV column.
inline Vector read_vector_csv(const fs::path& path) {
  const DataMatrix m = read_matrix_csv(path);
  if (m.rows() != 1 && m.cols() != 1) {
    throw IoError(path.string() + ": expected a single row or column");
  }
  return m.rows() == 1 ? Vector(m.row(0).transpose()) : Vector(m.col(0));
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// PGM heatmaps.

struct GrayMapping {
  double lo = -1.0;
  double hi = 1.0;
};

inline int gray_level(double v, const GrayMapping& map) {
  if (!(map.hi > map.lo)) return 0;
  const double t = (v - map.lo) / (map.hi - map.lo);
  return static_cast<int>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
}

inline std::string matrix_to_pgm(const DataMatrix& m, const GrayMapping& map) {
  std::string out = "P2\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) +
                    "\n255\n";
  for (Index i = 0; i < m.rows(); ++i) {
    std::size_t line = 0;
    for (Index j = 0; j < m.cols(); ++j) {
      const std::string level = std::to_string(gray_level(m(i, j), map));
      // Plain PGM lines must stay within 70 characters.
      if (line > 0 && line + 1 + level.size() > 70) {
        out += '\n';
        line = 0;
      } else if (line > 0) {
        out += ' ';
        ++line;
      }
      out += level;
      line += level.size();
    }
    out += '\n';
  }
  return out;
}

// Cosine maps [-1, 1]; dot maps the observed [min, max].
inline GrayMapping mapping_for(Metric metric, const DataMatrix& m) {
  if (metric == Metric::kCosine || m.size() == 0) return {-1.0, 1.0};
  return {m.minCoeff(), m.maxCoeff()};
}

inline json to_json(const GrayMapping& map) {
  return {{"lo", map.lo}, {"hi", map.hi}, {"levels", 256},
          {"formula", "round(clamp((v - lo) / (hi - lo), 0, 1) * 255)"}};
}

// ---------------------------------------------------------------------------
// SimConfig / GroundTruth.

inline SimConfig sim_config_from_json(const json& j) {
  static const char* const kKeys[] = {"n", "p", "C", "cluster_probs", "beta_item_min",
                                      "beta_item_max", "beta_user", "seed"};
  if (!j.is_object()) throw ConfigError("sim", "must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw ConfigError(key, "unknown simulation key");
    }
  }
  SimConfig c;
  auto get_count = [&](const char* key, Index& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(key, "must be an integer");
    out = v.get<Index>();
  };
  auto get_real = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(key, "must be a number");
    out = v.get<double>();
  };
  get_count("n", c.n);
  get_count("p", c.p);
  get_count("C", c.clusters);
  get_real("beta_item_min", c.beta_item_min);
  get_real("beta_item_max", c.beta_item_max);
  get_real("beta_user", c.beta_user);
  if (j.contains("seed")) {
    const json& v = j.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError("seed", "must be a nonnegative integer");
    }
    c.seed = v.get<std::uint64_t>();
  }
  if (j.contains("cluster_probs")) {
    const json& v = j.at("cluster_probs");
    if (!v.is_array()) throw ConfigError("cluster_probs", "must be an array");
    for (const auto& q : v) {
      if (!q.is_number()) throw ConfigError("cluster_probs", "entries must be numbers");
      c.cluster_probs.push_back(q.get<double>());
    }
  }
  c.validate();
  return c;
}

inline json to_json(const SimConfig& c) {
  return {{"n", c.n},
          {"p", c.p},
          {"C", c.clusters},
          {"cluster_probs", c.resolved_cluster_probs()},
          {"beta_item_min", c.beta_item_min},
          {"beta_item_max", c.beta_item_max},
          {"beta_user", c.beta_user},
          {"seed", c.seed}};
}

inline json vector_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

inline json to_json(const GroundTruth& gt) {
  json prefs = json::array();
  for (Index u = 0; u < gt.user_prefs.rows(); ++u) {
    prefs.push_back(vector_json(gt.user_prefs.row(u).transpose()));
  }
  return {{"item_cluster", gt.item_cluster},
          {"item_popularity", vector_json(gt.item_popularity)},
          {"cluster_exponents", vector_json(gt.cluster_exponents)},
          {"user_prefs", prefs}};
}

inline GroundTruth ground_truth_from_json(const json& j) {
  try {
    GroundTruth gt;
    gt.item_cluster = j.at("item_cluster").get<std::vector<Index>>();
    gt.item_popularity = vector_from_json(j.at("item_popularity"));
    gt.cluster_exponents = vector_from_json(j.at("cluster_exponents"));
    const json& prefs = j.at("user_prefs");
    const Index c = gt.cluster_exponents.size();
    gt.user_prefs.resize(static_cast<Index>(prefs.size()), c);
    for (std::size_t u = 0; u < prefs.size(); ++u) {
      const Vector row = vector_from_json(prefs[u]);
      if (row.size() != c) throw IoError("user_prefs row length differs from cluster count");
      gt.user_prefs.row(static_cast<Index>(u)) = row.transpose();
    }
    if (gt.item_popularity.size() != gt.num_items()) {
      throw IoError("item_popularity length differs from item_cluster");
    }
    for (Index ci : gt.item_cluster) {
      if (ci < 0 || ci >= c) throw IoError("item_cluster entry out of range");
    }
    return gt;
  } catch (const json::exception& e) {
    throw IoError(std::string("ground truth: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// EmbeddingPair directory: A.csv, B.csv, meta.json.

inline json pair_meta(const EmbeddingPair& pair) {
  return {{"lambda", pair.lambda},
          {"rank", pair.rank},
          {"objective", objective_number(pair.objective)},
          {"objective_tag", to_string(pair.objective)},
          {"scaled", pair.scaled},
          {"sigma", vector_json(pair.sigma)},
          {"warnings", pair.warnings}};
}

inline void write_pair(const fs::path& dir, const EmbeddingPair& pair, json extra = json::object()) {
  write_matrix_csv(dir / "A.csv", pair.A);
  write_matrix_csv(dir / "B.csv", pair.B);
  json meta = pair_meta(pair);
  meta.update(extra);
  write_json(dir / "meta.json", meta);
}

inline EmbeddingPair read_pair(const fs::path& dir) {
  EmbeddingPair pair;
  pair.A = read_matrix_csv(dir / "A.csv");
  pair.B = read_matrix_csv(dir / "B.csv");
  const json meta = read_json(dir / "meta.json");
  try {
    pair.lambda = meta.at("lambda").get<double>();
    pair.rank = meta.at("rank").get<Index>();
    pair.objective = objective_from_number(meta.at("objective").get<int>());
    pair.scaled = meta.value("scaled", false);
    pair.sigma = vector_from_json(meta.at("sigma"));
    pair.warnings = meta.value("warnings", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw IoError((dir / "meta.json").string() + ": " + e.what());
  }
  if (pair.A.rows() != pair.B.rows() || pair.A.cols() != pair.B.cols() ||
      pair.A.cols() != pair.rank) {
    throw IoError(dir.string() + ": factor shapes disagree with meta.json");
  }
  return pair;
}

// ---------------------------------------------------------------------------
// Similarity export: <stem>.csv, <stem>.json sidecar, optional <stem>.pgm.

inline json similarity_sidecar(const SimilarityMatrix& s, const json& provenance) {
  return {{"kind", to_string(s.kind)},
          {"metric", to_string(s.metric)},
          {"rows", s.values.rows()},
          {"cols", s.values.cols()},
          {"row_ids", s.row_ids},
          {"col_ids", s.col_ids},
          {"excluded_rows", s.excluded_rows},
          {"excluded_cols", s.excluded_cols},
          {"provenance", provenance}};
}

inline void write_similarity(const fs::path& dir, const std::string& stem,
                             const SimilarityMatrix& s, const json& provenance, bool heatmap) {
  write_matrix_csv(dir / (stem + ".csv"), s.values);
  json sidecar = similarity_sidecar(s, provenance);
  if (heatmap) {
    const GrayMapping map = mapping_for(s.metric, s.values);
    write_text(dir / (stem + ".pgm"), matrix_to_pgm(s.values, map));
    sidecar["heatmap"] = {{"file", stem + ".pgm"}, {"mapping", to_json(map)}};
  }
  write_json(dir / (stem + ".json"), sidecar);
}

inline json to_json(const Standardization& s) {
  return {{"column_means", vector_json(s.column_means)},
          {"column_stds", vector_json(s.column_stds)},
          {"std_divisor", "n-1"}};
}

// FNV-1a, 64 bit; used for config fingerprints in run manifests.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace cosaudit::io
