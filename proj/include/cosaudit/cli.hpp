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

// Subcommands of the cosine_audit tool. Each takes resolved options and
// returns a process exit code:
//   0 success, 2 config error, 3 compute error, 4 identity-check failure.
//
// One JSON config drives every subcommand. Sections:
//   sim        simulator parameters (SimConfig keys)
//   input      {"X": csv, "ground_truth": json} or {"dense": {n, p, seed}}
//   solve      {objective, lambda, rank, family, scaling_file, standardize}
//   similarity {metric, kinds}
//   plan       [{objective, lambda, rank, family}, ...]
//   output     {dir, heatmaps}
// Command-line flags override config keys, which override defaults.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cosaudit/analysis.hpp"
#include "cosaudit/io.hpp"
#include "cosaudit/matrix_core.hpp"
#include "cosaudit/mf_solvers.hpp"
#include "cosaudit/random.hpp"
#include "cosaudit/remedies.hpp"
#include "cosaudit/rescale.hpp"
#include "cosaudit/similarity.hpp"
#include "cosaudit/synthgen.hpp"

namespace cosaudit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitCompute = 3,
  kExitCheckFailed = 4,
};

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kThreadsEnv = "COSINE_AUDIT_THREADS";

struct Options {
  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<Index> rank;
  std::optional<std::string> family;
  std::optional<int> objective;
  std::optional<std::string> metric;
  bool standardize = false;
  std::ostream* log = &std::cerr;
};

// Config after applying flag overrides.
struct Settings {
  json config = json::object();
  fs::path out_dir = "out";
  bool heatmaps = true;
};

namespace detail {

inline const json& section(const json& config, const char* name) {
  static const json empty = json::object();
  if (!config.contains(name)) return empty;
  const json& s = config.at(name);
  if (name == std::string("plan") ? !s.is_array() : !s.is_object()) {
    throw ConfigError(name, "has the wrong JSON type");
  }
  return s;
}

template <typename T>
T value_or(const json& sec, const char* section_name, const char* key, T fallback) {
  if (!sec.contains(key)) return fallback;
  try {
    return sec.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(section_name) + "." + key, "has the wrong JSON type");
  }
}

inline Settings resolve(const Options& opts) {
  Settings s;
  if (opts.config_path) {
    try {
      s.config = io::read_json(*opts.config_path);
    } catch (const io::IoError& e) {
      throw ConfigError("config", e.what());
    }
    if (!s.config.is_object()) throw ConfigError("config", "top level must be a JSON object");
  }
  json& c = s.config;
  // A bare SimConfig file is accepted as the "sim" section.
  if (c.contains("n") || c.contains("p") || c.contains("C")) {
    json sim = c;
    c = json::object();
    c["sim"] = std::move(sim);
  }
  if (opts.seed) {
    c["sim"]["seed"] = *opts.seed;
    if (c.contains("input") && c["input"].contains("dense")) c["input"]["dense"]["seed"] = *opts.seed;
  }
  if (opts.lambda) c["solve"]["lambda"] = *opts.lambda;
  if (opts.rank) c["solve"]["rank"] = *opts.rank;
  if (opts.family) c["solve"]["family"] = *opts.family;
  if (opts.objective) c["solve"]["objective"] = *opts.objective;
  if (opts.metric) c["similarity"]["metric"] = *opts.metric;
  if (opts.standardize) c["solve"]["standardize"] = true;
  if (opts.out_dir) c["output"]["dir"] = *opts.out_dir;

  const json& out = section(c, "output");
  s.out_dir = value_or<std::string>(out, "output", "dir", "out");
  s.heatmaps = value_or<bool>(out, "output", "heatmaps", true);
  return s;
}

// The config minus its output section: what determines the computed
// results, independent of where they are written.
inline json result_config(const Settings& s) {
  json c = s.config;
  c.erase("output");
  return c;
}

inline SimConfig sim_config(const Settings& s) {
  return io::sim_config_from_json(section(s.config, "sim"));
}

struct Data {
  DataMatrix x;
  std::optional<GroundTruth> gt;
  std::optional<InteractionSample> sample;
  std::uint64_t seed = 0;
};

// X from input.X, input.dense, or the simulator (in that order).
inline Data load_data(const Settings& s, bool need_ground_truth) {
  const json& input = section(s.config, "input");
  Data d;
  if (input.contains("X")) {
    const auto x_path = value_or<std::string>(input, "input", "X", "");
    try {
      d.x = io::read_matrix_csv(x_path);
    } catch (const io::IoError& e) {
      throw ConfigError("input.X", e.what());
    }
    if (input.contains("ground_truth")) {
      try {
        d.gt = io::ground_truth_from_json(
            io::read_json(value_or<std::string>(input, "input", "ground_truth", "")));
      } catch (const io::IoError& e) {
        throw ConfigError("input.ground_truth", e.what());
      }
    } else if (need_ground_truth) {
      throw ConfigError("input.ground_truth", "required when input.X is given");
    }
    return d;
  }
  if (input.contains("dense")) {
    const json& dense = input.at("dense");
    const Index n = value_or<Index>(dense, "input.dense", "n", 200);
    const Index p = value_or<Index>(dense, "input.dense", "p", 50);
    if (n < 1) throw ConfigError("input.dense.n", "must be >= 1");
    if (p < 1) throw ConfigError("input.dense.p", "must be >= 1");
    d.seed = value_or<std::uint64_t>(dense, "input.dense", "seed", 0);
    if (need_ground_truth) throw ConfigError("input.dense", "has no ground truth clusters");
    d.x = seeded_uniform_matrix(n, p, d.seed);
    return d;
  }
  const SimConfig config = sim_config(s);
  auto [sample, gt] = sample_interactions(config);
  d.x = sample.matrix;
  d.gt = std::move(gt);
  d.sample = std::move(sample);
  d.seed = config.seed;
  return d;
}

inline unsigned worker_threads() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      const long v = std::stol(env);
      if (v >= 1) cap = std::min(cap, static_cast<unsigned>(v));
    } catch (const std::exception&) {
      throw ConfigError(kThreadsEnv, "must be a positive integer");
    }
  }
  return cap;
}

// Records written files so a failed run can remove its partial outputs.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  void text(const std::string& name, std::string_view body) {
    files_.push_back(name);
    io::write_text(dir_ / name, body);
  }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
  void matrix(const std::string& name, const DataMatrix& m) { text(name, io::matrix_to_csv(m)); }

  void similarity(const std::string& stem, const SimilarityMatrix& sm, const json& provenance,
                  bool heatmap) {
    files_.push_back(stem + ".csv");
    files_.push_back(stem + ".json");
    if (heatmap) files_.push_back(stem + ".pgm");
    io::write_similarity(dir_, stem, sm, provenance, heatmap);
  }

  void manifest(const std::string& command, const Settings& s, std::uint64_t seed) {
    std::vector<std::string> files = files_;
    std::sort(files.begin(), files.end());
    json_file("manifest.json", {{"command", command},
                                {"config_hash", io::hex64(io::fnv1a64(result_config(s).dump()))},
                                {"seed", seed},
                                {"format_version", kFormatVersion},
                                {"files", files}});
  }

  void remove_all() noexcept {
    for (const auto& f : files_) {
      std::error_code ec;
      fs::remove(dir_ / f, ec);
    }
    files_.clear();
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct SolveSettings {
  Objective objective = Objective::kProductReg;
  double lambda = 10000.0;
  Index rank = 50;
  std::string family = "identity";
  std::optional<std::string> scaling_file;
  bool standardize = false;
};

inline SolveSettings solve_settings(const Settings& s) {
  const json& sec = section(s.config, "solve");
  SolveSettings out;
  try {
    out.objective = objective_from_number(value_or<int>(sec, "solve", "objective", 1));
  } catch (const InvalidArgument& e) {
    throw ConfigError("solve.objective", e.what());
  }
  out.lambda = value_or<double>(sec, "solve", "lambda",
                                out.objective == Objective::kProductReg ? 10000.0 : 100.0);
  if (!std::isfinite(out.lambda) || out.lambda < 0.0) {
    throw ConfigError("solve.lambda", "must be finite and >= 0");
  }
  out.rank = value_or<Index>(sec, "solve", "rank", 50);
  if (out.rank < 1) throw ConfigError("solve.rank", "must be >= 1");
  out.family = value_or<std::string>(sec, "solve", "family", "identity");
  try {
    parse_family(out.family);
  } catch (const InvalidArgument& e) {
    throw ConfigError("solve.family", e.what());
  }
  if (sec.contains("scaling_file")) {
    out.scaling_file = value_or<std::string>(sec, "solve", "scaling_file", "");
    if (out.family != "identity") {
      throw ConfigError("solve.scaling_file", "cannot be combined with a non-identity family");
    }
  }
  out.standardize = value_or<bool>(sec, "solve", "standardize", false);
  return out;
}

inline std::vector<PlanEntry> plan_entries(const Settings& s) {
  const json& plan = section(s.config, "plan");
  const json& solve = section(s.config, "solve");
  const bool rank_override = solve.contains("rank");
  const Index rank = value_or<Index>(solve, "solve", "rank", 50);
  std::vector<PlanEntry> entries;
  if (plan.empty()) {
    entries = default_plan(rank);
  } else {
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const std::string where = "plan[" + std::to_string(i) + "]";
      const json& e = plan[i];
      if (!e.is_object()) throw ConfigError(where, "must be an object");
      PlanEntry entry;
      try {
        entry.objective = objective_from_number(value_or<int>(e, where.c_str(), "objective", 1));
        entry.family = parse_family(value_or<std::string>(e, where.c_str(), "family", "identity"));
      } catch (const InvalidArgument& err) {
        throw ConfigError(where, err.what());
      }
      if (!e.contains("lambda")) throw ConfigError(where + ".lambda", "is required");
      entry.lambda = value_or<double>(e, where.c_str(), "lambda", 0.0);
      entry.rank = value_or<Index>(e, where.c_str(), "rank", rank);
      entries.push_back(entry);
    }
  }
  for (auto& e : entries) {
    if (rank_override) e.rank = rank;
    if (!std::isfinite(e.lambda) || e.lambda < 0.0) {
      throw ConfigError("plan.lambda", "must be finite and >= 0");
    }
    if (e.rank < 1) throw ConfigError("plan.rank", "must be >= 1");
  }
  return entries;
}

inline EmbeddingPair solve_from_settings(const DataMatrix& x, const SolveSettings& ss) {
  const Index max_rank = std::min(x.rows(), x.cols());
  if (ss.rank > max_rank) {
    throw ConfigError("solve.rank", "exceeds min(n, p) = " + std::to_string(max_rank));
  }
  EmbeddingPair pair = solve(x, ss.rank, ss.lambda, ss.objective);
  if (ss.scaling_file) {
    Vector d;
    try {
      d = io::read_vector_csv(*ss.scaling_file);
    } catch (const io::IoError& e) {
      throw ConfigError("solve.scaling_file", e.what());
    }
    try {
      pair = apply_scaling(pair, DiagonalScaling(std::move(d)));
    } catch (const InvalidArgument& e) {
      throw ConfigError("solve.scaling_file", e.what());
    }
  } else {
    const ScalingFamily family = parse_family(ss.family);
    if (family != ScalingFamily::kIdentity) pair = apply_scaling(pair, named_scaling(pair, family));
  }
  return pair;
}

inline json solve_provenance(const SolveSettings& ss) {
  return {{"objective", objective_number(ss.objective)},
          {"lambda", ss.lambda},
          {"rank", ss.rank},
          {"family", ss.scaling_file ? "literal" : ss.family},
          {"standardized", ss.standardize}};
}

// Runs body, mapping exceptions to exit codes and cleaning up on failure.
template <typename Body>
int guarded(const Options& opts, const char* command, Body&& body) {
  std::ostream& log = *opts.log;
  try {
    return body();
  } catch (const ConfigError& e) {
    log << command << ": config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << command << ": compute error: " << e.what() << "\n";
    return kExitCompute;
  }
}

template <typename Body>
int with_outputs(OutputSet& out, Body&& body) {
  try {
    return body();
  } catch (...) {
    out.remove_all();
    throw;
  }
}

}  // namespace detail

// Writes X.csv, ground_truth.json and manifest.json.
inline int cmd_simulate(const Options& opts) {
  return detail::guarded(opts, "simulate", [&] {
    const Settings s = detail::resolve(opts);
    const SimConfig config = detail::sim_config(s);
    auto [sample, gt] = sample_interactions(config);
    detail::OutputSet out(s.out_dir);
    return detail::with_outputs(out, [&] {
      out.matrix("X.csv", sample.matrix);
      json gt_json = io::to_json(gt);
      gt_json["config"] = io::to_json(config);
      gt_json["items_per_user"] = sample.items_per_user;
      out.json_file("ground_truth.json", gt_json);
      out.manifest("simulate", s, config.seed);
      *opts.log << "simulate: wrote " << config.n << "x" << config.p << " interactions to "
                << s.out_dir.string() << "\n";
      return kExitOk;
    });
  });
}

// Writes the embedding pair directory (A.csv, B.csv, meta.json).
inline int cmd_solve(const Options& opts) {
  return detail::guarded(opts, "solve", [&] {
    const Settings s = detail::resolve(opts);
    const detail::SolveSettings ss = detail::solve_settings(s);
    detail::Data data = detail::load_data(s, false);
    std::optional<Standardization> standardization;
    if (ss.standardize) {
      standardization = standardize(data.x);
      data.x = standardization->data;
    }
    const EmbeddingPair pair = detail::solve_from_settings(data.x, ss);
    for (const auto& w : pair.warnings) *opts.log << "solve: warning: " << w << "\n";

    detail::OutputSet out(s.out_dir);
    return detail::with_outputs(out, [&] {
      out.matrix("A.csv", pair.A);
      out.matrix("B.csv", pair.B);
      json meta = io::pair_meta(pair);
      meta["family"] = ss.scaling_file ? "literal" : ss.family;
      meta["standardized"] = ss.standardize;
      out.json_file("meta.json", meta);
      if (standardization) out.json_file("standardization.json", io::to_json(*standardization));
      out.manifest("solve", s, data.seed);
      return kExitOk;
    });
  });
}

// Writes <kind>_<metric>.{csv,json,pgm} for each requested similarity kind.
inline int cmd_similarity(const Options& opts) {
  return detail::guarded(opts, "similarity", [&] {
    const Settings s = detail::resolve(opts);
    const detail::SolveSettings ss = detail::solve_settings(s);
    const json& sec = detail::section(s.config, "similarity");
    Metric metric;
    std::vector<SimilarityKind> kinds;
    try {
      metric = parse_metric(detail::value_or<std::string>(sec, "similarity", "metric", "cosine"));
      for (const auto& k : detail::value_or<std::vector<std::string>>(
               sec, "similarity", "kinds", {"item-item", "user-user", "user-item"})) {
        kinds.push_back(parse_kind(k));
      }
    } catch (const InvalidArgument& e) {
      throw ConfigError("similarity", e.what());
    }
    detail::Data data = detail::load_data(s, false);
    if (ss.standardize) data.x = standardize(data.x).data;
    const EmbeddingPair pair = detail::solve_from_settings(data.x, ss);

    std::vector<std::pair<std::string, SimilarityMatrix>> results;
    for (SimilarityKind kind : kinds) {
      SimilarityMatrix sm = similarity(kind, data.x, pair, metric, ZeroRowPolicy::kExclude);
      if (kind == SimilarityKind::kItemItem && data.gt) sm = order_for_export(sm, *data.gt);
      results.emplace_back(std::string(to_string(kind)) + "_" + to_string(metric), std::move(sm));
    }
    detail::OutputSet out(s.out_dir);
    return detail::with_outputs(out, [&] {
      const json provenance = detail::solve_provenance(ss);
      for (const auto& [stem, sm] : results) out.similarity(stem, sm, provenance, s.heatmaps);
      out.manifest("similarity", s, data.seed);
      return kExitOk;
    });
  });
}

// Runs the configuration plan on simulated (or supplied) data and writes
// per-configuration similarity CSV/PGM/JSON plus report.json.
inline int cmd_audit(const Options& opts) {
  return detail::guarded(opts, "audit", [&] {
    const Settings s = detail::resolve(opts);
    const std::vector<PlanEntry> plan = detail::plan_entries(s);
    const bool standardized = detail::value_or<bool>(detail::section(s.config, "solve"), "solve",
                                                     "standardize", false);
    const unsigned threads = detail::worker_threads();
    detail::Data data = detail::load_data(s, true);
    if (standardized) data.x = standardize(data.x).data;
    const GroundTruth& gt = *data.gt;
    for (const auto& e : plan) {
      if (e.rank > std::min(data.x.rows(), data.x.cols())) {
        throw ConfigError("plan.rank", "rank " + std::to_string(e.rank) + " exceeds min(n, p)");
      }
    }

    AuditReport report = compare_configurations(data.x, gt, plan, threads);
    for (const auto& e : plan) {
      if (e.rank == data.x.cols() && e.objective == Objective::kProductReg) {
        report.full_rank = audit_full_rank(data.x, e.lambda, data.seed);
        break;
      }
    }
    json plan_json = json::array();
    for (const auto& e : plan) plan_json.push_back(to_json(e));
    report.provenance = {{"config", detail::result_config(s)},
                         {"seed", data.seed},
                         {"n", data.x.rows()},
                         {"p", data.x.cols()},
                         {"standardized", standardized},
                         {"plan", plan_json}};

    SimilarityMatrix truth;
    truth.kind = SimilarityKind::kItemItem;
    truth.values = ground_truth_similarity(gt);
    truth.row_ids = cosaudit::detail::iota_ids(gt.num_items());
    truth.col_ids = truth.row_ids;
    truth = order_for_export(truth, gt);

    detail::OutputSet out(s.out_dir);
    return detail::with_outputs(out, [&] {
      out.similarity("ground_truth", truth, {{"source", "item clusters"}}, s.heatmaps);
      json report_json = to_json(report);
      for (std::size_t i = 0; i < report.configurations.size(); ++i) {
        const auto& c = report.configurations[i];
        const std::string stem = "config_" + std::to_string(i) + "_obj" +
                                 std::to_string(objective_number(c.entry.objective)) + "_" +
                                 to_string(c.entry.family);
        out.similarity(stem, c.similarity, to_json(c.entry), s.heatmaps);
        report_json["configurations"][i]["files"] = {{"csv", stem + ".csv"},
                                                     {"sidecar", stem + ".json"}};
        if (s.heatmaps) report_json["configurations"][i]["files"]["pgm"] = stem + ".pgm";
      }
      out.json_file("report.json", report_json);
      out.manifest("audit", s, data.seed);
      for (const auto& c : report.configurations) {
        *opts.log << "audit: obj" << objective_number(c.entry.objective) << " lambda="
                  << io::format_number(c.entry.lambda) << " k=" << c.entry.rank << " "
                  << to_string(c.entry.family) << " contrast="
                  << (c.contrast.contrast ? io::format_number(*c.contrast.contrast) : "absent")
                  << "\n";
      }
      return kExitOk;
    });
  });
}

// Checks the full-rank identities on X with k = p. Exit 4 names the first
// failing check.
inline int cmd_fullrank_check(const Options& opts) {
  return detail::guarded(opts, "fullrank-check", [&] {
    Settings s = detail::resolve(opts);
    // Default data: a seeded dense 200 x 50 matrix.
    if (!s.config.contains("input")) s.config["input"] = {{"dense", json::object()}};
    const json& solve = detail::section(s.config, "solve");
    const double lambda = detail::value_or<double>(solve, "solve", "lambda", 100.0);
    if (!std::isfinite(lambda) || lambda < 0.0) {
      throw ConfigError("solve.lambda", "must be finite and >= 0");
    }
    const detail::Data data = detail::load_data(s, false);
    if (data.x.cols() > data.x.rows()) throw ConfigError("input", "needs p <= n");
    if (solve.contains("rank") &&
        detail::value_or<Index>(solve, "solve", "rank", 0) != data.x.cols()) {
      throw ConfigError("solve.rank", "must equal p for the full-rank check");
    }
    const FullRankAudit audit = audit_full_rank(data.x, lambda, data.seed);

    detail::OutputSet out(s.out_dir);
    return detail::with_outputs(out, [&] {
      json report = to_json(audit);
      report["config"] = detail::result_config(s);
      out.json_file("fullrank_report.json", report);
      out.manifest("fullrank-check", s, data.seed);
      if (!audit.zero_sigma_dims.empty()) {
        *opts.log << "fullrank-check: " << audit.zero_sigma_dims.size()
                  << " zero singular values excluded\n";
      }
      for (const auto& c : audit.checks) {
        *opts.log << "fullrank-check: (" << c.name << ") "
                  << (!c.applicable ? "n/a " : c.passed ? "PASS" : "FAIL") << " value="
                  << io::format_number(c.value) << " threshold=" << io::format_number(c.threshold)
                  << "\n";
      }
      if (const IdentityCheck* failed = audit.first_failure()) {
        *opts.log << "fullrank-check: check (" << failed->name << ") failed: "
                  << failed->description << "\n";
        return static_cast<int>(kExitCheckFailed);
      }
      return static_cast<int>(kExitOk);
    });
  });
}

}  // namespace cosaudit::cli
