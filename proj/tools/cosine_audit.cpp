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

#include <cstdint>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cosaudit/cli.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  long long rank = 0;
  std::string family;
  int objective = 1;
  std::string metric;
  bool standardize = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "RNG seed (overrides sim.seed)");
  cmd->add_option("--lambda", f.lambda, "regularization weight")->check(CLI::NonNegativeNumber);
  cmd->add_option("--rank", f.rank, "embedding dimension k")->check(CLI::PositiveNumber);
  cmd->add_option("--family", f.family, "scaling family")
      ->check(CLI::IsMember({"identity", "collapse", "inverse", "symmetric-matching"}));
  cmd->add_option("--objective", f.objective, "training objective")->check(CLI::IsMember({1, 2}));
  cmd->add_option("--metric", f.metric, "similarity metric")
      ->check(CLI::IsMember({"cosine", "dot"}));
  cmd->add_flag("--standardize", f.standardize, "standardize columns of X before solving");
}

cosaudit::cli::Options to_options(const CLI::App* cmd, const Flags& f) {
  cosaudit::cli::Options o;
  auto given = [cmd](const char* name) { return cmd->count(name) > 0; };
  if (given("--config")) o.config_path = f.config;
  if (given("--out")) o.out_dir = f.out;
  if (given("--seed")) o.seed = f.seed;
  if (given("--lambda")) o.lambda = f.lambda;
  if (given("--rank")) o.rank = static_cast<cosaudit::Index>(f.rank);
  if (given("--family")) o.family = f.family;
  if (given("--objective")) o.objective = f.objective;
  if (given("--metric")) o.metric = f.metric;
  o.standardize = f.standardize;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form MF embeddings and cosine-similarity audits"};
  app.require_subcommand(1);

  Flags flags;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const cosaudit::cli::Options&);
  };
  const Command commands[] = {
      {"simulate", "generate clustered power-law interaction data", cosaudit::cli::cmd_simulate},
      {"solve", "fit an embedding pair in closed form", cosaudit::cli::cmd_solve},
      {"similarity", "export item/user similarity matrices", cosaudit::cli::cmd_similarity},
      {"audit", "compare item-item cosine across objectives and rescalings",
       cosaudit::cli::cmd_audit},
      {"fullrank-check", "verify the full-rank identities (k = p)",
       cosaudit::cli::cmd_fullrank_check},
  };
  for (const auto& c : commands) add_flags(app.add_subcommand(c.name, c.help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cosaudit::cli::kExitConfig;
  }
  for (const auto& c : commands) {
    const CLI::App* cmd = app.get_subcommand(c.name);
    if (cmd->parsed()) return c.run(to_options(cmd, flags));
  }
  return cosaudit::cli::kExitConfig;
}
