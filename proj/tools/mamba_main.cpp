// Copyright 2026 The mamba Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "mamba/commands.hpp"
#include "mamba/config.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::optional<std::string> budget_mode;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Run configuration (flat YAML)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--workers", o.workers, "Parallel workers")->check(CLI::PositiveNumber);
  cmd->add_option("--budget-mode", o.budget_mode, "Budget unit")
      ->check(CLI::IsMember({"seconds", "iterations"}));
}

mamba::RunConfig load(const Overrides& o) {
  mamba::RunConfig c = mamba::parse_config(o.config_path);
  if (o.out_dir) c.output_dir = *o.out_dir;
  if (o.seed) c.seed = *o.seed;
  c.workers = o.workers;
  if (o.budget_mode) {
    const auto mode = *o.budget_mode == "seconds" ? mamba::BudgetMode::kWallClockSeconds
                                                  : mamba::BudgetMode::kIterations;
    c.tuner.budget.mode = mode;
    c.final_budget.mode = mode;
  }
  c.validate();
  omp_set_num_threads(c.workers);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stein-discrepancy bandit tuning of SG-MCMC hyperparameters"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Overrides o;
  auto* tune = app.add_subcommand("tune", "Run the configured tuner");
  add_common(tune, o);

  auto* curve = app.add_subcommand("curve", "Reward curve over checkpoints");
  add_common(curve, o);

  std::string input;
  auto* evaluate = app.add_subcommand("evaluate", "Metrics for a chain.csv or selection.json");
  add_common(evaluate, o);
  evaluate->add_option("input", input, "chain.csv or selection.json")->required();

  std::size_t arms = 0;
  std::size_t eta = 3;
  double budget = 0.0;
  auto* schedule = app.add_subcommand("schedule", "Preview the halving schedule");
  schedule->add_option("M", arms, "Number of arms")->required();
  schedule->add_option("eta", eta, "Reduction factor")->required();
  schedule->add_option("T", budget, "Total budget")->required();

  auto* keys = app.add_subcommand("keys", "List configuration keys and defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mamba::kExitUsage;
  }

  return mamba::run_command(
      [&] {
        if (*schedule) {
          mamba::cmd_schedule(arms, eta, budget, std::cout);
        } else if (*keys) {
          std::cout << mamba::documented_keys();
        } else if (*tune) {
          mamba::cmd_tune(load(o), std::cerr);
        } else if (*curve) {
          mamba::cmd_curve(load(o), std::cerr);
        } else if (*evaluate) {
          mamba::cmd_evaluate(load(o), input, std::cout);
        }
      },
      std::cerr);
}
