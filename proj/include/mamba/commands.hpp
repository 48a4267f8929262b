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

#pragma once

#include <cstddef>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

#include "mamba/config.hpp"
#include "mamba/eval.hpp"
#include "mamba/model.hpp"

namespace mamba {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,        // bad config, flags or input files
  kExitAllDiverged = 3,  // every arm of a round diverged
  kExitFailure = 4,      // numerical or I/O failure
};

std::shared_ptr<const TargetModel> build_model(const ModelSpec& spec);

/// Analytic moments when the model has them, else the configured file.
std::optional<ReferenceMoments> load_reference(const RunConfig& config, const TargetModel& model);

/// Each command writes its artifacts under `config.output_dir` and logs
/// progress to `log`. Errors propagate as exceptions; see run_command.
void cmd_tune(const RunConfig& config, std::ostream& log);
void cmd_curve(const RunConfig& config, std::ostream& log);
void cmd_evaluate(const RunConfig& config, const std::filesystem::path& input, std::ostream& out);
void cmd_schedule(std::size_t num_arms, std::size_t eta, double total_budget, std::ostream& out);

int exit_code_for(const std::exception_ptr& error, std::ostream& err);

/// Runs `body`, mapping exceptions to exit codes with a one-line reason on `err`.
template <typename Body>
int run_command(Body&& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (...) {
    return exit_code_for(std::current_exception(), err);
  }
}

}  // namespace mamba
