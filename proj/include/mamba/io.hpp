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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mamba/bandit.hpp"
#include "mamba/eval.hpp"
#include "mamba/samplers.hpp"

namespace mamba {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

/// `iteration,wall_time_sec,theta_0..theta_{d-1},grad_0..grad_{d-1}`
void write_chain_csv(std::ostream& out, const Chain& chain);
void write_chain_csv(const std::filesystem::path& path, const Chain& chain);
Chain read_chain_csv(std::istream& in);
Chain read_chain_csv(const std::filesystem::path& path);

/// `round,arm_id,sampler,log10_h,batch_fraction,leapfrog,budget,reward,pruned`
void write_rounds_csv(std::ostream& out, const std::vector<RoundRecord>& rounds,
                      const std::vector<Arm>& arms);

/// `checkpoint,mean,lower,upper`; missing points leave the values empty.
void write_curve_csv(std::ostream& out, const RewardCurve& curve);

/// `tuner,sampler,ksd,xi_std,n_samples`; absent metrics are empty fields.
void write_table_csv(std::ostream& out, const std::vector<ComparisonCell>& table);
void write_table_text(std::ostream& out, const std::vector<ComparisonCell>& table);

/// `mean,std` one row per coordinate.
ReferenceMoments read_reference_csv(const std::filesystem::path& path);

}  // namespace mamba
