// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace railbeam {

/// Outcome of one self-check. `value` is the measured quantity the check
/// compares against its bound (error, count, or 0/1).
struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    std::string detail;
    double seconds = 0.0;
    nlohmann::json to_json() const;
};

/// Gradient oracle over every layer kind and the reduced csai and cell
/// models; `seeds` random initialisations each, max relative error < 1e-4.
CheckResult check_gradients(std::size_t seeds = 20);

/// csai with a frozen selection matrix against the downsampled convlstm it
/// was built from: measurements bitwise, forward within 1e-12.
CheckResult check_bridge(std::uint64_t seed = 1);

/// hof_rate and conservation formulas on hand-built logs.
CheckResult check_kpi_formulas();

/// classify_hof against hand labels for every failure kind.
CheckResult check_hof_fixture();

/// T310 timer cases: constant low SINR, short dip, oscillation.
CheckResult check_rlf_timers();

/// With oracle forecasts the first ai_option1 handover command is never later
/// than the traditional one, on `n` random traces.
CheckResult check_paired_traces(std::size_t n = 100, std::uint64_t seed = 1);

/// A flipped byte in a checkpoint is reported with the file path.
CheckResult check_checkpoint_corruption(const std::string& scratch_dir);

/// A small pipeline run twice yields byte-identical report CSVs.
CheckResult check_determinism(const std::string& scratch_dir, std::size_t workers = 1);

/// Every check above, in order.
std::vector<CheckResult> run_verify_suite(const std::string& scratch_dir, std::size_t workers = 1);

} // namespace railbeam
