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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "channel.hpp"
#include "codebook.hpp"
#include "datasets.hpp"
#include "handover.hpp"
#include "json.hpp"
#include "models.hpp"
#include "scenario.hpp"
#include "trace.hpp"
#include "train.hpp"

namespace railbeam {

struct BeamStageConfig {
    bool enabled = true;
    Ratio ratio{1, 16};
    SelectionPattern pattern = SelectionPattern::equidistant;
    std::size_t t_in = 4;
    std::size_t horizon = 1;
    std::size_t n_samples = 10000;
    std::size_t meas_period_slots = 4;
    NoiseConfig noise{true, 1.0};
    std::vector<PredictorId> predictors{PredictorId::nonai_best_measured, PredictorId::lstm_downsampled,
                                        PredictorId::cnn_fc_downsampled, PredictorId::convlstm_downsampled,
                                        PredictorId::csai};
    TrainConfig train;
    bool csai_warm_start = true; ///< start csai from the trained convlstm weights
    bool write_datasets = true;
};

struct CellStageConfig {
    bool enabled = true;
    std::optional<ScenarioConfig> scenario; ///< cell-level scenario; defaults to the top-level one
    std::vector<CellVariant> variants{CellVariant::all_beam_cell, CellVariant::part_cell, CellVariant::part_beam};
    std::vector<PredictorId> predictors{PredictorId::cell_cnn};
    std::size_t t_in = 6;
    std::size_t t_out = 4;
    std::size_t n_samples = 10000;
    TraceConfig trace{4, {true, 1.0}, {}, 1.0};
    TrainConfig train;
    std::size_t sim_passes = 2;
    bool write_datasets = true;
};

struct ExperimentConfig {
    ScenarioConfig scenario;
    ChannelConfig channel;
    BeamStageConfig beam;
    CellStageConfig cell;
    HandoverConfig handover;
    std::vector<double> speeds{60.0, 120.0, 350.0, 500.0};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string output_dir = "railbeam_out";
    bool full_scale = false;

    void validate() const;
    nlohmann::json to_json() const;
    /// Hash of everything except output_dir.
    std::string hash() const;
    const ScenarioConfig& cell_scenario() const { return cell.scenario ? *cell.scenario : scenario; }
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

struct PipelineOptions {
    std::size_t workers = 0;
    std::ostream* log = nullptr;
};

/// Runs every enabled stage for the sweep grid, resuming runs whose
/// completion marker matches the config hash, then writes the reports.
/// Returns the summary written to summary.json.
nlohmann::json run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& opts = {});

enum class ReportStyle { fig3, table2 };
ReportStyle report_style_from_string(const std::string& s);

/// Rebuilds a report from the per-run results of an artifact directory.
std::string build_report_csv(const std::string& dir, ReportStyle style);
nlohmann::json build_report_json(const std::string& dir, ReportStyle style);

/// Directory-name fragment for a speed, e.g. 60 -> "v60".
std::string speed_tag(double speed_kmh);

} // namespace railbeam
