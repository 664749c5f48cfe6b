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
#include <vector>

#include "handover.hpp"
#include "json.hpp"
#include "models.hpp"
#include "scenario.hpp"
#include "trace.hpp"

namespace railbeam {

/// Forecasts from a trained cell predictor, computed for every measurement
/// instance of the trace. Before a full input window exists the forecast
/// repeats the measured L3. For partial-measurement variants the current
/// estimate is the previous instance's one-step forecast.
ForecastFn model_forecast(const Predictor& p, const MeasurementTrace& trace);

/// Which forecaster drives the AI mode.
enum class ForecastSource { none, oracle, model };

struct SimulationRun {
    HandoverLog log;
    KpiReport kpi;
};

/// Simulates `passes` fresh trace realisations of one speed. Pass p uses
/// channel seed derive_seed(seed, 500 + p) and noise seed derive_seed(seed, 600 + p).
struct SimulationConfig {
    double speed_kmh = 60.0;
    std::size_t passes = 2;
    std::uint64_t seed = 1;
    TraceConfig trace{4, {true, 1.0}, {}, 1.0};
    HandoverConfig handover;
};

SimulationConfig simulation_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimulationConfig& c);

/// Trace realisations used by run_simulation, exposed so that several modes
/// can be evaluated on identical traces.
std::vector<MeasurementTrace> simulation_traces(const ScenarioConfig& scenario, const ChannelConfig& channel,
                                                const SimulationConfig& cfg, std::size_t workers = 0);

std::vector<SimulationRun> run_simulation(const std::vector<MeasurementTrace>& traces, const HandoverConfig& cfg,
                                          ForecastSource source, const Predictor* predictor = nullptr,
                                          std::size_t oracle_horizon = 4);

/// KPIs of several runs pooled by summing event counts.
KpiReport pool_kpis(const std::vector<SimulationRun>& runs);

} // namespace railbeam
