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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trace.hpp"

namespace railbeam {

enum class HandoverMode { traditional, ai_option1, ai_option2 };
std::string to_string(HandoverMode m);
HandoverMode handover_mode_from_string(const std::string& s);

/// Durations are in seconds and are converted to whole ticks of `tick_s`.
struct HandoverConfig {
    double a3_offset_db = 3.0;
    double ttt_s = 0.160;
    double prep_delay_s = 0.050;
    double exec_interruption_s = 0.040;
    double qout_db = -8.0;
    double qin_db = -6.0;
    double t310_s = 1.0;
    double pingpong_window_s = 1.0;
    double reestablish_delay_s = 0.100;
    double tick_s = 0.010;
    HandoverMode mode = HandoverMode::traditional;

    void validate() const;
    std::size_t ticks(double seconds) const;
};

HandoverConfig handover_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HandoverConfig& c);

enum class EventKind { a3_start, a3_cancel, ho_command, ho_success, hof, rlf, reestablish, pingpong };
enum class HofKind { none, too_late, too_early, wrong_cell };
std::string to_string(EventKind k);
std::string to_string(HofKind k);
EventKind event_kind_from_string(const std::string& s);
HofKind hof_kind_from_string(const std::string& s);

struct Event {
    std::size_t t = 0; ///< tick
    EventKind kind = EventKind::a3_start;
    int serving = -1;
    int target = -1;
    HofKind hof = HofKind::none;
    bool operator==(const Event&) const = default;
};

struct HandoverLog {
    std::vector<Event> events;
    std::size_t n_ticks = 0;
    double tick_s = 0.010;
    std::string to_csv() const;
    std::size_t count(EventKind k) const;
};

enum class Phase { connected, preparing, executing, rlf_recovery };

struct UeConnState {
    int serving = 0;
    Phase phase = Phase::connected;
    std::vector<long> a3_since;   ///< per cell, tick the A3 condition started or -1
    long t310_since = -1;
    int target = -1;
    std::size_t phase_end = 0;
    int last_source = -1;         ///< source of the last successful handover
    long last_success = -1;
    std::vector<long> ai_since;   ///< ai_option2 forecast dwell per cell
    HandoverLog log;
};

UeConnState initial_state(std::size_t n_cells, int serving, const HandoverConfig& cfg);

/// Predicted L3 rows for the AI mode: the current estimate followed by the
/// forecast instances.
struct CellForecast {
    std::vector<double> current;
    std::vector<std::vector<double>> future;
};

/// Advances one tick. `l3` is the per-cell L3-RSRP the UE holds, `sinr` the
/// per-cell SINR if that cell served. `forecast` is required in ai_option1.
void step(UeConnState& s, const HandoverConfig& cfg, std::span<const double> l3, std::span<const double> sinr,
          std::size_t t, const CellForecast* forecast = nullptr);

/// T310 handling for the serving link; emits rlf and moves to recovery.
void detect_rlf(UeConnState& s, const HandoverConfig& cfg, double serving_sinr, std::size_t t);

struct HandoverOutcome {
    std::size_t t = 0; ///< tick of the ho_command, or of the rlf for too_late without command
    int source = -1;
    int target = -1;
    HofKind kind = HofKind::none; ///< none means success
    bool operator==(const HandoverOutcome&) const = default;
};

/// Per-handover outcome derived from the log (see README for the rules).
std::vector<HandoverOutcome> classify_hof(const HandoverLog& log, const HandoverConfig& cfg);

struct KpiReport {
    std::size_t ho_commands = 0, ho_success = 0, hof_events = 0;
    std::size_t hof = 0, too_late = 0, too_early = 0, wrong_cell = 0, classified_success = 0;
    std::size_t rlf = 0, pingpong = 0;
    double hof_rate = 0.0, rlf_rate = 0.0, pingpong_rate = 0.0;
    double mean_interruption_ms = 0.0, max_interruption_ms = 0.0;
    std::size_t interruptions = 0;
    double duration_s = 0.0;
    bool degenerate = false;
    nlohmann::json to_json() const;
};

inline constexpr const char* kRlfRateDefinition = "rlf_rate = RLF events / (RLF events + successful handovers)";
inline constexpr const char* kHofRateDefinition = "hof_rate = HOF / (HOF + successful handovers), HOF from classify_hof";

KpiReport kpis(const HandoverLog& log, const HandoverConfig& cfg);

/// Forecast for measurement instance k.
using ForecastFn = std::function<CellForecast(std::size_t instance)>;

/// True future L3 from the trace (perfect predictions).
ForecastFn oracle_forecast(const MeasurementTrace& trace, std::size_t horizon);

/// Runs the state machine over every slot of a trace. L3 is held between
/// measurement instances; the UE starts on the strongest cell.
HandoverLog simulate(const MeasurementTrace& trace, const HandoverConfig& cfg, const ForecastFn& forecast = {});

} // namespace railbeam
