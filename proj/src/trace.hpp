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
#include <span>
#include <vector>

#include "channel.hpp"
#include "json.hpp"
#include "measurement.hpp"

namespace railbeam {

struct TraceConfig {
    std::size_t meas_period_slots = 4; ///< slots between measurement instances
    NoiseConfig noise;
    L3Config l3;
    double activity_factor = 1.0; ///< load of interfering cells in the SINR
};

TraceConfig trace_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TraceConfig& c);

/// Everything the UE observes along one pass of the track. Measurements
/// happen every `meas_period` slots; SINR is tracked every slot with ideal
/// best-beam serving.
struct MeasurementTrace {
    std::size_t n_slots = 0;
    std::size_t n_cells = 0;
    std::size_t n_beams = 0;
    std::size_t meas_period = 1;
    double slot_duration_s = 0.0;

    std::vector<double> measured_l1; ///< [instance x cell x beam], noisy
    std::vector<double> l3;          ///< [instance x cell], filtered from full measurements
    std::vector<double> best_rsrp;   ///< [slot x cell], true best-beam RSRP
    std::vector<double> sinr;        ///< [slot x cell], SINR if that cell served

    std::size_t n_instances() const { return n_beams ? measured_l1.size() / (n_cells * n_beams) : 0; }
    std::size_t instance_slot(std::size_t i) const { return i * meas_period; }

    std::span<const double> l1_at(std::size_t instance) const {
        return std::span<const double>(measured_l1).subspan(instance * n_cells * n_beams, n_cells * n_beams);
    }
    std::span<const double> l3_at(std::size_t instance) const {
        return std::span<const double>(l3).subspan(instance * n_cells, n_cells);
    }
    std::span<const double> sinr_at(std::size_t slot) const {
        return std::span<const double>(sinr).subspan(slot * n_cells, n_cells);
    }
};

/// Noise draws come from `noise_seed`; the channel carries its own seed.
MeasurementTrace generate_trace(const ChannelModel& model, const TraceConfig& cfg,
                                std::uint64_t noise_seed, std::size_t workers = 0);

/// SINR of every cell when it alone serves and all others interfere.
std::vector<double> per_cell_sinr(std::span<const double> best_rsrp_dbm, double noise_dbm,
                                  double activity_factor);

} // namespace railbeam
