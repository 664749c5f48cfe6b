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


#include "trace.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "workers.hpp"

namespace railbeam {

using nlohmann::json;

TraceConfig trace_config_from_json(const json& j) {
    TraceConfig c;
    c.meas_period_slots = j.value("meas_period_slots", c.meas_period_slots);
    if (j.contains("noise")) c.noise = noise_config_from_json(j.at("noise"));
    if (j.contains("l3")) c.l3 = l3_config_from_json(j.at("l3"));
    c.activity_factor = j.value("activity_factor", c.activity_factor);
    if (c.meas_period_slots == 0) throw ValidationError("meas_period_slots must be >= 1");
    if (c.activity_factor < 0.0) throw ValidationError("activity_factor must be >= 0");
    return c;
}

json to_json(const TraceConfig& c) {
    return {{"meas_period_slots", c.meas_period_slots},
            {"noise", to_json(c.noise)},
            {"l3", to_json(c.l3)},
            {"activity_factor", c.activity_factor}};
}

std::vector<double> per_cell_sinr(std::span<const double> best_rsrp_dbm, double noise_dbm,
                                  double activity_factor) {
    const double noise = std::pow(10.0, noise_dbm / 10.0);
    std::vector<double> lin(best_rsrp_dbm.size());
    double total = 0.0;
    for (std::size_t c = 0; c < lin.size(); ++c) {
        lin[c] = best_rsrp_dbm[c] <= kRsrpFloorDbm ? 0.0 : std::pow(10.0, best_rsrp_dbm[c] / 10.0);
        total += lin[c];
    }
    std::vector<double> out(lin.size());
    for (std::size_t c = 0; c < lin.size(); ++c) {
        const double interference = activity_factor * std::max(0.0, total - lin[c]);
        out[c] = power_to_db(lin[c], kRsrpFloorDbm) - 10.0 * std::log10(interference + noise);
    }
    return out;
}

MeasurementTrace generate_trace(const ChannelModel& model, const TraceConfig& cfg,
                                std::uint64_t noise_seed, std::size_t workers) {
    const Scenario& sc = model.scenario();
    const std::size_t beams = sc.uniform_beam_count();
    if (beams == 0) throw ValidationError("trace needs the same codebook size in every sector");
    if (cfg.meas_period_slots == 0) throw ValidationError("meas_period_slots must be >= 1");

    MeasurementTrace t;
    t.n_slots = sc.n_slots();
    t.n_cells = sc.cell_count();
    t.n_beams = beams;
    t.meas_period = cfg.meas_period_slots;
    t.slot_duration_s = sc.slot_duration_s();
    const std::size_t n_inst = (t.n_slots + t.meas_period - 1) / t.meas_period;
    t.measured_l1.assign(n_inst * t.n_cells * beams, kRsrpFloorDbm);
    t.best_rsrp.assign(t.n_slots * t.n_cells, kRsrpFloorDbm);
    t.sinr.assign(t.n_slots * t.n_cells, kRsrpFloorDbm);

    parallel_for(
        t.n_slots,
        [&](std::size_t slot) {
            const bool instance = slot % t.meas_period == 0;
            for (std::size_t c = 0; c < t.n_cells; ++c) {
                const auto r = model.l1_rsrp(c, slot);
                t.best_rsrp[slot * t.n_cells + c] = *std::max_element(r.begin(), r.end());
                if (instance)
                    std::copy(r.begin(), r.end(),
                              t.measured_l1.begin() +
                                  static_cast<std::ptrdiff_t>(((slot / t.meas_period) * t.n_cells + c) * beams));
            }
            const auto s = per_cell_sinr(std::span<const double>(t.best_rsrp).subspan(slot * t.n_cells, t.n_cells),
                                         sc.noise_floor_dbm(), cfg.activity_factor);
            std::copy(s.begin(), s.end(), t.sinr.begin() + static_cast<std::ptrdiff_t>(slot * t.n_cells));
        },
        workers);

    std::mt19937_64 rng(noise_seed);
    apply_rsrp_noise(t.measured_l1, cfg.noise, rng);

    L3State l3(t.n_cells, cfg.l3);
    t.l3.resize(n_inst * t.n_cells);
    for (std::size_t i = 0; i < n_inst; ++i) {
        l3.update(t.l1_at(i), beams);
        std::copy(l3.filtered().begin(), l3.filtered().end(),
                  t.l3.begin() + static_cast<std::ptrdiff_t>(i * t.n_cells));
    }
    return t;
}

} // namespace railbeam
