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
#include <memory>
#include <span>
#include <vector>

#include "codebook.hpp"
#include "common.hpp"
#include "json.hpp"
#include "scenario.hpp"

namespace railbeam {

struct Path {
    cplx gain;            ///< complex amplitude at 0 dBm transmit power
    double azimuth_deg;   ///< departure azimuth, local to the sector boresight
    double elevation_deg; ///< departure elevation
    bool los;
};

struct PathSet {
    std::vector<Path> paths;
    bool los = false;
};

/// Geometric stand-in for a stochastic channel generator: one LoS ray plus
/// a few rays off fixed per-cell scatterers, with optional correlated
/// log-normal shadowing along the track.
struct ChannelConfig {
    std::size_t n_nlos = 3;
    double nlos_min_db = 10.0; ///< scatterer rays are this far or more below LoS
    double nlos_max_db = 20.0;
    bool shadowing = false;
    double shadow_sigma_db = 4.0;
    double shadow_corr_m = 50.0;
    double max_range_m = 1500.0; ///< beyond this horizontal distance a cell is out of range
    bool element_pattern = true;
};

ChannelConfig channel_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChannelConfig& c);

/// Log-distance LoS law: 28 + 22 log10(d) + 20 log10(f_GHz).
double path_loss_db(double distance_m, double freq_ghz);

/// Linear-domain serving / (sum of interferers + noise), in dB.
double sinr_db(double serving_dbm, std::span<const double> interferers_dbm, double noise_dbm);

/// Beam-domain coefficients in sqrt(mW): sqrt(P_tx) * sum_p gain_p <w_b, a_p>.
std::vector<cplx> beam_coefficients(const PathSet& paths, const Codebook& cb, double tx_power_dbm);

/// Per-beam L1-RSRP in dBm, clamped at `floor`. An empty path set yields all-floor.
std::vector<double> beam_rsrp(const PathSet& paths, const Codebook& cb, double tx_power_dbm,
                              double floor = kRsrpFloorDbm);

/// Per-beam RSRP from coefficients already in sqrt(mW).
std::vector<double> coefficients_to_rsrp(std::span<const cplx> coeffs, double floor = kRsrpFloorDbm);

class ChannelModel {
public:
    ChannelModel(Scenario scenario, ChannelConfig cfg, std::uint64_t run_seed);

    const Scenario& scenario() const { return scenario_; }
    const ChannelConfig& config() const { return cfg_; }
    std::uint64_t run_seed() const { return run_seed_; }
    const Codebook& codebook(std::size_t cell) const { return *codebooks_.at(cell); }

    PathSet synthesize_paths(std::size_t cell, std::size_t slot) const;
    PathSet synthesize_paths_at(std::size_t cell, const Vec3& ue) const;

    std::vector<cplx> coefficients(std::size_t cell, std::size_t slot) const;
    std::vector<double> l1_rsrp(std::size_t cell, std::size_t slot) const;

    double shadowing_db(std::size_t cell, double x_m) const;

private:
    struct Scatterer {
        Vec3 position;
        double offset_db;
        double phase;
    };

    Scenario scenario_;
    ChannelConfig cfg_;
    std::uint64_t run_seed_;
    std::vector<std::shared_ptr<const Codebook>> codebooks_;
    std::vector<std::vector<Scatterer>> scatterers_;
    std::vector<std::vector<double>> shadow_; // per cell, 1 m grid from shadow_x0_
    double shadow_x0_ = 0.0;
};

/// Per-cell beam-domain channel and L1-RSRP at one slot.
struct ChannelSnapshot {
    std::vector<std::vector<cplx>> coefficients;
    std::vector<std::vector<double>> l1_rsrp;
};

ChannelSnapshot snapshot(const ChannelModel& model, std::size_t slot);

/// L1-RSRP tensor [n_slots x n_cells x n_beams], row-major. Requires a
/// uniform codebook size. Slots are generated in parallel and merged by index.
std::vector<double> rsrp_tensor(const ChannelModel& model, std::size_t workers = 0);

} // namespace railbeam
