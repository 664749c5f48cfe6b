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

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace railbeam {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline double distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// One sector: a UPA facing `boresight_deg` in the horizontal plane.
/// `rows` counts horizontal elements, `cols` vertical ones.
struct Sector {
    double boresight_deg = 0.0;
    std::size_t rows = 8;
    std::size_t cols = 8;
    double spacing_wl = 0.5;
    std::size_t oversampling = 1;
    double tx_power_dbm = 35.0;
};

struct BaseStation {
    Vec3 position;
    std::vector<Sector> sectors;
};

struct CellId {
    std::size_t bs = 0;
    std::size_t sector = 0;
    auto operator<=>(const CellId&) const = default;
};

/// Regular trackside layout used when no explicit BS list is given.
struct LayoutConfig {
    std::size_t n_bs = 7;
    double isd_m = 400.0;
    double lateral_offset_m = 30.0;
    double bs_height_m = 25.0;
    std::vector<double> sector_azimuths_deg{30.0, 150.0, -90.0};
    std::size_t rows = 8;
    std::size_t cols = 8;
    double spacing_wl = 0.5;
    std::size_t oversampling = 1;
    double tx_power_dbm = 35.0;
};

struct ScenarioConfig {
    double track_length_m = 0.0; ///< 0: derived as n_bs * isd
    double ue_speed_kmh = 350.0;
    double slot_duration_s = 0.01;
    std::size_t n_slots = 0; ///< 0: as many slots as fit on the track
    double start_x_m = 0.0;
    double ue_height_m = 1.5;
    double noise_floor_dbm = -90.0;
    double carrier_freq_ghz = 30.0;
    std::uint64_t seed = 1;
    LayoutConfig layout;
    std::optional<std::vector<BaseStation>> bs_list;
};

ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& cfg);

/// Immutable physical world: straight track along +x, trackside base
/// stations, and the slot clock.
class Scenario {
public:
    double track_length_m() const { return track_length_m_; }
    double ue_speed_kmh() const { return ue_speed_kmh_; }
    double ue_speed_mps() const;
    double slot_duration_s() const { return slot_duration_s_; }
    std::size_t n_slots() const { return n_slots_; }
    double noise_floor_dbm() const { return noise_floor_dbm_; }
    double carrier_freq_ghz() const { return carrier_freq_ghz_; }
    double wavelength_m() const;
    std::uint64_t seed() const { return seed_; }
    const Vec3& start() const { return start_; }
    const std::vector<BaseStation>& bs_list() const { return bs_list_; }

    std::size_t cell_count() const { return cells_.size(); }
    CellId cell(std::size_t flat) const;
    std::size_t flat_index(CellId id) const;
    const Sector& sector(std::size_t flat) const;
    const Vec3& bs_position(std::size_t flat) const;

    /// Beams per cell when every sector uses the same array; 0 otherwise.
    std::size_t uniform_beam_count() const;

    Vec3 ue_position(std::size_t slot) const;

    nlohmann::json to_json() const;
    std::string hash() const;

private:
    friend Scenario build_scenario(const ScenarioConfig&);
    Scenario() = default;

    double track_length_m_ = 0.0;
    double ue_speed_kmh_ = 0.0;
    double slot_duration_s_ = 0.0;
    std::size_t n_slots_ = 0;
    double noise_floor_dbm_ = 0.0;
    double carrier_freq_ghz_ = 0.0;
    std::uint64_t seed_ = 0;
    Vec3 start_;
    std::vector<BaseStation> bs_list_;
    std::vector<CellId> cells_;
};

Scenario build_scenario(const ScenarioConfig& cfg);

} // namespace railbeam
