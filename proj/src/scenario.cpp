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


#include "scenario.hpp"

#include <cmath>

#include "common.hpp"

namespace railbeam {

using nlohmann::json;

namespace {

Sector sector_from_json(const json& j) {
    Sector s;
    s.boresight_deg = j.value("boresight_deg", s.boresight_deg);
    s.rows = j.value("rows", s.rows);
    s.cols = j.value("cols", s.cols);
    s.spacing_wl = j.value("spacing_wl", s.spacing_wl);
    s.oversampling = j.value("oversampling", s.oversampling);
    s.tx_power_dbm = j.value("tx_power_dbm", s.tx_power_dbm);
    return s;
}

json sector_to_json(const Sector& s) {
    return {{"boresight_deg", s.boresight_deg}, {"rows", s.rows},
            {"cols", s.cols}, {"spacing_wl", s.spacing_wl},
            {"oversampling", s.oversampling}, {"tx_power_dbm", s.tx_power_dbm}};
}

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ValidationError("position must be [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw ValidationError(std::string(what) + " must be finite");
}

} // namespace

ScenarioConfig scenario_config_from_json(const json& j) {
    ScenarioConfig c;
    try {
        c.track_length_m = j.value("track_length_m", c.track_length_m);
        c.ue_speed_kmh = j.value("ue_speed_kmh", c.ue_speed_kmh);
        c.slot_duration_s = j.value("slot_duration_s", c.slot_duration_s);
        c.n_slots = j.value("n_slots", c.n_slots);
        c.start_x_m = j.value("start_x_m", c.start_x_m);
        c.ue_height_m = j.value("ue_height_m", c.ue_height_m);
        c.noise_floor_dbm = j.value("noise_floor_dbm", c.noise_floor_dbm);
        c.carrier_freq_ghz = j.value("carrier_freq_ghz", c.carrier_freq_ghz);
        c.seed = j.value("seed", c.seed);
        if (j.contains("layout")) {
            const json& l = j.at("layout");
            LayoutConfig& lay = c.layout;
            lay.n_bs = l.value("n_bs", lay.n_bs);
            lay.isd_m = l.value("isd_m", lay.isd_m);
            lay.lateral_offset_m = l.value("lateral_offset_m", lay.lateral_offset_m);
            lay.bs_height_m = l.value("bs_height_m", lay.bs_height_m);
            lay.sector_azimuths_deg = l.value("sector_azimuths_deg", lay.sector_azimuths_deg);
            lay.rows = l.value("rows", lay.rows);
            lay.cols = l.value("cols", lay.cols);
            lay.spacing_wl = l.value("spacing_wl", lay.spacing_wl);
            lay.oversampling = l.value("oversampling", lay.oversampling);
            lay.tx_power_dbm = l.value("tx_power_dbm", lay.tx_power_dbm);
        }
        if (j.contains("bs_list")) {
            std::vector<BaseStation> list;
            for (const json& b : j.at("bs_list")) {
                BaseStation bs;
                bs.position = vec_from_json(b.at("position"));
                for (const json& s : b.at("sectors")) bs.sectors.push_back(sector_from_json(s));
                list.push_back(std::move(bs));
            }
            c.bs_list = std::move(list);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario config: ") + e.what());
    }
    return c;
}

json to_json(const ScenarioConfig& c) {
    json j = {{"track_length_m", c.track_length_m},
              {"ue_speed_kmh", c.ue_speed_kmh},
              {"slot_duration_s", c.slot_duration_s},
              {"n_slots", c.n_slots},
              {"start_x_m", c.start_x_m},
              {"ue_height_m", c.ue_height_m},
              {"noise_floor_dbm", c.noise_floor_dbm},
              {"carrier_freq_ghz", c.carrier_freq_ghz},
              {"seed", c.seed}};
    const LayoutConfig& l = c.layout;
    j["layout"] = {{"n_bs", l.n_bs},
                   {"isd_m", l.isd_m},
                   {"lateral_offset_m", l.lateral_offset_m},
                   {"bs_height_m", l.bs_height_m},
                   {"sector_azimuths_deg", l.sector_azimuths_deg},
                   {"rows", l.rows},
                   {"cols", l.cols},
                   {"spacing_wl", l.spacing_wl},
                   {"oversampling", l.oversampling},
                   {"tx_power_dbm", l.tx_power_dbm}};
    if (c.bs_list) {
        json list = json::array();
        for (const auto& b : *c.bs_list) {
            json sectors = json::array();
            for (const auto& s : b.sectors) sectors.push_back(sector_to_json(s));
            list.push_back({{"position", vec_to_json(b.position)}, {"sectors", sectors}});
        }
        j["bs_list"] = list;
    }
    return j;
}

double Scenario::ue_speed_mps() const { return kmh_to_mps(ue_speed_kmh_); }

double Scenario::wavelength_m() const { return 299792458.0 / (carrier_freq_ghz_ * 1e9); }

CellId Scenario::cell(std::size_t flat) const {
    if (flat >= cells_.size()) throw ValidationError("cell index out of range");
    return cells_[flat];
}

std::size_t Scenario::flat_index(CellId id) const {
    for (std::size_t i = 0; i < cells_.size(); ++i)
        if (cells_[i] == id) return i;
    throw ValidationError("unknown cell (" + std::to_string(id.bs) + "," +
                          std::to_string(id.sector) + ")");
}

const Sector& Scenario::sector(std::size_t flat) const {
    const CellId id = cell(flat);
    return bs_list_[id.bs].sectors[id.sector];
}

const Vec3& Scenario::bs_position(std::size_t flat) const { return bs_list_[cell(flat).bs].position; }

std::size_t Scenario::uniform_beam_count() const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const Sector& s = sector(c);
        const std::size_t beams = (s.rows > 1 ? s.rows * s.oversampling : 1) * (s.cols > 1 ? s.cols * s.oversampling : 1);
        if (n == 0) n = beams;
        else if (n != beams) return 0;
    }
    return n;
}

Vec3 Scenario::ue_position(std::size_t slot) const {
    if (slot >= n_slots_)
        throw ValidationError("slot " + std::to_string(slot) + " out of range (n_slots=" +
                              std::to_string(n_slots_) + ")");
    const double step = ue_speed_mps() * slot_duration_s_;
    return {start_.x + step * static_cast<double>(slot), start_.y, start_.z};
}

json Scenario::to_json() const {
    json bs = json::array();
    for (const auto& b : bs_list_) {
        json sectors = json::array();
        for (const auto& s : b.sectors) sectors.push_back(sector_to_json(s));
        bs.push_back({{"position", vec_to_json(b.position)}, {"sectors", sectors}});
    }
    json cells = json::array();
    for (const auto& c : cells_) cells.push_back(json::array({c.bs, c.sector}));
    return {{"track_length_m", track_length_m_},
            {"ue_speed_kmh", ue_speed_kmh_},
            {"slot_duration_s", slot_duration_s_},
            {"n_slots", n_slots_},
            {"noise_floor_dbm", noise_floor_dbm_},
            {"carrier_freq_ghz", carrier_freq_ghz_},
            {"seed", seed_},
            {"start", vec_to_json(start_)},
            {"track_direction", json::array({1.0, 0.0, 0.0})},
            {"bs_list", bs},
            {"cells", cells}};
}

std::string Scenario::hash() const { return hex64(fnv1a64(to_json().dump())); }

Scenario build_scenario(const ScenarioConfig& cfg) {
    check_finite(cfg.ue_speed_kmh, "ue_speed_kmh");
    check_finite(cfg.slot_duration_s, "slot_duration_s");
    check_finite(cfg.track_length_m, "track_length_m");
    check_finite(cfg.start_x_m, "start_x_m");
    check_finite(cfg.ue_height_m, "ue_height_m");
    check_finite(cfg.noise_floor_dbm, "noise_floor_dbm");
    if (!(cfg.ue_speed_kmh > 0.0)) throw ValidationError("ue_speed_kmh must be > 0");
    if (!(cfg.slot_duration_s > 0.0)) throw ValidationError("slot_duration_s must be > 0");
    if (!(cfg.carrier_freq_ghz > 0.0)) throw ValidationError("carrier_freq_ghz must be > 0");

    Scenario s;
    s.ue_speed_kmh_ = cfg.ue_speed_kmh;
    s.slot_duration_s_ = cfg.slot_duration_s;
    s.noise_floor_dbm_ = cfg.noise_floor_dbm;
    s.carrier_freq_ghz_ = cfg.carrier_freq_ghz;
    s.seed_ = cfg.seed;
    s.start_ = {cfg.start_x_m, 0.0, cfg.ue_height_m};

    if (cfg.bs_list) {
        s.bs_list_ = *cfg.bs_list;
    } else {
        const LayoutConfig& l = cfg.layout;
        if (!(l.isd_m > 0.0)) throw ValidationError("layout.isd_m must be > 0");
        for (std::size_t i = 0; i < l.n_bs; ++i) {
            BaseStation bs;
            // Evenly spaced along the track, alternating sides.
            const double side = (i % 2 == 0) ? 1.0 : -1.0;
            bs.position = {l.isd_m * (static_cast<double>(i) + 0.5), side * l.lateral_offset_m,
                           l.bs_height_m};
            for (double az : l.sector_azimuths_deg) {
                bs.sectors.push_back(Sector{az, l.rows, l.cols, l.spacing_wl, l.oversampling,
                                            l.tx_power_dbm});
            }
            s.bs_list_.push_back(std::move(bs));
        }
    }
    if (s.bs_list_.empty()) throw ValidationError("scenario needs at least one base station");
    for (std::size_t b = 0; b < s.bs_list_.size(); ++b) {
        const BaseStation& bs = s.bs_list_[b];
        check_finite(bs.position.x, "bs position");
        check_finite(bs.position.y, "bs position");
        check_finite(bs.position.z, "bs position");
        if (bs.sectors.empty())
            throw ValidationError("base station " + std::to_string(b) + " has no sectors");
        for (std::size_t k = 0; k < bs.sectors.size(); ++k) {
            const Sector& sec = bs.sectors[k];
            if (sec.rows == 0 || sec.cols == 0 || sec.oversampling == 0)
                throw ValidationError("sector array dimensions must be >= 1");
            if (!(sec.spacing_wl > 0.0)) throw ValidationError("element spacing must be > 0");
            check_finite(sec.boresight_deg, "boresight");
            check_finite(sec.tx_power_dbm, "tx_power_dbm");
            s.cells_.push_back({b, k});
        }
    }

    double length = cfg.track_length_m;
    if (length == 0.0) {
        if (cfg.bs_list) throw ValidationError("track_length_m is required with an explicit bs_list");
        length = cfg.layout.isd_m * static_cast<double>(cfg.layout.n_bs);
    }
    if (!(length > 0.0)) throw ValidationError("track_length_m must be > 0");
    s.track_length_m_ = length;

    const double step = s.ue_speed_mps() * cfg.slot_duration_s;
    const double usable = length - cfg.start_x_m;
    if (cfg.n_slots == 0) {
        const double fit = std::floor(usable / step * (1.0 + 1e-12));
        if (fit < 1.0) throw ValidationError("track too short for a single slot");
        s.n_slots_ = static_cast<std::size_t>(fit);
    } else {
        if (static_cast<double>(cfg.n_slots) * step > usable * (1.0 + 1e-9))
            throw ValidationError("n_slots * slot_duration * speed exceeds the track length");
        s.n_slots_ = cfg.n_slots;
    }
    return s;
}

} // namespace railbeam
