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


#include "channel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "antenna.hpp"
#include "workers.hpp"

namespace railbeam {

using nlohmann::json;

ChannelConfig channel_config_from_json(const json& j) {
    ChannelConfig c;
    try {
        c.n_nlos = j.value("n_nlos", c.n_nlos);
        c.nlos_min_db = j.value("nlos_min_db", c.nlos_min_db);
        c.nlos_max_db = j.value("nlos_max_db", c.nlos_max_db);
        c.shadowing = j.value("shadowing", c.shadowing);
        c.shadow_sigma_db = j.value("shadow_sigma_db", c.shadow_sigma_db);
        c.shadow_corr_m = j.value("shadow_corr_m", c.shadow_corr_m);
        c.max_range_m = j.value("max_range_m", c.max_range_m);
        c.element_pattern = j.value("element_pattern", c.element_pattern);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("channel config: ") + e.what());
    }
    if (c.nlos_min_db > c.nlos_max_db) throw ValidationError("nlos_min_db > nlos_max_db");
    if (c.shadow_corr_m <= 0.0) throw ValidationError("shadow_corr_m must be > 0");
    if (c.shadow_sigma_db < 0.0) throw ValidationError("shadow_sigma_db must be >= 0");
    return c;
}

json to_json(const ChannelConfig& c) {
    return {{"n_nlos", c.n_nlos},
            {"nlos_min_db", c.nlos_min_db},
            {"nlos_max_db", c.nlos_max_db},
            {"shadowing", c.shadowing},
            {"shadow_sigma_db", c.shadow_sigma_db},
            {"shadow_corr_m", c.shadow_corr_m},
            {"max_range_m", c.max_range_m},
            {"element_pattern", c.element_pattern}};
}

double path_loss_db(double distance_m, double freq_ghz) {
    if (!(distance_m > 0.0)) throw ValidationError("path loss distance must be > 0");
    return 28.0 + 22.0 * std::log10(distance_m) + 20.0 * std::log10(freq_ghz);
}

double sinr_db(double serving_dbm, std::span<const double> interferers_dbm, double noise_dbm) {
    double denom = std::pow(10.0, noise_dbm / 10.0);
    for (double i : interferers_dbm) denom += std::pow(10.0, i / 10.0);
    return serving_dbm - 10.0 * std::log10(denom);
}

std::vector<cplx> beam_coefficients(const PathSet& paths, const Codebook& cb, double tx_power_dbm) {
    if (cb.size() == 0) throw ValidationError("codebook is empty");
    std::vector<cplx> out(cb.size(), cplx{0.0, 0.0});
    const double amp = std::pow(10.0, tx_power_dbm / 20.0);
    for (const Path& p : paths.paths)
        cb.accumulate_projection(direction_sines(p.azimuth_deg, p.elevation_deg), amp * p.gain, out);
    return out;
}

std::vector<double> coefficients_to_rsrp(std::span<const cplx> coeffs, double floor) {
    std::vector<double> out(coeffs.size());
    for (std::size_t b = 0; b < coeffs.size(); ++b) out[b] = power_to_db(std::norm(coeffs[b]), floor);
    return out;
}

std::vector<double> beam_rsrp(const PathSet& paths, const Codebook& cb, double tx_power_dbm,
                              double floor) {
    if (paths.paths.empty()) return std::vector<double>(cb.size(), floor);
    return coefficients_to_rsrp(beam_coefficients(paths, cb, tx_power_dbm), floor);
}

ChannelModel::ChannelModel(Scenario scenario, ChannelConfig cfg, std::uint64_t run_seed)
    : scenario_(std::move(scenario)), cfg_(cfg), run_seed_(run_seed) {
    const std::size_t n_cells = scenario_.cell_count();
    std::map<std::tuple<std::size_t, std::size_t, std::size_t, double>, std::shared_ptr<const Codebook>>
        cache;
    codebooks_.reserve(n_cells);
    scatterers_.resize(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        const Sector& s = scenario_.sector(c);
        auto key = std::make_tuple(s.rows, s.cols, s.oversampling, s.spacing_wl);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, std::make_shared<const Codebook>(dft_codebook(
                                        s.rows, s.cols, s.oversampling, s.spacing_wl))).first;
        codebooks_.push_back(it->second);

        // Scatterers are part of the scenario, not of the run.
        std::mt19937_64 rng(derive_seed(scenario_.seed(), 1000 + c));
        std::uniform_real_distribution<double> along(-150.0, 150.0), across(-60.0, 60.0),
            height(1.0, 15.0), offset(cfg_.nlos_min_db, cfg_.nlos_max_db),
            phase(0.0, 2.0 * std::numbers::pi);
        const Vec3& bs = scenario_.bs_position(c);
        for (std::size_t k = 0; k < cfg_.n_nlos; ++k) {
            Scatterer sc;
            sc.position = {bs.x + along(rng), across(rng), height(rng)};
            sc.offset_db = offset(rng);
            sc.phase = phase(rng);
            scatterers_[c].push_back(sc);
        }
    }

    if (cfg_.shadowing && cfg_.shadow_sigma_db > 0.0) {
        shadow_x0_ = scenario_.start().x - 10.0;
        const double x1 = scenario_.track_length_m() + 10.0;
        const auto n = static_cast<std::size_t>(std::ceil(x1 - shadow_x0_)) + 2;
        const double rho = std::exp(-1.0 / cfg_.shadow_corr_m);
        const double innov = cfg_.shadow_sigma_db * std::sqrt(1.0 - rho * rho);
        shadow_.resize(n_cells);
        for (std::size_t c = 0; c < n_cells; ++c) {
            std::mt19937_64 rng(derive_seed(run_seed_, 5000 + c));
            std::normal_distribution<double> g(0.0, 1.0);
            auto& f = shadow_[c];
            f.resize(n);
            f[0] = cfg_.shadow_sigma_db * g(rng);
            for (std::size_t i = 1; i < n; ++i) f[i] = rho * f[i - 1] + innov * g(rng);
        }
    }
}

double ChannelModel::shadowing_db(std::size_t cell, double x_m) const {
    if (shadow_.empty()) return 0.0;
    const auto& f = shadow_.at(cell);
    const double pos = std::clamp(x_m - shadow_x0_, 0.0, static_cast<double>(f.size() - 1));
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= f.size()) return f.back();
    const double t = pos - static_cast<double>(i);
    return f[i] * (1.0 - t) + f[i + 1] * t;
}

PathSet ChannelModel::synthesize_paths(std::size_t cell, std::size_t slot) const {
    return synthesize_paths_at(cell, scenario_.ue_position(slot));
}

PathSet ChannelModel::synthesize_paths_at(std::size_t cell, const Vec3& ue) const {
    const Vec3& bs = scenario_.bs_position(cell);
    const Sector& sector = scenario_.sector(cell);
    PathSet out;
    const double dx = ue.x - bs.x, dy = ue.y - bs.y, dz = ue.z - bs.z;
    const double horizontal = std::hypot(dx, dy);
    if (horizontal > cfg_.max_range_m) return out;

    const double d = std::max(distance(ue, bs), 1.0);
    const double lambda = scenario_.wavelength_m();
    const double shadow = shadowing_db(cell, ue.x);
    const double pl = path_loss_db(d, scenario_.carrier_freq_ghz());

    auto direction = [&](double x, double y, double z) {
        const double az = wrap_deg(rad2deg(std::atan2(y, x)) - sector.boresight_deg);
        const double el = rad2deg(std::atan2(z, std::hypot(x, y)));
        return std::pair{az, el};
    };

    const auto [az, el] = direction(dx, dy, dz);
    const double elem = cfg_.element_pattern ? element_gain_db(az, el) : 0.0;
    const double los_db = -pl + elem + shadow;
    out.paths.push_back(
        {std::polar(std::pow(10.0, los_db / 20.0), -2.0 * std::numbers::pi * d / lambda), az, el, true});
    out.los = true;

    for (const Scatterer& sc : scatterers_[cell]) {
        const Vec3& q = sc.position;
        const auto [saz, sel] = direction(q.x - bs.x, q.y - bs.y, q.z - bs.z);
        const double length = distance(bs, q) + distance(q, ue);
        const double selem = cfg_.element_pattern ? element_gain_db(saz, sel) : 0.0;
        const double g_db = -pl - sc.offset_db + selem + shadow;
        out.paths.push_back({std::polar(std::pow(10.0, g_db / 20.0),
                                        sc.phase - 2.0 * std::numbers::pi * length / lambda),
                             saz, sel, false});
    }
    return out;
}

std::vector<cplx> ChannelModel::coefficients(std::size_t cell, std::size_t slot) const {
    return beam_coefficients(synthesize_paths(cell, slot), codebook(cell),
                             scenario_.sector(cell).tx_power_dbm);
}

std::vector<double> ChannelModel::l1_rsrp(std::size_t cell, std::size_t slot) const {
    return beam_rsrp(synthesize_paths(cell, slot), codebook(cell), scenario_.sector(cell).tx_power_dbm);
}

ChannelSnapshot snapshot(const ChannelModel& model, std::size_t slot) {
    ChannelSnapshot s;
    const std::size_t n = model.scenario().cell_count();
    s.coefficients.reserve(n);
    s.l1_rsrp.reserve(n);
    for (std::size_t c = 0; c < n; ++c) {
        const PathSet paths = model.synthesize_paths(c, slot);
        auto coeffs = beam_coefficients(paths, model.codebook(c), model.scenario().sector(c).tx_power_dbm);
        s.l1_rsrp.push_back(paths.paths.empty()
                                ? std::vector<double>(coeffs.size(), kRsrpFloorDbm)
                                : coefficients_to_rsrp(coeffs));
        s.coefficients.push_back(std::move(coeffs));
    }
    return s;
}

std::vector<double> rsrp_tensor(const ChannelModel& model, std::size_t workers) {
    const Scenario& sc = model.scenario();
    const std::size_t beams = sc.uniform_beam_count();
    if (beams == 0) throw ValidationError("RSRP tensor needs the same codebook size in every sector");
    const std::size_t cells = sc.cell_count();
    const std::size_t stride = cells * beams;
    std::vector<double> out(sc.n_slots() * stride);
    parallel_for(
        sc.n_slots(),
        [&](std::size_t slot) {
            for (std::size_t c = 0; c < cells; ++c) {
                const auto r = model.l1_rsrp(c, slot);
                std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(slot * stride + c * beams));
            }
        },
        workers);
    return out;
}

} // namespace railbeam
