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


#include <algorithm>
#include <cmath>
#include <numbers>

#include "antenna.hpp"
#include "channel.hpp"
#include "doctest.h"

using namespace railbeam;

namespace {

std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::size_t cyclic(std::size_t a, std::size_t b, std::size_t n) {
    const std::size_t d = a > b ? a - b : b - a;
    return std::min(d, n - d);
}

ChannelConfig los_only() {
    ChannelConfig c;
    c.n_nlos = 0;
    return c;
}

} // namespace

TEST_SUITE("channel") {

TEST_CASE("array response examples") {
    const auto one = array_response(1, 1, 0.5, 37.0, -12.0);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == cplx{1.0, 0.0});
    const auto two = array_response(2, 1, 0.5, 0.0, 0.0);
    CHECK(std::abs(two[0] - cplx{1.0, 0.0}) < 1e-15);
    CHECK(std::abs(two[1] - cplx{1.0, 0.0}) < 1e-15);
    const auto four = array_response(4, 1, 0.5, 30.0, 0.0);
    for (std::size_t k = 0; k < 4; ++k) {
        const cplx expect = std::exp(cplx{0.0, std::numbers::pi / 2.0 * static_cast<double>(k)});
        CHECK(std::abs(four[k] - expect) < 1e-12);
    }
    for (const cplx& v : array_response(4, 3, 0.5, 200.0, 40.0)) CHECK(std::abs(std::abs(v) - 1.0) < 1e-12);
}

TEST_CASE("path loss law") {
    CHECK(path_loss_db(1.0, 30.0) == doctest::Approx(28.0 + 20.0 * std::log10(30.0)).epsilon(1e-14));
    CHECK(path_loss_db(1.0, 30.0) == doctest::Approx(57.54).epsilon(1e-4));
    CHECK(path_loss_db(100.0, 30.0) - path_loss_db(10.0, 30.0) == doctest::Approx(22.0).epsilon(1e-12));
    CHECK(path_loss_db(200.0, 30.0) - path_loss_db(100.0, 30.0) ==
          doctest::Approx(22.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(path_loss_db(0.0, 30.0), ValidationError);
    CHECK_THROWS_AS(path_loss_db(-1.0, 30.0), ValidationError);
}

TEST_CASE("sinr examples") {
    CHECK(sinr_db(-80.0, {}, -94.0) == doctest::Approx(14.0).epsilon(1e-12));
    const std::vector<double> same{-70.0};
    CHECK(sinr_db(-70.0, same, -250.0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sinr_db(-91.0, {}, -91.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("LoS-only path set") {
    ChannelConfig cfg = los_only();
    cfg.element_pattern = false;
    const ChannelModel m(build_scenario({}), cfg, 1);
    const Vec3 ue = m.scenario().ue_position(500);
    const PathSet p = m.synthesize_paths(0, 500);
    REQUIRE(p.paths.size() == 1);
    CHECK(p.los);
    const double d = distance(ue, m.scenario().bs_position(0));
    CHECK(20.0 * std::log10(std::abs(p.paths[0].gain)) ==
          doctest::Approx(-path_loss_db(d, 30.0)).epsilon(1e-12));
}

TEST_CASE("path synthesis is deterministic and has scatterers below LoS") {
    const ChannelModel a(build_scenario({}), {}, 4), b(build_scenario({}), {}, 4);
    for (std::size_t slot : {0u, 1234u, 2000u}) {
        const PathSet pa = a.synthesize_paths(3, slot), pb = b.synthesize_paths(3, slot);
        REQUIRE(pa.paths.size() == 4);
        for (std::size_t i = 0; i < pa.paths.size(); ++i) {
            CHECK(pa.paths[i].gain == pb.paths[i].gain);
            CHECK(pa.paths[i].azimuth_deg == pb.paths[i].azimuth_deg);
        }
    }
}

TEST_CASE("LoS azimuth follows the moving UE") {
    ScenarioConfig sc;
    sc.ue_speed_kmh = 350.0;
    const ChannelModel m(build_scenario(sc), los_only(), 1);
    const Scenario& s = m.scenario();
    for (std::size_t cell : {0u, 4u, 10u}) {
        for (std::size_t k : {10u, 700u, 1500u}) {
            const Vec3 bs = s.bs_position(cell);
            auto geo = [&](std::size_t slot) {
                const double x = (350.0 / 3.6) * 0.01 * static_cast<double>(slot);
                double az = std::atan2(0.0 - bs.y, x - bs.x) * 180.0 / std::numbers::pi -
                            s.sector(cell).boresight_deg;
                while (az >= 180.0) az -= 360.0;
                while (az < -180.0) az += 360.0;
                return az;
            };
            const double d0 = m.synthesize_paths(cell, k).paths[0].azimuth_deg;
            const double d1 = m.synthesize_paths(cell, k + 1).paths[0].azimuth_deg;
            CHECK(d1 - d0 == doctest::Approx(geo(k + 1) - geo(k)).epsilon(1e-9));
        }
    }
}

TEST_CASE("LoS on a beam direction makes that beam the strongest") {
    const Codebook cb = dft_codebook(8, 8, 1);
    for (std::size_t b = 0; b < cb.size(); ++b) {
        const BeamLabel& l = cb.label(b);
        if (!l.visible) continue;
        PathSet p;
        p.paths.push_back({cplx{1e-5, 0.0}, l.azimuth_deg, l.elevation_deg, true});
        p.los = true;
        const auto r = beam_rsrp(p, cb, 30.0);
        const auto a = array_response(8, 8, 0.5, l.azimuth_deg, l.elevation_deg);
        std::vector<double> brute(cb.size());
        for (std::size_t k = 0; k < cb.size(); ++k) brute[k] = std::abs(inner(cb.beam(k), a));
        CHECK(argmax(brute) == b);
        CHECK(argmax(r) == b);
    }
}

TEST_CASE("empty path set and tx power shift") {
    const Codebook cb = dft_codebook(4, 4, 1);
    for (double v : beam_rsrp(PathSet{}, cb, 35.0)) CHECK(v == kRsrpFloorDbm);
    const ChannelModel m(build_scenario({}), {}, 2);
    const PathSet p = m.synthesize_paths(5, 900);
    const auto a = beam_rsrp(p, m.codebook(5), 35.0), b = beam_rsrp(p, m.codebook(5), 38.0);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] - a[k] == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(argmax(a) == argmax(b));
}

TEST_CASE("out-of-range cells sit at the floor") {
    ChannelConfig cfg;
    cfg.max_range_m = 300.0;
    const ChannelModel m(build_scenario({}), cfg, 1);
    CHECK(m.synthesize_paths(20, 0).paths.empty());
    for (double v : m.l1_rsrp(20, 0)) CHECK(v == kRsrpFloorDbm);
}

TEST_CASE("best beam tracks the geometric direction") {
    const ChannelModel m(build_scenario({}), los_only(), 1);
    const Scenario& s = m.scenario();
    const Codebook& cb = m.codebook(0);
    const double step = 1.0 / (cb.rows() * cb.spacing_wl() * cb.oversampling());
    int checked = 0;
    for (std::size_t slot = 0; slot < s.n_slots(); slot += s.n_slots() / 12) {
        for (std::size_t cell = 0; cell < s.cell_count(); cell += 4) {
            const PathSet ps = m.synthesize_paths(cell, slot);
            if (ps.paths.empty()) continue;
            const Path los = ps.paths[0];
            if (std::abs(los.azimuth_deg) > 60.0) continue;
            const auto r = m.l1_rsrp(cell, slot);
            const BeamLabel& l = cb.label(argmax(r));
            const DirectionSines want = direction_sines(los.azimuth_deg, los.elevation_deg);
            const DirectionSines got = direction_sines(l.azimuth_deg, l.elevation_deg);
            CHECK(std::abs(want.horizontal - got.horizontal) <= step);
            ++checked;
        }
    }
    CHECK(checked >= 8);
}

TEST_CASE("best beam moves at most one grid step per slot at 500 km/h") {
    ScenarioConfig sc;
    sc.ue_speed_kmh = 500.0;
    const ChannelModel m(build_scenario(sc), los_only(), 1);
    const Scenario& s = m.scenario();
    // Per-slot angular change is at most v*dt/30 m (closest approach), i.e.
    // under 0.05 in direction sine, well inside one 0.25 beam step.
    const Codebook& cb = m.codebook(0);
    for (std::size_t cell = 0; cell < s.cell_count(); ++cell) {
        std::size_t prev = cb.size();
        for (std::size_t slot = 0; slot < s.n_slots(); ++slot) {
            const auto r = m.l1_rsrp(cell, slot);
            if (r[0] == kRsrpFloorDbm) {
                prev = cb.size();
                continue;
            }
            const std::size_t b = argmax(r);
            if (prev == cb.size()) {
                prev = b;
                continue;
            }
            CHECK(cyclic(b / cb.vertical_beams(), prev / cb.vertical_beams(), cb.horizontal_beams()) <= 1);
            CHECK(cyclic(b % cb.vertical_beams(), prev % cb.vertical_beams(), cb.vertical_beams()) <= 1);
            prev = b;
        }
    }
}

TEST_CASE("rsrp tensor is reproducible across worker counts") {
    ScenarioConfig sc;
    sc.n_slots = 300;
    ChannelConfig cfg;
    cfg.shadowing = true;
    const ChannelModel m(build_scenario(sc), cfg, 7);
    const auto a = rsrp_tensor(m, 1), b = rsrp_tensor(m, 3);
    CHECK(a.size() == 300 * 21 * 64);
    CHECK(a == b);
    const ChannelModel m2(build_scenario(sc), cfg, 7);
    CHECK(rsrp_tensor(m2, 2) == a);
    for (double v : a) CHECK_FALSE(std::isnan(v));
}

}
