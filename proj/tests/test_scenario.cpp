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


#include <cmath>

#include "doctest.h"
#include "common.hpp"
#include "scenario.hpp"

using namespace railbeam;

namespace {

ScenarioConfig single_cell(std::size_t slots) {
    ScenarioConfig c;
    c.track_length_m = 1000.0;
    c.n_slots = slots;
    c.bs_list = std::vector<BaseStation>{{{100.0, 30.0, 25.0}, {Sector{}}}};
    return c;
}

} // namespace

TEST_SUITE("scenario") {

TEST_CASE("default layout has 7 sites with 3 sectors each") {
    const Scenario s = build_scenario({});
    CHECK(s.bs_list().size() == 7);
    CHECK(s.cell_count() == 21);
    for (const auto& bs : s.bs_list()) {
        REQUIRE(bs.sectors.size() == 3);
        CHECK(bs.sectors[0].boresight_deg == 30.0);
        CHECK(bs.sectors[1].boresight_deg == 150.0);
        CHECK(bs.sectors[2].boresight_deg == -90.0);
        CHECK(bs.sectors[0].spacing_wl == 0.5);
    }
    for (std::size_t c = 0; c < s.cell_count(); ++c) CHECK(s.flat_index(s.cell(c)) == c);
}

TEST_CASE("one site with one sector") {
    const Scenario s = build_scenario(single_cell(100));
    CHECK(s.cell_count() == 1);
    CHECK(s.n_slots() == 100);
}

TEST_CASE("same config serialises identically") {
    const Scenario a = build_scenario({}), b = build_scenario({});
    CHECK(a.to_json().dump() == b.to_json().dump());
    CHECK(a.hash() == b.hash());
    ScenarioConfig other;
    other.seed = 2;
    CHECK(build_scenario(other).hash() != a.hash());
}

TEST_CASE("config json round trip") {
    ScenarioConfig c = single_cell(50);
    c.ue_speed_kmh = 120.0;
    const ScenarioConfig back = scenario_config_from_json(to_json(c));
    CHECK(build_scenario(back).hash() == build_scenario(c).hash());
}

TEST_CASE("trajectory") {
    ScenarioConfig c = single_cell(100);
    c.start_x_m = 12.5;
    c.ue_speed_kmh = 360.0;
    const Scenario s = build_scenario(c);
    const Vec3 p0 = s.ue_position(0);
    CHECK(p0.x == 12.5);
    CHECK(p0.y == 0.0);
    CHECK(p0.z == 1.5);
    CHECK(distance(s.ue_position(10), p0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK_THROWS_AS(s.ue_position(100), ValidationError);
}

TEST_CASE("per-slot displacement is constant at every default speed") {
    for (double speed : {60.0, 120.0, 350.0, 500.0}) {
        ScenarioConfig c;
        c.ue_speed_kmh = speed;
        const Scenario s = build_scenario(c);
        const double expect = speed / 3.6 * c.slot_duration_s;
        for (std::size_t k = 0; k + 1 < s.n_slots(); k += 97) {
            const double d = distance(s.ue_position(k + 1), s.ue_position(k));
            CHECK(std::abs(d - expect) <= 1e-9 * expect);
        }
        CHECK(static_cast<double>(s.n_slots()) * expect <= s.track_length_m() + 1e-9);
    }
}

TEST_CASE("invalid configs are rejected") {
    ScenarioConfig c;
    c.slot_duration_s = 0.0;
    CHECK_THROWS_AS(build_scenario(c), ValidationError);
    c = {};
    c.slot_duration_s = -0.01;
    CHECK_THROWS_AS(build_scenario(c), ValidationError);
    c = {};
    c.ue_speed_kmh = 0.0;
    CHECK_THROWS_AS(build_scenario(c), ValidationError);
    c = {};
    c.ue_speed_kmh = -10.0;
    CHECK_THROWS_AS(build_scenario(c), ValidationError);
    c = single_cell(10);
    c.bs_list->clear();
    CHECK_THROWS_AS(build_scenario(c), ValidationError);
    c = single_cell(10);
    c.bs_list->front().sectors.clear();
    CHECK_THROWS_AS(build_scenario(c), ValidationError);
    c = single_cell(1000000);
    CHECK_THROWS_AS(build_scenario(c), ValidationError);
    c = {};
    c.start_x_m = NAN;
    CHECK_THROWS_AS(build_scenario(c), ValidationError);
}

}
