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
#include <limits>
#include <random>

#include "common.hpp"
#include "doctest.h"
#include "handover.hpp"

using namespace railbeam;

namespace {

/// Two or more cells with one measurement per slot and a healthy SINR.
MeasurementTrace flat_trace(std::size_t cells, std::size_t slots) {
    MeasurementTrace tr;
    tr.n_cells = cells;
    tr.n_beams = 1;
    tr.meas_period = 1;
    tr.n_slots = slots;
    tr.slot_duration_s = 0.01;
    tr.l3.assign(slots * cells, -80.0);
    tr.measured_l1 = tr.l3;
    tr.best_rsrp = tr.l3;
    tr.sinr.assign(slots * cells, 20.0);
    return tr;
}

/// Cell 1 jumps from 10 dB below cell 0 to 10 dB above it at slot `at`.
MeasurementTrace step_trace(std::size_t slots, std::size_t at) {
    MeasurementTrace tr = flat_trace(2, slots);
    for (std::size_t k = 0; k < slots; ++k) tr.l3[k * 2 + 1] = k < at ? -90.0 : -70.0;
    tr.measured_l1 = tr.l3;
    return tr;
}

/// Drifting cells whose SINR follows the L3 margin over the strongest rival,
/// so that staying too long on a fading cell ends in radio link failure.
MeasurementTrace coupled_trace(std::mt19937_64& rng, std::size_t slots) {
    MeasurementTrace tr = flat_trace(3, slots);
    std::normal_distribution<double> step(0.0, 0.4);
    std::uniform_real_distribution<double> start(-90.0, -80.0), drift(-0.15, 0.15);
    double level[3], slope[3];
    for (int c = 0; c < 3; ++c) level[c] = start(rng), slope[c] = drift(rng);
    for (std::size_t k = 0; k < slots; ++k) {
        for (int c = 0; c < 3; ++c) {
            level[c] += slope[c] + step(rng);
            tr.l3[k * 3 + c] = level[c];
        }
        for (int c = 0; c < 3; ++c) {
            double rival = -1e9;
            for (int o = 0; o < 3; ++o)
                if (o != c) rival = std::max(rival, level[o]);
            tr.sinr[k * 3 + c] = level[c] - rival;
        }
    }
    tr.measured_l1 = tr.l3;
    return tr;
}

std::vector<std::size_t> ticks_of(const HandoverLog& log, EventKind k) {
    std::vector<std::size_t> t;
    for (const auto& e : log.events)
        if (e.kind == k) t.push_back(e.t);
    return t;
}

Event ev(std::size_t t, EventKind k, int serving, int target, HofKind h = HofKind::none) {
    return {t, k, serving, target, h};
}

} // namespace

TEST_SUITE("handover") {

TEST_CASE("a step crossing fires after time-to-trigger") {
    HandoverConfig cfg;
    const MeasurementTrace tr = step_trace(300, 100);
    const HandoverLog log = simulate(tr, cfg);
    REQUIRE(ticks_of(log, EventKind::a3_start) == std::vector<std::size_t>{100});
    REQUIRE(ticks_of(log, EventKind::ho_command) == std::vector<std::size_t>{100 + 16});
    const auto ok = ticks_of(log, EventKind::ho_success);
    REQUIRE(ok.size() == 1);
    CHECK(ok[0] == 116 + 5 + 4); // preparation then execution
    CHECK(log.count(EventKind::rlf) == 0);
}

TEST_CASE("an infinite offset never hands over") {
    HandoverConfig cfg;
    cfg.a3_offset_db = std::numeric_limits<double>::infinity();
    const HandoverLog log = simulate(step_trace(300, 100), cfg);
    CHECK(log.count(EventKind::ho_command) == 0);
    CHECK(log.count(EventKind::a3_start) == 0);
}

TEST_CASE("oracle AI option 1 leads by the time-to-trigger") {
    HandoverConfig trad;
    trad.ttt_s = 0.04;
    HandoverConfig ai = trad;
    ai.mode = HandoverMode::ai_option1;
    const MeasurementTrace tr = step_trace(300, 100);
    const auto a = ticks_of(simulate(tr, trad), EventKind::ho_command);
    const auto b = ticks_of(simulate(tr, ai, oracle_forecast(tr, 4)), EventKind::ho_command);
    REQUIRE(a.size() == 1);
    REQUIRE(b.size() == 1);
    CHECK(a[0] == 104);
    CHECK(b[0] + 4 == a[0]);
}

TEST_CASE("AI modes need a forecast") {
    HandoverConfig ai;
    ai.mode = HandoverMode::ai_option2;
    CHECK_THROWS_AS(simulate(step_trace(50, 10), ai), ValidationError);
}

TEST_CASE("AI option 2 waits half a time-to-trigger") {
    HandoverConfig ai;
    ai.mode = HandoverMode::ai_option2;
    const MeasurementTrace tr = step_trace(300, 100);
    const auto b = ticks_of(simulate(tr, ai, oracle_forecast(tr, 4)), EventKind::ho_command);
    REQUIRE(b.size() == 1);
    CHECK(b[0] == 100 + 8);
}

TEST_CASE("radio link failure timers") {
    HandoverConfig cfg;
    const std::size_t t310 = cfg.ticks(cfg.t310_s);
    auto failures = [&](auto sinr, std::size_t n) {
        UeConnState s = initial_state(2, 0, cfg);
        for (std::size_t t = 0; t < n; ++t) detect_rlf(s, cfg, sinr(t), t);
        return ticks_of(s.log, EventKind::rlf);
    };
    const auto constant = failures([&](std::size_t) { return cfg.qout_db - 1.0; }, t310 + 1);
    REQUIRE(constant.size() == 1);
    CHECK(constant[0] + 1 == t310); // the t310-th tick below qout
    CHECK(failures([&](std::size_t t) { return t < t310 / 2 ? cfg.qout_db - 1.0 : cfg.qin_db + 1.0; }, 3 * t310)
              .empty());
    CHECK(failures([&](std::size_t t) { return t % 2 ? cfg.qin_db + 0.5 : cfg.qout_db - 0.5; }, 5 * t310).empty());
}

TEST_CASE("failure classification") {
    HandoverConfig cfg;
    auto kinds = [&](std::vector<Event> e) {
        HandoverLog log;
        log.events = std::move(e);
        log.n_ticks = 1000;
        std::vector<HofKind> k;
        for (const auto& o : classify_hof(log, cfg)) k.push_back(o.kind);
        return k;
    };
    CHECK(kinds({ev(10, EventKind::a3_start, 0, 1), ev(20, EventKind::rlf, 0, -1)}) ==
          std::vector<HofKind>{HofKind::too_late});
    CHECK(kinds({ev(20, EventKind::rlf, 0, -1)}).empty()); // no neighbour in sight
    CHECK(kinds({ev(26, EventKind::ho_command, 0, 1), ev(35, EventKind::ho_success, 0, 1),
                 ev(80, EventKind::rlf, 1, -1)}) == std::vector<HofKind>{HofKind::too_early});
    CHECK(kinds({ev(26, EventKind::ho_command, 0, 1), ev(35, EventKind::ho_success, 0, 1),
                 ev(60, EventKind::ho_command, 1, 2), ev(69, EventKind::ho_success, 1, 2)}) ==
          std::vector<HofKind>{HofKind::wrong_cell, HofKind::none});
    HandoverLog bad;
    bad.events = {ev(5, EventKind::ho_command, 0, 1)};
    CHECK_THROWS_AS(classify_hof(bad, cfg), InvariantError);
}

TEST_CASE("kpi formulas") {
    HandoverConfig cfg;
    HandoverLog log;
    log.n_ticks = 2000;
    for (int k = 0; k < 3; ++k) {
        log.events.push_back(ev(200 * k, EventKind::ho_command, k, k + 1));
        log.events.push_back(ev(200 * k + 9, EventKind::ho_success, k, k + 1));
    }
    log.events.push_back(ev(700, EventKind::ho_command, 3, 0));
    log.events.push_back(ev(705, EventKind::hof, 3, 0, HofKind::too_late));
    const KpiReport r = kpis(log, cfg);
    CHECK(r.hof_rate == 0.25);
    CHECK(r.ho_commands == r.ho_success + r.hof_events);
    CHECK(r.mean_interruption_ms == doctest::Approx(40.0));
    CHECK(r.rlf_rate == 0.0);
    CHECK(r.duration_s == doctest::Approx(20.0));
    HandoverLog empty;
    empty.n_ticks = 10;
    const KpiReport e = kpis(empty, cfg);
    CHECK(e.degenerate);
    CHECK(e.hof_rate == 0.0);
}

TEST_CASE("simulated logs conserve commands and are deterministic") {
    std::mt19937_64 rng(21);
    HandoverConfig cfg;
    for (int i = 0; i < 20; ++i) {
        const MeasurementTrace tr = coupled_trace(rng, 1500);
        for (HandoverMode m : {HandoverMode::traditional, HandoverMode::ai_option1, HandoverMode::ai_option2}) {
            HandoverConfig c = cfg;
            c.mode = m;
            const ForecastFn f = m == HandoverMode::traditional ? ForecastFn{} : oracle_forecast(tr, 4);
            const HandoverLog a = simulate(tr, c, f), b = simulate(tr, c, f);
            CHECK(a.events == b.events);
            const KpiReport r = kpis(a, c);
            CHECK(r.ho_commands == r.ho_success + r.hof_events);
            CHECK(r.classified_success + r.hof <= r.ho_commands + r.rlf);
            if (r.ho_success) CHECK(r.mean_interruption_ms >= 40.0);
        }
    }
}

TEST_CASE("longer time-to-trigger never reduces late failures") {
    // Two cells swap places at 0.5 dB per slot every 600 slots and then hold
    // a 20 dB gap; the SINR of each is its L3 margin over the other.
    const std::size_t n = 2400;
    MeasurementTrace tr = flat_trace(2, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double phase = static_cast<double>(k % 600);
        const double sign = (k / 600) % 2 ? -1.0 : 1.0;
        const double diff = sign * std::max(-20.0, 20.0 - 0.5 * phase);
        tr.l3[2 * k] = -85.0 + diff / 2;
        tr.l3[2 * k + 1] = -85.0 - diff / 2;
        tr.sinr[2 * k] = diff;
        tr.sinr[2 * k + 1] = -diff;
    }
    tr.measured_l1 = tr.l3;
    std::size_t prev = 0;
    for (double ttt : {0.0, 0.04, 0.08, 0.16, 0.32, 0.64, 1.28, 2.56}) {
        HandoverConfig cfg;
        cfg.ttt_s = ttt;
        const std::size_t late = kpis(simulate(tr, cfg), cfg).too_late;
        CAPTURE(ttt);
        CHECK(late >= prev);
        prev = late;
    }
    CHECK(prev > 0);
}

TEST_CASE("config validation and csv") {
    HandoverConfig cfg;
    cfg.qin_db = cfg.qout_db;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    HandoverConfig nan;
    nan.a3_offset_db = std::nan("");
    CHECK_THROWS_AS(nan.validate(), ValidationError);
    CHECK_THROWS_AS(handover_mode_from_string("ai_option3"), ValidationError);
    const HandoverLog log = simulate(step_trace(300, 100), HandoverConfig{});
    const std::string csv = log.to_csv();
    CHECK(csv.find("ho_command") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') >= static_cast<long>(log.events.size()));
}

}
