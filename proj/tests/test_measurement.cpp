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
#include <cstring>
#include <random>

#include "channel.hpp"
#include "doctest.h"
#include "measurement.hpp"
#include "trace.hpp"

using namespace railbeam;

TEST_SUITE("measurement") {

TEST_CASE("downsampling gathers in order") {
    const std::vector<double> v{0.0, -1.0, -2.0, -3.0};
    SetB s;
    s.kind = SetBKind::subset_of_a;
    s.indices = {0, 2};
    s.set_a_size = 4;
    s.measurement_count = 2;
    CHECK(downsample_measure(v, s) == std::vector<double>{0.0, -2.0});
    const SetB full = select_set_b(4, SelectionPattern::equidistant, Ratio{1, 1}, 0);
    CHECK(downsample_measure(v, full) == v);

    std::vector<double> big(64);
    for (std::size_t i = 0; i < 64; ++i) big[i] = -60.0 - 0.5 * static_cast<double>(i);
    const SetB s16 = select_set_b(64, SelectionPattern::equidistant, Ratio{1, 16}, 0);
    CHECK(downsample_measure(big, s16) == std::vector<double>{big[0], big[16], big[32], big[48]});

    s.indices = {0, 9};
    CHECK_THROWS_AS(downsample_measure(v, s), ValidationError);
}

TEST_CASE("compressed measurement is a plain matrix product") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    const CompressionMatrix M = CompressionMatrix::random(4, 64, 11);
    CHECK(M.all_finite());
    std::vector<cplx> h1(64), h2(64);
    for (auto& v : h1) v = {g(rng), g(rng)};
    for (auto& v : h2) v = {g(rng), g(rng)};
    const auto y = cs_measure(h1, M);
    for (std::size_t r = 0; r < 4; ++r) {
        double re = 0.0, im = 0.0, norm = 0.0;
        for (std::size_t c = 0; c < 64; ++c) {
            re += M.at(r, c).real() * h1[c].real() - M.at(r, c).imag() * h1[c].imag();
            im += M.at(r, c).real() * h1[c].imag() + M.at(r, c).imag() * h1[c].real();
            norm += std::norm(M.at(r, c));
        }
        CHECK(std::abs(y[r] - cplx{re, im}) < 1e-12);
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    }
    const cplx a{0.3, -1.2};
    std::vector<cplx> mix(64);
    for (std::size_t c = 0; c < 64; ++c) mix[c] = a * h1[c] + h2[c];
    const auto ym = cs_measure(mix, M), y2 = cs_measure(h2, M);
    for (std::size_t r = 0; r < 4; ++r) CHECK(std::abs(ym[r] - (a * y[r] + y2[r])) < 1e-12);
    for (const cplx& v : cs_measure(std::vector<cplx>(64), M)) CHECK(v == cplx{0.0, 0.0});
    CHECK_THROWS_AS(cs_measure(std::vector<cplx>(63), M), ValidationError);
}

TEST_CASE("selection matrix reproduces downsampling bit for bit") {
    const ChannelModel m(build_scenario({}), {}, 5);
    const SetB s = select_set_b(64, SelectionPattern::equidistant, Ratio{1, 16}, 0);
    const CompressionMatrix M = CompressionMatrix::selection(s.indices, 64);
    for (std::size_t r = 0; r < M.rows(); ++r) {
        int ones = 0;
        for (std::size_t c = 0; c < M.cols(); ++c) ones += M.at(r, c) == cplx{1.0, 0.0};
        CHECK(ones == 1);
    }
    for (std::size_t slot : {0u, 100u, 2000u, 2800u}) {
        for (std::size_t cell = 0; cell < 21; cell += 5) {
            const auto h = m.coefficients(cell, slot);
            const auto picked = downsample_measure(coefficients_to_rsrp(h), s);
            const auto y = cs_measure(h, M);
            const auto via_cs = measurement_power_dbm(y);
            CHECK(std::memcmp(picked.data(), via_cs.data(), picked.size() * sizeof(double)) == 0);
            for (std::size_t j = 0; j < y.size(); ++j) CHECK(y[j] == h[s.indices[j]]);
        }
    }
}

TEST_CASE("wide-beam matrix aggregates 2x2 blocks") {
    const CompressionMatrix W = CompressionMatrix::wide_beam(dft_codebook(8, 8, 1));
    CHECK(W.rows() == 16);
    CHECK(W.cols() == 64);
    for (std::size_t r = 0; r < 16; ++r) {
        int nz = 0;
        for (std::size_t c = 0; c < 64; ++c) nz += W.at(r, c) != cplx{0.0, 0.0};
        CHECK(nz == 4);
    }
}

TEST_CASE("L3 filter") {
    L3State cold(1, {});
    CHECK(cold.cold());
    const L3State one = l3_update(cold, {{-80.0, -90.0}});
    CHECK(one.filtered()[0] == -80.0);
    CHECK_FALSE(one.cold());

    L3Config mean;
    mean.aggregation = L3Aggregation::mean;
    CHECK(l3_update(L3State(1, mean), {{-80.0, -90.0}}).filtered()[0] == -85.0);

    L3Config nomem;
    nomem.alpha = 1.0;
    L3State s(2, nomem);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-120.0, -60.0);
    for (int k = 0; k < 20; ++k) {
        const std::vector<std::vector<double>> in{{u(rng), u(rng)}, {u(rng)}};
        s.update(in);
        CHECK(s.filtered()[0] == std::max(in[0][0], in[0][1]));
        CHECK(s.filtered()[1] == in[1][0]);
    }

    L3State c(1, {});
    for (int k = 0; k < 50; ++k) {
        c.update({{-77.25, -90.0}});
        CHECK(c.filtered()[0] == -77.25);
    }

    CHECK_THROWS_AS(l3_update(L3State(1, {}), {{}}), ValidationError);
    CHECK_THROWS_AS(l3_update(L3State(2, {}), {{-80.0}}), ValidationError);
}

TEST_CASE("L3 output stays within its input history") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-130.0, -50.0);
    for (auto filter : {L3Filter::ema, L3Filter::window_mean}) {
        L3Config cfg;
        cfg.filter = filter;
        L3State s(3, cfg);
        std::vector<double> lo(3, 1e9), hi(3, -1e9);
        for (int k = 0; k < 100; ++k) {
            std::vector<std::vector<double>> in(3);
            for (std::size_t c = 0; c < 3; ++c) {
                in[c] = {u(rng), u(rng), u(rng)};
                const double agg = *std::max_element(in[c].begin(), in[c].end());
                lo[c] = std::min(lo[c], agg);
                hi[c] = std::max(hi[c], agg);
            }
            s.update(in);
            for (std::size_t c = 0; c < 3; ++c) {
                CHECK(s.filtered()[c] >= lo[c] - 1e-12);
                CHECK(s.filtered()[c] <= hi[c] + 1e-12);
            }
        }
    }
}

TEST_CASE("window mean averages the last samples") {
    L3Config cfg;
    cfg.filter = L3Filter::window_mean;
    cfg.window = 2;
    L3State s(1, cfg);
    s.update({{-80.0}});
    s.update({{-90.0}});
    s.update({{-100.0}});
    CHECK(s.filtered()[0] == -95.0);
}

TEST_CASE("measurement noise") {
    NoiseConfig off;
    std::vector<double> v{-80.0, kRsrpFloorDbm, -100.0};
    std::mt19937_64 rng(1);
    apply_rsrp_noise(v, off, rng);
    CHECK(v == std::vector<double>{-80.0, kRsrpFloorDbm, -100.0});
    NoiseConfig on{true, 1.0};
    std::vector<double> w = v;
    std::mt19937_64 r1(5), r2(5);
    apply_rsrp_noise(w, on, r1);
    std::vector<double> w2 = v;
    apply_rsrp_noise(w2, on, r2);
    CHECK(w == w2);
    CHECK(w[1] == kRsrpFloorDbm);
    CHECK(w[0] != -80.0);

    std::vector<cplx> h(20000, cplx{1.0, 1.0});
    std::mt19937_64 r3(9);
    apply_coefficient_noise(h, on, r3);
    double mean = 0.0, sq = 0.0;
    for (const cplx& x : h) {
        const double db = 10.0 * std::log10(std::norm(x) / 2.0);
        mean += db;
        sq += db * db;
        CHECK(std::arg(x) == doctest::Approx(std::arg(cplx{1.0, 1.0})).epsilon(1e-12));
    }
    mean /= 20000.0;
    const double sd = std::sqrt(sq / 20000.0 - mean * mean);
    CHECK(std::abs(mean) < 0.05);
    CHECK(sd == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("measurement trace bookkeeping") {
    ScenarioConfig sc;
    sc.n_slots = 201;
    const ChannelModel m(build_scenario(sc), {}, 3);
    TraceConfig cfg;
    const MeasurementTrace t = generate_trace(m, cfg, 1, 2);
    CHECK(t.n_instances() == 51);
    CHECK(t.sinr.size() == 201 * 21);
    for (std::size_t i = 0; i < t.n_instances(); ++i) {
        const auto truth = m.l1_rsrp(4, t.instance_slot(i));
        const auto l1 = t.l1_at(i);
        CHECK(std::equal(truth.begin(), truth.end(), l1.begin() + 4 * 64));
    }
    // Sum of linear signal-to-interference over all cells cannot exceed the
    // single-cell bound; spot check the SINR of the strongest cell.
    const auto s0 = t.sinr_at(0);
    const auto best = std::max_element(s0.begin(), s0.end()) - s0.begin();
    std::vector<double> others;
    for (std::size_t c = 0; c < 21; ++c)
        if (static_cast<std::ptrdiff_t>(c) != best && t.best_rsrp[c] > kRsrpFloorDbm) others.push_back(t.best_rsrp[c]);
    CHECK(s0[best] == doctest::Approx(sinr_db(t.best_rsrp[best], others, -90.0)).epsilon(1e-9));
    const MeasurementTrace again = generate_trace(m, cfg, 1, 1);
    CHECK(again.l3 == t.l3);
    CHECK(again.sinr == t.sinr);
}

}
