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
#include <filesystem>
#include <random>

#include "channel.hpp"
#include "common.hpp"
#include "datasets.hpp"
#include "doctest.h"
#include "metrics.hpp"
#include "models.hpp"
#include "nn/layers.hpp"
#include "train.hpp"

using namespace railbeam;
using nn::Tensor;

namespace {

SetB subset(std::vector<std::size_t> idx, std::size_t a) {
    SetB s;
    s.kind = SetBKind::subset_of_a;
    s.measurement_count = idx.size();
    s.indices = std::move(idx);
    s.set_a_size = a;
    return s;
}

BeamDataset small_beam_dataset(std::size_t n, std::uint64_t seed = 3) {
    BeamDatasetConfig dc;
    dc.n_samples = n;
    dc.seed = seed;
    return generate_beam_dataset(ScenarioConfig{}, ChannelConfig{}, dc, 1);
}

CellDataset small_cell_dataset(CellVariant v, std::size_t n) {
    CellDatasetConfig dc;
    dc.variant = v;
    dc.n_samples = n;
    dc.seed = 5;
    return generate_cell_dataset(ScenarioConfig{}, ChannelConfig{}, dc, 1);
}

} // namespace

TEST_SUITE("datasets") {

TEST_CASE("a one-instance window pairs slot 0 with the next instance") {
    BeamDatasetConfig dc;
    dc.n_samples = 1;
    dc.t_in = 1;
    dc.horizon = 1;
    dc.noise.enabled = false;
    dc.seed = 11;
    const ScenarioConfig sc;
    const ChannelConfig ch;
    const BeamDataset ds = generate_beam_dataset(sc, ch, dc, 1);
    REQUIRE(ds.train.n == 1);
    CHECK(ds.val.n == 0);
    CHECK(ds.test.n == 0);
    CHECK(ds.train.x.shape() == nn::Shape{1, 1, ds.m()});
    CHECK(ds.train.y.shape() == nn::Shape{1, 64});

    // Independent reconstruction of the same pair from the channel model.
    ScenarioConfig at = sc;
    at.ue_speed_kmh = dc.speed_kmh;
    const Scenario scen = build_scenario(at);
    const ChannelModel model(scen, ch, derive_seed(dc.seed, 100));
    auto rsrp = [&](std::size_t c, std::size_t slot) {
        const auto paths = model.synthesize_paths(c, slot);
        return coefficients_to_rsrp(beam_coefficients(paths, model.codebook(c), scen.sector(c).tx_power_dbm));
    };
    std::size_t serving = 0;
    double best = -1e300;
    for (std::size_t c = 0; c < scen.cell_count(); ++c) {
        const auto r = rsrp(c, 0);
        const double m = *std::max_element(r.begin(), r.end());
        if (m > best) best = m, serving = c;
    }
    const auto target = rsrp(serving, dc.meas_period_slots);
    for (std::size_t b = 0; b < 64; ++b) CHECK(ds.train.y_dbm[b] == doctest::Approx(target[b]).epsilon(1e-12));
    const auto now = rsrp(serving, 0);
    for (std::size_t j = 0; j < ds.m(); ++j)
        CHECK(measured_dbm(ds.train, ds.set_b, 0, 0)[j] ==
              doctest::Approx(std::max(now[ds.set_b.indices[j]], kRsrpFloorDbm)).epsilon(1e-9));
}

TEST_CASE("speed datasets differ only in speed") {
    BeamDatasetConfig a, b;
    a.n_samples = b.n_samples = 20;
    a.speed_kmh = 60.0;
    b.speed_kmh = 500.0;
    const auto da = generate_beam_dataset(ScenarioConfig{}, ChannelConfig{}, a, 1);
    const auto db = generate_beam_dataset(ScenarioConfig{}, ChannelConfig{}, b, 1);
    CHECK(da.scenario_hash == db.scenario_hash);
    auto ja = to_json(a), jb = to_json(b);
    ja.erase("speed_kmh");
    jb.erase("speed_kmh");
    CHECK(ja == jb);
    CHECK(da.train.y_dbm != db.train.y_dbm);
}

TEST_CASE("normalisation round trip") {
    const MinMax n = MinMax::fit({-140.0, -95.5, -60.25});
    CHECK(n.scale(-140.0) == 0.0);
    CHECK(n.scale(-60.25) == 1.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-160.0, -40.0);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng);
        CHECK(std::abs(n.unscale(n.scale(v)) - v) <= 1e-12);
    }
    const MinMax flat = MinMax::fit({-80.0, -80.0});
    CHECK(flat.hi - flat.lo == 1.0);
    CHECK_THROWS_AS(MinMax::fit({}), ValidationError);
}

TEST_CASE("beam splits follow 8:1:1") {
    const BeamDataset ds = small_beam_dataset(100);
    CHECK(ds.train.n == 80);
    CHECK(ds.val.n == 10);
    CHECK(ds.test.n == 10);
    CHECK(ds.output_norm.lo <= ds.output_norm.hi);
}

TEST_CASE("partial variants measure half of each window") {
    for (std::size_t k0 = 0; k0 < 3; ++k0) {
        const std::size_t full = measured_count(CellVariant::all_beam_cell, k0, 6, 21, 64);
        CHECK(full == 6 * 21 * 64);
        CHECK(2 * measured_count(CellVariant::part_cell, k0, 6, 21, 64) == full);
        CHECK(2 * measured_count(CellVariant::part_cell, k0, 6, 20, 64) == 6 * 20 * 64);
        CHECK(2 * measured_count(CellVariant::part_beam, k0, 6, 21, 64) == full);
    }
    // Part_Cell alternates which cells are measured.
    CHECK(is_measured(CellVariant::part_cell, 0, 0, 5));
    CHECK_FALSE(is_measured(CellVariant::part_cell, 1, 0, 5));
    CHECK(is_measured(CellVariant::part_cell, 1, 1, 5));
    // Part_Beam alternates which beams are measured.
    CHECK(is_measured(CellVariant::part_beam, 0, 3, 4));
    CHECK_FALSE(is_measured(CellVariant::part_beam, 0, 3, 5));
    CHECK(is_measured(CellVariant::part_beam, 1, 3, 5));
}

TEST_CASE("cell dataset shape and split") {
    const CellDataset ds = small_cell_dataset(CellVariant::part_beam, 25);
    CHECK(ds.train.n == 15);
    CHECK(ds.val.n == 5);
    CHECK(ds.test.n == 5);
    CHECK(ds.train.x.shape() == nn::Shape{15, 6, 21, 64});
    CHECK(ds.train.y.shape() == nn::Shape{15, 4, 21});
    CHECK(2 * ds.measured_per_window == 6 * 21 * 64);
    CHECK_THROWS_AS(cell_variant_from_string("Half_Beam"), ValidationError);
}

TEST_CASE("beam dataset write and read") {
    const BeamDataset ds = small_beam_dataset(30);
    const auto dir = (std::filesystem::temp_directory_path() / "railbeam_test_beam_ds").string();
    std::filesystem::remove_all(dir);
    write_beam_dataset(ds, dir);
    const BeamDataset back = read_beam_dataset(dir);
    CHECK(back.train.h == ds.train.h);
    CHECK(back.test.y_dbm == ds.test.y_dbm);
    CHECK(back.set_b.indices == ds.set_b.indices);
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(read_beam_dataset(dir), ValidationError);
}

}

TEST_SUITE("predictors") {

TEST_CASE("non-AI picks the strongest measured beam") {
    const SetB s = subset({0, 16}, 64);
    CHECK(predict_nonai({-80.0, -70.0}, s) == 16);
    CHECK(predict_nonai({-70.0, -80.0}, s) == 0);
    CHECK(predict_nonai({-70.0, -70.0}, s) == 0);
    // With every beam measured it is the true argmax.
    const SetB all = select_set_b(64, SelectionPattern::equidistant, Ratio{1, 1}, 0);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(-90.0, 8.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(64);
        for (double& x : v) x = g(rng);
        const auto want = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
        CHECK(predict_nonai(v, all) == want);
    }
}

TEST_CASE("top-1 accuracy") {
    const std::vector<std::vector<double>> truth{{-90, -80, -85}, {-70, -75, -70}};
    CHECK(top1_accuracy({1, 0}, truth) == 1.0);
    CHECK(top1_accuracy({1, 2}, truth) == 1.0); // ties count as correct
    CHECK(top1_accuracy({0, 1}, truth) == 0.0);
    CHECK(top1_accuracy({1, 1}, truth) == 0.5);
    CHECK_THROWS_AS(top1_accuracy({1}, truth), ValidationError);

    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, 63);
    const std::size_t n = 20000;
    std::vector<double> flat(n * 64);
    for (double& v : flat) v = g(rng);
    std::vector<std::size_t> guess(n);
    for (auto& p : guess) p = pick(rng);
    const double acc = top1_accuracy(guess, flat, 64);
    const double p = 1.0 / 64.0, sigma = std::sqrt(p * (1 - p) / double(n));
    CHECK(std::abs(acc - p) <= 3 * sigma);
}

TEST_CASE("nmse") {
    const std::vector<double> t{1.0, 2.0, 3.0, 6.0}, p{1.5, 2.0, 2.0, 6.0};
    // mean 3, variance sum 4+1+0+9 = 14, error sum 0.25+0+1+0
    CHECK(nmse(p, t) == doctest::Approx(1.25 / 14.0).epsilon(1e-15));
    CHECK(nmse(t, t) == 0.0);
    CHECK_THROWS_AS(nmse(std::vector<double>{1, 2}, std::vector<double>{4, 4}), ValidationError);
    CHECK_THROWS_AS(nmse(std::vector<double>{1}, std::vector<double>{1, 2}), ValidationError);
}

TEST_CASE("beam predictors emit one RSRP per codebook beam") {
    const BeamDataset ds = small_beam_dataset(40);
    for (PredictorId id : {PredictorId::lstm_downsampled, PredictorId::cnn_fc_downsampled,
                           PredictorId::convlstm_downsampled, PredictorId::csai}) {
        const Predictor p = make_beam_predictor(id, ds, ArchConfig{}, 1);
        const Tensor y = predict_beam_rsrp(p, beam_input(p, ds.test));
        CHECK(y.shape() == nn::Shape{ds.test.n, 64});
        CHECK(predict_best_beams(p, ds.test).size() == ds.test.n);
    }
}

TEST_CASE("csai bridge reproduces the convlstm") {
    const BeamDataset ds = small_beam_dataset(60);
    const Predictor conv = make_beam_predictor(PredictorId::convlstm_downsampled, ds, ArchConfig{}, 9);
    const Predictor warm = csai_from_convlstm(conv, ds);
    const Tensor a = predict_beam_rsrp(conv, beam_input(conv, ds.test));
    const Tensor b = predict_beam_rsrp(warm, beam_input(warm, ds.test));
    REQUIRE(a.shape() == b.shape());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-12);
}

TEST_CASE("cell anchor takes each beam's newest measurement") {
    // 1 window, 3 instances, 2 cells, 2 beams; -160 marks "not measured".
    const MinMax norm{-160.0, -40.0};
    const double raw[3][2][2] = {{{-70, -160}, {-160, -160}},
                                 {{-160, -65}, {-90, -160}},
                                 {{-80, -160}, {-160, -160}}};
    Tensor x({1, 3, 2, 2});
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t b = 0; b < 2; ++b) x[(t * 2 + c) * 2 + b] = norm.scale(raw[t][c][b]);
    const Tensor a = cell_anchor_dbm(norm, x);
    CHECK(a[0] == doctest::Approx(-65.0).epsilon(1e-12)); // beam 1 at t=1 beats beam 0 at t=2
    CHECK(a[1] == doctest::Approx(-90.0).epsilon(1e-12));

    Tensor empty({1, 3, 2, 2});
    empty.fill(norm.scale(kRsrpFloorDbm));
    CHECK(cell_anchor_dbm(norm, empty)[0] == kRsrpFloorDbm);
}

TEST_CASE("cell predictor output shape and variant check") {
    const CellDataset ds = small_cell_dataset(CellVariant::all_beam_cell, 10);
    const Predictor p = make_cell_predictor(PredictorId::cell_cnn, ds, ArchConfig{}, 2);
    const Tensor y = predict_cell_l3(p, ds.test.x, CellVariant::all_beam_cell);
    CHECK(y.shape() == nn::Shape{ds.test.n, 4, 21});
    CHECK(y.all_finite());
    CHECK_THROWS_AS(predict_cell_l3(p, ds.test.x, CellVariant::part_cell), ValidationError);
}

TEST_CASE("predictor checkpoint round trip") {
    const BeamDataset ds = small_beam_dataset(40);
    const Predictor p = make_beam_predictor(PredictorId::csai, ds, ArchConfig{}, 4);
    const auto path = (std::filesystem::temp_directory_path() / "railbeam_test_pred.rbck").string();
    save_predictor(path, p);
    const Predictor q = load_predictor(path);
    std::filesystem::remove(path);
    CHECK(q.id == p.id);
    CHECK(q.set_b.indices == p.set_b.indices);
    CHECK(predict_beam_rsrp(q, ds.test.h) == predict_beam_rsrp(p, ds.test.h));
}

TEST_CASE("training fits an identity map") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto make = [&](std::size_t n) {
        Tensor x({n, 4});
        for (double& v : x.values()) v = u(rng);
        return x;
    };
    const Tensor xt = make(2048), xv = make(256);
    auto fit = [&] {
        nn::Sequential net;
        net.emplace<nn::Dense>(4, 4);
        net.init(1);
        TrainConfig cfg;
        cfg.batch_size = 32;
        cfg.max_epochs = 50;
        cfg.lr = 1e-2;
        cfg.workers = 1;
        return train_network(net, xt, xt, xv, xv, cfg);
    };
    const TrainResult r = fit();
    CHECK(r.best_val_loss < 1e-4);
    CHECK(r.history.size() <= 50);
    const TrainResult again = fit();
    REQUIRE(again.history.size() == r.history.size());
    for (std::size_t e = 0; e < r.history.size(); ++e) {
        CHECK(again.history[e].train_loss == r.history[e].train_loss);
        CHECK(again.history[e].val_loss == r.history[e].val_loss);
    }
}

}
