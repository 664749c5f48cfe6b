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


#include "checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "common.hpp"
#include "datasets.hpp"
#include "handover.hpp"
#include "models.hpp"
#include "nn/checkpoint.hpp"
#include "nn/gradcheck.hpp"
#include "nn/layers.hpp"
#include "pipeline.hpp"

namespace railbeam {

using nlohmann::json;
using nn::Tensor;
namespace fs = std::filesystem;

json CheckResult::to_json() const {
    return {{"name", name}, {"passed", passed}, {"value", value}, {"detail", detail}, {"seconds", seconds}};
}

namespace {

template <class F>
CheckResult timed(const std::string& name, F body) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("threw: ") + e.what();
    }
    r.name = name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

Tensor uniform(nn::Shape s, std::mt19937_64& rng, double lo, double hi) {
    Tensor t(std::move(s));
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : t.values()) v = u(rng);
    return t;
}

Event ev(std::size_t t, EventKind k, int serving, int target, HofKind h = HofKind::none) {
    return {t, k, serving, target, h};
}

HandoverLog make_log(std::vector<Event> events, std::size_t n_ticks = 1000) {
    HandoverLog log;
    log.events = std::move(events);
    log.n_ticks = n_ticks;
    return log;
}

/// Synthetic trace: random-walk L3 for three cells, SINR far above qin.
MeasurementTrace random_trace(std::mt19937_64& rng, std::size_t instances, std::size_t period) {
    MeasurementTrace tr;
    tr.n_cells = 3;
    tr.n_beams = 1;
    tr.meas_period = period;
    tr.n_slots = instances * period;
    tr.slot_duration_s = 0.01;
    std::normal_distribution<double> step(0.0, 1.5);
    std::uniform_real_distribution<double> start(-95.0, -75.0), drift(-0.6, 0.6);
    std::vector<double> level(tr.n_cells), slope(tr.n_cells);
    for (std::size_t c = 0; c < tr.n_cells; ++c) {
        level[c] = start(rng);
        slope[c] = drift(rng);
    }
    for (std::size_t k = 0; k < instances; ++k)
        for (std::size_t c = 0; c < tr.n_cells; ++c) {
            level[c] += slope[c] + step(rng);
            tr.l3.push_back(level[c]);
            tr.measured_l1.push_back(level[c]);
        }
    tr.best_rsrp.assign(tr.n_slots * tr.n_cells, -80.0);
    tr.sinr.assign(tr.n_slots * tr.n_cells, 20.0);
    return tr;
}

/// Moves every parameter to a random point; deep LSTM stacks at their
/// initialisation have gradients too small for finite differences.
void randomise(nn::Sequential& m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    for (Tensor* p : m.params())
        for (double& v : p->values()) v = u(rng);
}

long first_command(const HandoverLog& log) {
    for (const auto& e : log.events)
        if (e.kind == EventKind::ho_command) return static_cast<long>(e.t);
    return -1;
}

} // namespace

// Near the optimum step of a five-point stencil, machine epsilon^(1/5).
constexpr double kEps = 1e-3;

CheckResult check_gradients(std::size_t seeds) {
    return timed("gradient_oracle", [&] {
        using namespace nn;
        double worst = 0.0;
        std::string where;
        std::size_t checked = 0;
        auto run = [&](const std::string& label, Sequential& m, const Tensor& x, std::mt19937_64& rng,
                       std::size_t coords) {
            Tensor target(m.output_shape(x.shape()));
            std::uniform_real_distribution<double> u(0.05, 0.95);
            for (double& v : target.values()) v = u(rng);
            const auto r = grad_check(m, x, target, kEps, coords, rng());
            checked += r.checked;
            if (r.max_rel_error > worst) {
                worst = r.max_rel_error;
                where = label + " " + r.worst;
            }
        };
        ArchConfig arch;
        arch.probe = true;
        for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
            std::mt19937_64 rng(seed * 7919);
            {
                Sequential m;
                m.emplace<Dense>(5, 4);
                m.emplace<Activation>(ActivationKind::tanh);
                m.init(seed);
                run("dense+tanh", m, uniform({3, 5}, rng, -1, 1), rng, 0);
            }
            {
                Sequential m;
                m.emplace<Conv2d>(2, 3, 3, 3, Padding::same);
                m.emplace<Activation>(ActivationKind::sigmoid);
                m.init(seed);
                run("conv2d+sigmoid", m, uniform({2, 2, 4, 5}, rng, -1, 1), rng, 0);
            }
            {
                Sequential m;
                m.emplace<Conv2d>(1, 2, 2, 2, Padding::valid);
                m.emplace<MaxPool>(2);
                m.emplace<Reshape>(std::vector<std::int64_t>{-1, 4});
                m.emplace<Dense>(4, 2);
                m.emplace<Activation>(ActivationKind::relu);
                m.init(seed);
                run("conv2d+maxpool+reshape+relu", m, uniform({2, 1, 5, 5}, rng, -1, 1), rng, 0);
            }
            {
                Sequential m;
                m.emplace<Lstm>(3, 4, true);
                m.emplace<Lstm>(4, 3, false);
                m.init(seed);
                run("lstm", m, uniform({2, 4, 3}, rng, -1, 1), rng, 0);
            }
            {
                Sequential m;
                auto& lc = m.emplace<LinearCompression>(8, 3, -120.0, -60.0);
                m.emplace<Dense>(3, 2);
                m.init(seed);
                lc.set_matrix(CompressionMatrix::random(3, 8, seed));
                run("linear_compression", m, uniform({6, 16}, rng, -1e-4, 1e-4), rng, 0);
            }
            {
                Sequential m = build_beam_network(PredictorId::csai, 16, 4, 3, arch, MinMax{-120.0, -60.0});
                randomise(m, seed + 101);
                static_cast<LinearCompression&>(m.layer(0)).set_matrix(CompressionMatrix::random(4, 16, seed));
                run("csai", m, uniform({2, 3, 32}, rng, -1e-4, 1e-4), rng, 0);
            }
            {
                auto nets = build_cell_networks(PredictorId::cell_cnn, 4, 8, 6, 4, arch);
                nets[0].init(seed);
                run("cell_cnn", nets[0], uniform({2, 6, 4, 8}, rng, 0, 1), rng, 0);
            }
            {
                auto nets = build_cell_networks(PredictorId::cell_lstm, 3, 4, 6, 4, arch);
                randomise(nets[0], seed + 303);
                run("cell_lstm", nets[0], uniform({2, 6, 3, 4}, rng, 0, 1), rng, 0);
            }
        }
        CheckResult r;
        r.value = worst;
        r.passed = worst < 1e-4 && checked > 0;
        r.detail = "max relative error " + std::to_string(worst) + " over " + std::to_string(checked) +
                   " coordinates, " + std::to_string(seeds) + " seeds; worst at " + where;
        return r;
    });
}

CheckResult check_bridge(std::uint64_t seed) {
    return timed("bridge_equivalence", [&] {
        ScenarioConfig sc;
        ChannelConfig ch;
        BeamDatasetConfig dc;
        dc.n_samples = 200;
        dc.seed = seed;
        const BeamDataset ds = generate_beam_dataset(sc, ch, dc, 1);
        const Predictor conv = make_beam_predictor(PredictorId::convlstm_downsampled, ds, ArchConfig{}, seed);
        const nn::Sequential csai = csai_bridge(conv.networks.at(0), ds.set_b, ds.n_beams, ds.input_norm);
        std::size_t differing = 0;
        double fwd = 0.0;
        for (const BeamSplit* s : {&ds.train, &ds.val, &ds.test}) {
            const Tensor meas = csai.layer(0).forward(s->h, nullptr);
            if (meas.shape() != s->x.shape()) throw InvariantError("bridge: measurement shape mismatch");
            for (std::size_t k = 0; k < meas.size(); ++k)
                if (std::memcmp(meas.data() + k, s->x.data() + k, sizeof(double)) != 0) ++differing;
            const Tensor a = csai.forward(s->h), b = conv.networks[0].forward(s->x);
            for (std::size_t k = 0; k < a.size(); ++k) fwd = std::max(fwd, std::abs(a[k] - b[k]));
        }
        CheckResult r;
        r.value = fwd;
        r.passed = differing == 0 && fwd <= 1e-12;
        r.detail = std::to_string(differing) + " measurement values differ bitwise; max forward difference " +
                   std::to_string(fwd);
        return r;
    });
}

CheckResult check_kpi_formulas() {
    return timed("kpi_formulas", [] {
        HandoverConfig cfg;
        std::vector<Event> e;
        for (std::size_t k = 0; k < 3; ++k) {
            const std::size_t t = 200 * k;
            e.push_back(ev(t, EventKind::ho_command, int(k), int(k + 1)));
            e.push_back(ev(t + 9, EventKind::ho_success, int(k), int(k + 1)));
        }
        e.push_back(ev(700, EventKind::ho_command, 3, 0));
        e.push_back(ev(705, EventKind::hof, 3, 0, HofKind::too_late));
        const KpiReport k = kpis(make_log(e, 2000), cfg);
        std::ostringstream why;
        bool ok = true;
        if (k.hof_rate != 0.25) ok = false, why << "hof_rate " << k.hof_rate << " != 0.25; ";
        if (k.ho_commands != k.ho_success + k.hof_events) ok = false, why << "commands != success + hof; ";
        if (k.mean_interruption_ms != cfg.exec_interruption_s * 1e3)
            ok = false, why << "interruption " << k.mean_interruption_ms << " ms; ";
        const KpiReport empty = kpis(make_log({}, 10), cfg);
        if (!empty.degenerate || empty.hof_rate != 0.0) ok = false, why << "empty log not degenerate; ";
        CheckResult r;
        r.passed = ok;
        r.value = k.hof_rate;
        r.detail = ok ? "hof_rate 0.25 for 1 HOF and 3 successes; conservation holds; empty log degenerate"
                      : why.str();
        return r;
    });
}

CheckResult check_hof_fixture() {
    return timed("hof_fixture", [] {
        HandoverConfig cfg; // 1 s ping-pong window = 100 ticks
        struct Case {
            const char* label;
            std::vector<Event> events;
            std::vector<HofKind> expected;
        };
        const std::vector<Case> cases{
            {"rlf during ttt dwell",
             {ev(10, EventKind::a3_start, 0, 1), ev(20, EventKind::rlf, 0, -1), ev(30, EventKind::reestablish, 1, -1)},
             {HofKind::too_late}},
            {"clean crossing",
             {ev(10, EventKind::a3_start, 0, 1), ev(26, EventKind::ho_command, 0, 1),
              ev(35, EventKind::ho_success, 0, 1)},
             {HofKind::none}},
            {"command lost",
             {ev(26, EventKind::ho_command, 0, 1), ev(31, EventKind::hof, 0, 1, HofKind::too_late),
              ev(40, EventKind::rlf, 0, -1)},
             {HofKind::too_late}},
            {"rlf right after success",
             {ev(26, EventKind::ho_command, 0, 1), ev(35, EventKind::ho_success, 0, 1), ev(80, EventKind::rlf, 1, -1),
              ev(90, EventKind::reestablish, 0, -1)},
             {HofKind::too_early}},
            {"target fails during execution",
             {ev(26, EventKind::ho_command, 0, 1), ev(35, EventKind::hof, 0, 1, HofKind::too_early)},
             {HofKind::too_early}},
            {"immediate move to a third cell",
             {ev(26, EventKind::ho_command, 0, 1), ev(35, EventKind::ho_success, 0, 1),
              ev(60, EventKind::ho_command, 1, 2), ev(69, EventKind::ho_success, 1, 2)},
             {HofKind::wrong_cell, HofKind::none}},
            {"late re-handover is not wrong_cell",
             {ev(26, EventKind::ho_command, 0, 1), ev(35, EventKind::ho_success, 0, 1),
              ev(300, EventKind::ho_command, 1, 2), ev(309, EventKind::ho_success, 1, 2)},
             {HofKind::none, HofKind::none}},
            {"return to source is ping-pong, not failure",
             {ev(26, EventKind::ho_command, 0, 1), ev(35, EventKind::ho_success, 0, 1),
              ev(60, EventKind::ho_command, 1, 0), ev(69, EventKind::ho_success, 1, 0), ev(69, EventKind::pingpong, 0, 1)},
             {HofKind::none, HofKind::none}},
        };
        std::size_t wrong = 0;
        std::string detail;
        for (const auto& c : cases) {
            const auto out = classify_hof(make_log(c.events), cfg);
            std::vector<HofKind> got;
            for (const auto& o : out) got.push_back(o.kind);
            if (got != c.expected) {
                ++wrong;
                detail += std::string(c.label) + " misclassified; ";
            }
        }
        bool malformed_caught = false;
        try {
            classify_hof(make_log({ev(5, EventKind::ho_command, 0, 1)}), cfg);
        } catch (const InvariantError&) {
            malformed_caught = true;
        }
        if (!malformed_caught) detail += "unmatched command accepted; ";
        CheckResult r;
        r.value = static_cast<double>(wrong);
        r.passed = wrong == 0 && malformed_caught;
        r.detail = r.passed ? std::to_string(cases.size()) + " hand-labelled logs match; unmatched command rejected"
                            : detail;
        return r;
    });
}

CheckResult check_rlf_timers() {
    return timed("rlf_timers", [] {
        HandoverConfig cfg;
        const std::size_t t310 = cfg.ticks(cfg.t310_s);
        auto run = [&](auto sinr_at, std::size_t n) {
            UeConnState s = initial_state(2, 0, cfg);
            for (std::size_t t = 0; t < n; ++t) detect_rlf(s, cfg, sinr_at(t), t);
            return s.log.count(EventKind::rlf);
        };
        const auto constant = run([&](std::size_t) { return cfg.qout_db - 1.0; }, t310);
        const auto dip = run([&](std::size_t t) { return t < t310 / 2 ? cfg.qout_db - 1.0 : cfg.qin_db + 1.0; }, 3 * t310);
        const auto osc = run([&](std::size_t t) { return t % 2 ? cfg.qin_db + 0.5 : cfg.qout_db - 0.5; }, 5 * t310);
        CheckResult r;
        r.passed = constant == 1 && dip == 0 && osc == 0;
        r.value = r.passed ? 0.0 : 1.0;
        r.detail = "constant qout-1: " + std::to_string(constant) + " rlf (want 1); half-t310 dip: " +
                   std::to_string(dip) + " (want 0); oscillation: " + std::to_string(osc) + " (want 0)";
        return r;
    });
}

CheckResult check_paired_traces(std::size_t n, std::uint64_t seed) {
    return timed("paired_traces", [&] {
        HandoverConfig trad, ai;
        ai.mode = HandoverMode::ai_option1;
        std::mt19937_64 rng(seed);
        std::size_t violations = 0, compared = 0;
        long total_lead = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const MeasurementTrace tr = random_trace(rng, 150, 4);
            const long a = first_command(simulate(tr, trad));
            const long b = first_command(simulate(tr, ai, oracle_forecast(tr, 4)));
            if (a < 0) continue;
            ++compared;
            if (b < 0 || b > a) ++violations;
            else total_lead += a - b;
        }
        CheckResult r;
        r.value = static_cast<double>(violations);
        r.passed = violations == 0 && compared > 0;
        r.detail = std::to_string(compared) + " traces with a traditional handover, " + std::to_string(violations) +
                   " where the oracle AI command came later; mean lead " +
                   std::to_string(compared ? double(total_lead) / double(compared) : 0.0) + " slots";
        return r;
    });
}

CheckResult check_checkpoint_corruption(const std::string& scratch_dir) {
    return timed("checkpoint_corruption", [&] {
        fs::create_directories(scratch_dir);
        const std::string path = scratch_dir + "/corrupt_probe.rbck";
        nn::Sequential m;
        m.emplace<nn::Dense>(4, 3);
        m.init(3);
        nn::save_checkpoint(path, {&m}, {{"probe", true}});
        {
            std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
            f.seekg(0, std::ios::end);
            const auto size = static_cast<std::streamoff>(f.tellg());
            f.seekp(size / 2);
            char c = 0;
            f.seekg(size / 2);
            f.get(c);
            f.seekp(size / 2);
            f.put(static_cast<char>(c ^ 0x5a));
        }
        CheckResult r;
        try {
            nn::load_checkpoint(path);
            r.detail = "corrupted checkpoint loaded without error";
        } catch (const InvariantError& e) {
            const std::string msg = e.what();
            r.passed = msg.find(path) != std::string::npos;
            r.detail = msg;
        }
        fs::remove(path);
        fs::remove(path + ".json");
        r.value = r.passed ? 0.0 : 1.0;
        return r;
    });
}

CheckResult check_determinism(const std::string& scratch_dir, std::size_t workers) {
    return timed("determinism", [&] {
        ExperimentConfig cfg;
        cfg.scenario.layout.rows = cfg.scenario.layout.cols = 4;
        cfg.speeds = {350.0};
        cfg.seeds = {1};
        cfg.beam.n_samples = 300;
        cfg.beam.train.max_epochs = 2;
        cfg.cell.n_samples = 150;
        cfg.cell.train.max_epochs = 2;
        cfg.cell.sim_passes = 1;
        cfg.beam.write_datasets = cfg.cell.write_datasets = false;
        std::vector<std::string> csv;
        for (int run = 0; run < 2; ++run) {
            cfg.output_dir = scratch_dir + "/determinism_" + std::to_string(run);
            fs::remove_all(cfg.output_dir);
            run_pipeline(cfg, {workers, nullptr});
            for (const char* name : {"fig3.csv", "table2.csv"}) {
                std::ifstream in(cfg.output_dir + "/" + name, std::ios::binary);
                csv.push_back(std::string(std::istreambuf_iterator<char>(in), {}));
            }
        }
        CheckResult r;
        // Header comment plus column header; anything less has no data rows.
        auto rows = [](const std::string& c) { return std::count(c.begin(), c.end(), '\n') - 2; };
        r.passed = rows(csv[0]) > 0 && rows(csv[1]) > 0 && csv[0] == csv[2] && csv[1] == csv[3];
        r.value = r.passed ? 0.0 : 1.0;
        r.detail = std::to_string(rows(csv[0])) + " fig3 rows, " + std::to_string(rows(csv[1])) + " table2 rows; fig3.csv " +
                   (csv[0] == csv[2] ? "identical" : "differs") + ", table2.csv " +
                   (csv[1] == csv[3] ? "identical" : "differs") + " (hash " + hex64(fnv1a64(csv[0] + csv[1])) + ")";
        return r;
    });
}

std::vector<CheckResult> run_verify_suite(const std::string& scratch_dir, std::size_t workers) {
    return {check_gradients(),         check_bridge(),
            check_kpi_formulas(),      check_hof_fixture(),
            check_rlf_timers(),        check_paired_traces(),
            check_checkpoint_corruption(scratch_dir), check_determinism(scratch_dir, workers)};
}

} // namespace railbeam
