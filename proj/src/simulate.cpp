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


#include "simulate.hpp"

#include <algorithm>
#include <memory>

namespace railbeam {

using nlohmann::json;
using nn::Tensor;

ForecastFn model_forecast(const Predictor& p, const MeasurementTrace& trace) {
    if (is_beam_level(p.id)) throw ValidationError("model_forecast needs a cell-level predictor");
    if (trace.n_cells != p.n_cells || trace.n_beams != p.n_beams)
        throw ValidationError("trace has " + std::to_string(trace.n_cells) + " cells x " +
                              std::to_string(trace.n_beams) + " beams, predictor expects " +
                              std::to_string(p.n_cells) + " x " + std::to_string(p.n_beams));
    const std::size_t K = trace.n_instances(), TI = p.t_in, TO = p.t_out, C = p.n_cells, B = p.n_beams;
    auto pred = std::make_shared<std::vector<double>>();
    const std::size_t first = TI - 1;
    if (K > first) {
        const std::size_t n = K - first;
        Tensor x({n, TI, C, B});
        for (std::size_t i = 0; i < n; ++i) {
            const auto w = cell_input_window(trace, p.variant, first + i, TI);
            for (std::size_t e = 0; e < w.size(); ++e) x[i * w.size() + e] = p.input_norm.scale(w[e]);
        }
        *pred = predict_cell_l3(p, x, p.variant).storage();
    }
    const bool full = p.variant == CellVariant::all_beam_cell;
    return [pred, &trace, first, TO, C, full](std::size_t k) {
        CellForecast f;
        const auto l3 = trace.l3_at(k);
        if (k < first) {
            f.current.assign(l3.begin(), l3.end());
            f.future.assign(TO, f.current);
            return f;
        }
        const double* row = pred->data() + (k - first) * TO * C;
        if (full || k == first) {
            f.current.assign(l3.begin(), l3.end());
        } else {
            const double* prev = pred->data() + (k - 1 - first) * TO * C;
            f.current.assign(prev, prev + C);
        }
        for (std::size_t h = 0; h < TO; ++h) f.future.emplace_back(row + h * C, row + (h + 1) * C);
        return f;
    };
}

SimulationConfig simulation_config_from_json(const json& j) {
    SimulationConfig c;
    try {
        c.speed_kmh = j.value("speed_kmh", c.speed_kmh);
        c.passes = j.value("passes", c.passes);
        c.seed = j.value("seed", c.seed);
        if (j.contains("trace")) c.trace = trace_config_from_json(j.at("trace"));
        if (j.contains("handover")) c.handover = handover_config_from_json(j.at("handover"));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("simulation config: ") + e.what());
    }
    if (c.passes == 0) throw ValidationError("simulation needs at least one pass");
    return c;
}

json to_json(const SimulationConfig& c) {
    return {{"speed_kmh", c.speed_kmh}, {"passes", c.passes}, {"seed", c.seed},
            {"trace", to_json(c.trace)}, {"handover", to_json(c.handover)}};
}

std::vector<MeasurementTrace> simulation_traces(const ScenarioConfig& scenario, const ChannelConfig& channel,
                                                const SimulationConfig& cfg, std::size_t workers) {
    ScenarioConfig sc = scenario;
    sc.ue_speed_kmh = cfg.speed_kmh;
    sc.n_slots = 0;
    const Scenario s = build_scenario(sc);
    std::vector<MeasurementTrace> out;
    for (std::size_t p = 0; p < cfg.passes; ++p) {
        const ChannelModel model(s, channel, derive_seed(cfg.seed, 500 + p));
        out.push_back(generate_trace(model, cfg.trace, derive_seed(cfg.seed, 600 + p), workers));
    }
    return out;
}

std::vector<SimulationRun> run_simulation(const std::vector<MeasurementTrace>& traces, const HandoverConfig& cfg,
                                          ForecastSource source, const Predictor* predictor,
                                          std::size_t oracle_horizon) {
    if (cfg.mode != HandoverMode::traditional && source == ForecastSource::none)
        throw ValidationError(to_string(cfg.mode) + " needs a forecast source");
    if (source == ForecastSource::model && !predictor) throw ValidationError("model forecasts need a predictor");
    std::vector<SimulationRun> out;
    for (const auto& tr : traces) {
        ForecastFn f;
        if (cfg.mode != HandoverMode::traditional)
            f = source == ForecastSource::oracle ? oracle_forecast(tr, oracle_horizon)
                                                 : model_forecast(*predictor, tr);
        SimulationRun r;
        r.log = simulate(tr, cfg, f);
        HandoverConfig c = cfg;
        c.tick_s = tr.slot_duration_s;
        r.kpi = kpis(r.log, c);
        out.push_back(std::move(r));
    }
    return out;
}

KpiReport pool_kpis(const std::vector<SimulationRun>& runs) {
    KpiReport r;
    r.degenerate = true;
    double interruption_sum = 0.0;
    std::size_t interruption_n = 0;
    for (const auto& run : runs) {
        const KpiReport& k = run.kpi;
        r.ho_commands += k.ho_commands;
        r.ho_success += k.ho_success;
        r.hof_events += k.hof_events;
        r.hof += k.hof;
        r.too_late += k.too_late;
        r.too_early += k.too_early;
        r.wrong_cell += k.wrong_cell;
        r.classified_success += k.classified_success;
        r.rlf += k.rlf;
        r.pingpong += k.pingpong;
        r.interruptions += k.interruptions;
        r.duration_s += k.duration_s;
        r.degenerate = r.degenerate && k.degenerate;
        r.max_interruption_ms = std::max(r.max_interruption_ms, k.max_interruption_ms);
        const std::size_t n = k.interruptions;
        interruption_sum += k.mean_interruption_ms * static_cast<double>(n);
        interruption_n += n;
    }
    auto ratio = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };
    r.hof_rate = ratio(r.hof, r.hof + r.classified_success);
    r.rlf_rate = ratio(r.rlf, r.rlf + r.ho_success);
    r.pingpong_rate = ratio(r.pingpong, r.ho_success);
    r.mean_interruption_ms = interruption_n ? interruption_sum / static_cast<double>(interruption_n) : 0.0;
    return r;
}

} // namespace railbeam
