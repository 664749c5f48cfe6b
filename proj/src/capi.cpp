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


#include "railbeam/railbeam.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "channel.hpp"
#include "checks.hpp"
#include "codebook.hpp"
#include "common.hpp"
#include "datasets.hpp"
#include "metrics.hpp"
#include "models.hpp"
#include "pipeline.hpp"
#include "scenario.hpp"
#include "simulate.hpp"
#include "train.hpp"
#include "workers.hpp"

using nlohmann::json;
using namespace railbeam;

struct rb_predictor {
    Predictor p;
};

struct rb_experiment {
    ExperimentConfig cfg;
};

namespace {

thread_local std::string g_error;
std::atomic<std::size_t> g_workers{0};

template <class F>
int guard(F body) {
    try {
        body();
        g_error.clear();
        return RB_OK;
    } catch (const Error& e) {
        g_error = e.what();
        return static_cast<int>(e.code());
    } catch (const json::exception& e) {
        g_error = std::string("invalid JSON: ") + e.what();
        return RB_ERR_VALIDATION;
    } catch (const std::bad_alloc&) {
        g_error = "out of memory";
        return RB_ERR_RUNTIME;
    } catch (const std::exception& e) {
        g_error = e.what();
        return RB_ERR_RUNTIME;
    }
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void put(char** out, const std::string& s) {
    if (out) *out = dup(s);
}

void need(const void* p, const char* what) {
    if (!p) throw ValidationError(std::string(what) + " must not be NULL");
}

json parse(const char* text, const char* what) {
    need(text, what);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string(what) + " is not valid JSON: " + e.what());
    }
}

std::size_t workers() { return g_workers.load(); }

ScenarioConfig scenario_of(const json& j, const char* key = "scenario") {
    return j.contains(key) ? scenario_config_from_json(j.at(key)) : ScenarioConfig{};
}

ChannelConfig channel_of(const json& j) {
    return j.contains("channel") ? channel_config_from_json(j.at("channel")) : ChannelConfig{};
}

std::string dataset_kind(const std::string& dir) {
    const std::string path = dir + "/meta.json";
    std::ifstream in(path);
    if (!in) throw ValidationError("no dataset at " + dir + " (missing meta.json)");
    try {
        return json::parse(in).at("kind").get<std::string>();
    } catch (const json::exception& e) {
        throw InvariantError("malformed " + path + ": " + e.what());
    }
}

json beam_eval(const Predictor& p, const BeamSplit& s, std::size_t n_beams) {
    const auto best = predict_best_beams(p, s);
    return {{"samples", s.n}, {"top1_accuracy", top1_accuracy(best, s.y_dbm.values(), n_beams)}};
}

json cell_eval(const Predictor& p, const CellSplit& s, CellVariant v) {
    const nn::Tensor pred = predict_cell_l3(p, s.x, v);
    const std::size_t n = s.y_dbm.dim(0), TO = s.y_dbm.dim(1), C = s.y_dbm.dim(2);
    json per_h = json::array();
    for (std::size_t h = 0; h < TO; ++h) {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < C; ++c) {
                a.push_back(pred[(i * TO + h) * C + c]);
                b.push_back(s.y_dbm[(i * TO + h) * C + c]);
            }
        per_h.push_back({{"horizon", h + 1}, {"rsrp_difference", rsrp_difference(a, b).to_json()}});
    }
    return {{"samples", n},
            {"nmse", nmse(pred.values(), s.y_dbm.values())},
            {"rsrp_difference", rsrp_difference(pred.values(), s.y_dbm.values()).to_json()},
            {"per_horizon", per_h}};
}

} // namespace

extern "C" {

const char* rb_version(void) { return kVersion; }
const char* rb_last_error(void) { return g_error.c_str(); }
void rb_free(char* s) { std::free(s); }
void rb_set_workers(size_t n) { g_workers = n; }

int rb_scenario_dump(const char* scenario_json, char** out_json) {
    return guard([&] {
        const Scenario s = build_scenario(scenario_config_from_json(parse(scenario_json, "scenario config")));
        json j = s.to_json();
        j["hash"] = s.hash();
        j["cell_count"] = s.cell_count();
        put(out_json, j.dump(2));
    });
}

int rb_codebook_show(size_t rows, size_t cols, size_t oversampling, double spacing_wl, const char* ratio,
                     const char* pattern, unsigned long long seed, char** out_json) {
    return guard([&] {
        const Codebook cb = dft_codebook(rows, cols, oversampling, spacing_wl);
        json beams = json::array();
        for (std::size_t b = 0; b < cb.size(); ++b) {
            const BeamLabel& l = cb.label(b);
            beams.push_back({{"beam", b}, {"azimuth_deg", l.azimuth_deg}, {"elevation_deg", l.elevation_deg},
                             {"visible", l.visible}});
        }
        json j{{"rows", rows}, {"cols", cols}, {"oversampling", oversampling}, {"spacing_wl", spacing_wl},
               {"set_a_size", cb.size()}, {"beams", beams}};
        if (ratio) {
            const SetB sb = select_set_b(cb.size(), selection_pattern_from_string(pattern ? pattern : "equidistant"),
                                         Ratio::parse(ratio), seed);
            j["set_b"] = {{"ratio", Ratio::parse(ratio).str()},
                          {"kind", to_string(sb.kind)},
                          {"measurement_count", sb.measurement_count},
                          {"indices", sb.indices}};
        }
        put(out_json, j.dump(2));
    });
}

int rb_channel_export(const char* config_json, const char* csv_path, char** summary_json) {
    return guard([&] {
        need(csv_path, "csv path");
        const json j = parse(config_json, "channel export config");
        const Scenario s = build_scenario(scenario_of(j));
        const ChannelModel model(s, channel_of(j), j.value("seed", std::uint64_t{1}));
        const std::size_t first = j.value("first_slot", std::size_t{0});
        const std::size_t count = j.value("n_slots", std::min<std::size_t>(s.n_slots(), 100));
        if (first >= s.n_slots()) throw ValidationError("first_slot beyond the track");
        const std::size_t last = std::min(s.n_slots(), first + count);
        std::vector<std::size_t> cells;
        if (j.contains("cells")) cells = j.at("cells").get<std::vector<std::size_t>>();
        else
            for (std::size_t c = 0; c < s.cell_count(); ++c) cells.push_back(c);
        for (std::size_t c : cells)
            if (c >= s.cell_count()) throw ValidationError("cell index " + std::to_string(c) + " out of range");
        std::vector<std::vector<std::vector<double>>> rows(last - first);
        parallel_for(
            last - first,
            [&](std::size_t i) {
                for (std::size_t c : cells) rows[i].push_back(model.l1_rsrp(c, first + i));
            },
            workers());
        std::ofstream out(csv_path, std::ios::trunc);
        if (!out) throw RuntimeError("cannot write " + std::string(csv_path));
        out << "# railbeam " << kVersion << " scenario_hash=" << s.hash() << " seed=" << model.run_seed() << "\n";
        out << "slot,cell,beam,rsrp_dbm\n";
        char buf[48];
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t k = 0; k < cells.size(); ++k)
                for (std::size_t b = 0; b < rows[i][k].size(); ++b) {
                    std::snprintf(buf, sizeof buf, "%.6f", rows[i][k][b]);
                    out << first + i << ',' << cells[k] << ',' << b << ',' << buf << '\n';
                }
        if (!out) throw RuntimeError("failed writing " + std::string(csv_path));
        put(summary_json, json{{"slots", last - first}, {"cells", cells.size()}, {"scenario_hash", s.hash()},
                               {"path", csv_path}}
                              .dump(2));
    });
}

int rb_dataset_generate(const char* config_json, const char* out_dir, char** meta_json) {
    return guard([&] {
        need(out_dir, "output directory");
        const json j = parse(config_json, "dataset config");
        const std::string kind = j.value("kind", "beam");
        const json dcfg = j.value("dataset", json::object());
        if (kind == "beam") {
            const BeamDataset ds =
                generate_beam_dataset(scenario_of(j), channel_of(j), beam_dataset_config_from_json(dcfg), workers());
            write_beam_dataset(ds, out_dir);
            put(meta_json, ds.meta().dump(2));
        } else if (kind == "cell") {
            const CellDataset ds =
                generate_cell_dataset(scenario_of(j), channel_of(j), cell_dataset_config_from_json(dcfg), workers());
            write_cell_dataset(ds, out_dir);
            put(meta_json, ds.meta().dump(2));
        } else {
            throw ValidationError("dataset kind must be beam or cell, got '" + kind + "'");
        }
    });
}

int rb_predictor_train(const char* dataset_dir, const char* predictor_id, const char* train_json, int full_scale,
                       unsigned long long seed, rb_predictor** out, char** result_json) {
    return guard([&] {
        need(dataset_dir, "dataset directory");
        need(predictor_id, "predictor id");
        need(out, "output handle");
        const PredictorId id = predictor_id_from_string(predictor_id);
        TrainConfig tc = train_json ? train_config_from_json(parse(train_json, "train config")) : TrainConfig{};
        tc.seed = seed;
        tc.workers = workers();
        const ArchConfig arch{full_scale != 0};
        auto handle = std::make_unique<rb_predictor>();
        json result{{"predictor", to_string(id)}, {"runs", json::array()}};
        const std::string kind = dataset_kind(dataset_dir);
        if (kind == "beam") {
            if (!is_beam_level(id)) throw ValidationError(to_string(id) + " needs a cell dataset");
            const BeamDataset ds = read_beam_dataset(dataset_dir);
            handle->p = make_beam_predictor(id, ds, arch, derive_seed(seed, 2000));
            for (const auto& r : train_predictor(handle->p, ds, tc)) result["runs"].push_back(r.to_json());
            result["val"] = beam_eval(handle->p, ds.val, ds.n_beams);
        } else {
            if (is_beam_level(id)) throw ValidationError(to_string(id) + " needs a beam dataset");
            const CellDataset ds = read_cell_dataset(dataset_dir);
            handle->p = make_cell_predictor(id, ds, arch, derive_seed(seed, 3000));
            for (const auto& r : train_predictor(handle->p, ds, tc)) result["runs"].push_back(r.to_json());
            result["val"] = cell_eval(handle->p, ds.val, ds.config.variant);
        }
        put(result_json, result.dump(2));
        *out = handle.release();
    });
}

int rb_predictor_load(const char* path, rb_predictor** out) {
    return guard([&] {
        need(path, "checkpoint path");
        need(out, "output handle");
        auto handle = std::make_unique<rb_predictor>();
        handle->p = load_predictor(path);
        *out = handle.release();
    });
}

int rb_predictor_save(const rb_predictor* p, const char* path) {
    return guard([&] {
        need(p, "predictor");
        need(path, "checkpoint path");
        if (!is_trainable(p->p.id)) throw ValidationError(to_string(p->p.id) + " has no parameters to save");
        save_predictor(path, p->p);
    });
}

int rb_predictor_meta(const rb_predictor* p, char** out_json) {
    return guard([&] {
        need(p, "predictor");
        put(out_json, p->p.meta().dump(2));
    });
}

void rb_predictor_destroy(rb_predictor* p) { delete p; }

int rb_predictor_eval(const rb_predictor* p, const char* dataset_dir, const char* split, char** out_json) {
    return guard([&] {
        need(p, "predictor");
        need(dataset_dir, "dataset directory");
        const std::string which = split ? split : "test";
        json j{{"predictor", to_string(p->p.id)}, {"split", which}};
        if (dataset_kind(dataset_dir) == "beam") {
            if (!is_beam_level(p->p.id)) throw ValidationError("beam dataset given to a cell predictor");
            const BeamDataset ds = read_beam_dataset(dataset_dir);
            j.update(beam_eval(p->p, ds.split(which), ds.n_beams));
        } else {
            if (is_beam_level(p->p.id)) throw ValidationError("cell dataset given to a beam predictor");
            const CellDataset ds = read_cell_dataset(dataset_dir);
            j.update(cell_eval(p->p, ds.split(which), ds.config.variant));
        }
        put(out_json, j.dump(2));
    });
}

int rb_simulate(const char* config_json, const rb_predictor* p, const char* events_csv_path, char** report_json) {
    return guard([&] {
        const json j = parse(config_json, "simulation config");
        const SimulationConfig sim =
            j.contains("simulation") ? simulation_config_from_json(j.at("simulation")) : SimulationConfig{};
        const std::string fc = j.value("forecast", sim.handover.mode == HandoverMode::traditional ? "none" : "oracle");
        ForecastSource source = ForecastSource::none;
        if (fc == "oracle") source = ForecastSource::oracle;
        else if (fc == "model") source = ForecastSource::model;
        else if (fc != "none") throw ValidationError("forecast must be none, oracle or model, got '" + fc + "'");
        if (source == ForecastSource::model && !p) throw ValidationError("a model forecast needs a predictor");
        if (source != ForecastSource::none && sim.handover.mode == HandoverMode::traditional)
            throw ValidationError("a forecast is only used by the ai modes");
        if (source == ForecastSource::none && sim.handover.mode != HandoverMode::traditional)
            throw ValidationError(to_string(sim.handover.mode) + " needs a forecast (oracle or model)");
        const ScenarioConfig sc = j.contains("cell_scenario") ? scenario_of(j, "cell_scenario") : scenario_of(j);
        const auto traces = simulation_traces(sc, channel_of(j), sim, workers());
        const auto runs = run_simulation(traces, sim.handover, source, p ? &p->p : nullptr,
                                         p ? p->p.t_out : std::size_t{4});
        json passes = json::array();
        for (const auto& r : runs) passes.push_back(r.kpi.to_json());
        if (events_csv_path) {
            std::ofstream out(events_csv_path, std::ios::trunc);
            if (!out) throw RuntimeError("cannot write " + std::string(events_csv_path));
            out << "# railbeam " << kVersion << " seed=" << sim.seed << " mode=" << to_string(sim.handover.mode)
                << "\n";
            for (std::size_t k = 0; k < runs.size(); ++k) {
                std::istringstream rows(runs[k].log.to_csv());
                std::string line;
                bool header = true;
                while (std::getline(rows, line)) {
                    if (header) {
                        if (k == 0) out << "pass," << line << '\n';
                        header = false;
                        continue;
                    }
                    out << k << ',' << line << '\n';
                }
            }
        }
        put(report_json, json{{"version", kVersion},
                              {"config", to_json(sim)},
                              {"forecast", fc},
                              {"pooled", pool_kpis(runs).to_json()},
                              {"passes", passes}}
                             .dump(2));
    });
}

int rb_experiment_load(const char* path, rb_experiment** out) {
    return guard([&] {
        need(path, "config path");
        need(out, "output handle");
        auto e = std::make_unique<rb_experiment>();
        e->cfg = load_experiment_config(path);
        *out = e.release();
    });
}

int rb_experiment_from_json(const char* text, rb_experiment** out) {
    return guard([&] {
        need(out, "output handle");
        auto e = std::make_unique<rb_experiment>();
        e->cfg = experiment_config_from_json(parse(text, "experiment config"));
        *out = e.release();
    });
}

int rb_experiment_set_output_dir(rb_experiment* e, const char* dir) {
    return guard([&] {
        need(e, "experiment");
        need(dir, "output directory");
        e->cfg.output_dir = dir;
        e->cfg.validate();
    });
}

int rb_experiment_config(const rb_experiment* e, char** out_json) {
    return guard([&] {
        need(e, "experiment");
        json j = e->cfg.to_json();
        j["config_hash"] = e->cfg.hash();
        put(out_json, j.dump(2));
    });
}

int rb_experiment_run(rb_experiment* e, int verbose, char** summary_json) {
    return guard([&] {
        need(e, "experiment");
        const json s = run_pipeline(e->cfg, {workers(), verbose ? &std::cerr : nullptr});
        put(summary_json, s.dump(2));
    });
}

void rb_experiment_destroy(rb_experiment* e) { delete e; }

int rb_report(const char* dir, const char* style, const char* format, char** out) {
    return guard([&] {
        need(dir, "artifact directory");
        const ReportStyle st = report_style_from_string(style ? style : "fig3");
        const std::string fmt = format ? format : "csv";
        if (fmt == "csv") put(out, build_report_csv(dir, st));
        else if (fmt == "json") put(out, build_report_json(dir, st).dump(2));
        else throw ValidationError("report format must be csv or json, got '" + fmt + "'");
    });
}

int rb_verify(const char* scratch_dir, char** report_json) {
    int status = RB_OK;
    const int rc = guard([&] {
        const std::string dir = scratch_dir ? scratch_dir
                                            : (std::filesystem::temp_directory_path() / "railbeam_verify").string();
        json checks = json::array();
        bool all = true;
        for (const auto& c : run_verify_suite(dir, workers())) {
            checks.push_back(c.to_json());
            all = all && c.passed;
        }
        if (!all) status = RB_ERR_INVARIANT;
        put(report_json, json{{"version", kVersion}, {"passed", all}, {"checks", checks}}.dump(2));
    });
    if (rc == RB_OK && status != RB_OK) g_error = "one or more checks failed";
    return rc != RB_OK ? rc : status;
}

} // extern "C"
