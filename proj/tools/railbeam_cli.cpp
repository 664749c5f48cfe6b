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


// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "railbeam/railbeam.h"

using nlohmann::json;

namespace {

struct Failure {
    int code;
    std::string message;
};

/// Owns a string returned by the library.
struct Text {
    char* p = nullptr;
    ~Text() { rb_free(p); }
    std::string str() const { return p ? p : ""; }
};

void check(int rc) {
    if (rc != RB_OK) throw Failure{rc, rb_last_error()};
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Failure{RB_ERR_VALIDATION, "cannot open " + path};
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Failure{RB_ERR_VALIDATION, path + " is not valid JSON: " + e.what()};
    }
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw Failure{RB_ERR_RUNTIME, "cannot write " + out_path};
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    if (!out) throw Failure{RB_ERR_RUNTIME, "failed writing " + out_path};
}

/// Scenario and channel sections shared by several commands.
json base_config(const std::string& config_path) {
    json j = config_path.empty() ? json::object() : read_json(config_path);
    json out = json::object();
    for (const char* key : {"scenario", "channel", "cell_scenario"})
        if (j.contains(key)) out[key] = j[key];
    if (j.contains("cell") && j["cell"].contains("scenario") && !out.contains("cell_scenario"))
        out["cell_scenario"] = j["cell"]["scenario"];
    return out;
}

struct Predictor {
    rb_predictor* p = nullptr;
    ~Predictor() { rb_predictor_destroy(p); }
};

struct Experiment {
    rb_experiment* e = nullptr;
    ~Experiment() { rb_experiment_destroy(e); }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"railbeam: beam and cell-level mobility experiments for high-speed rail"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rb_version()));

    if (const char* w = std::getenv("RAILBEAM_WORKERS")) {
        char* end = nullptr;
        const unsigned long n = std::strtoul(w, &end, 10);
        if (!*w || *end || n == 0) {
            std::cerr << "error: RAILBEAM_WORKERS must be a positive integer, got '" << w << "'\n";
            return RB_ERR_VALIDATION;
        }
        rb_set_workers(n);
    }

    std::string config_path, out_path;

    // scenario dump
    auto* scenario = app.add_subcommand("scenario", "Scenario geometry");
    scenario->require_subcommand(1);
    auto* dump = scenario->add_subcommand("dump", "Print the built scenario as JSON");
    double dump_speed = -1.0;
    dump->add_option("--config", config_path, "JSON file with a scenario section");
    dump->add_option("--speed", dump_speed, "UE speed in km/h");
    dump->add_option("--out", out_path, "Write to a file instead of stdout");

    // codebook show
    auto* codebook = app.add_subcommand("codebook", "Beam codebooks");
    codebook->require_subcommand(1);
    auto* show = codebook->add_subcommand("show", "List Set A beams and the selected Set B");
    std::size_t cb_rows = 8, cb_cols = 8, cb_os = 1;
    double cb_spacing = 0.5;
    std::string cb_ratio = "1/16", cb_pattern = "equidistant";
    unsigned long long cb_seed = 1;
    show->add_option("--rows", cb_rows, "Horizontal elements")->capture_default_str();
    show->add_option("--cols", cb_cols, "Vertical elements")->capture_default_str();
    show->add_option("--oversampling", cb_os, "DFT oversampling factor")->capture_default_str();
    show->add_option("--spacing", cb_spacing, "Element spacing in wavelengths")->capture_default_str();
    show->add_option("--ratio", cb_ratio, "Measurement ratio of Set B")->capture_default_str();
    show->add_option("--scheme", cb_pattern, "Set B pattern: equidistant or random")->capture_default_str();
    show->add_option("--seed", cb_seed, "Seed of the random pattern")->capture_default_str();
    show->add_option("--out", out_path, "Write to a file instead of stdout");

    // channel export
    auto* channel = app.add_subcommand("channel", "Channel realisations");
    channel->require_subcommand(1);
    auto* cexport = channel->add_subcommand("export", "Write per-slot L1-RSRP as CSV");
    double ch_speed = -1.0;
    unsigned long long ch_seed = 1;
    std::size_t ch_first = 0, ch_slots = 100;
    cexport->add_option("--config", config_path, "JSON file with scenario/channel sections");
    cexport->add_option("--speed", ch_speed, "UE speed in km/h");
    cexport->add_option("--seed", ch_seed, "Channel run seed")->capture_default_str();
    cexport->add_option("--first-slot", ch_first, "First slot")->capture_default_str();
    cexport->add_option("--slots", ch_slots, "Number of slots")->capture_default_str();
    cexport->add_option("--out", out_path, "CSV path")->required();

    // dataset gen
    auto* dataset = app.add_subcommand("dataset", "Training datasets");
    dataset->require_subcommand(1);
    auto* gen = dataset->add_subcommand("gen", "Generate a beam- or cell-level dataset directory");
    std::string ds_kind = "beam", ds_ratio, ds_scheme, ds_variant;
    double ds_speed = 350.0;
    unsigned long long ds_seed = 1;
    std::size_t ds_samples = 0;
    bool full_scale = false;
    gen->add_option("--kind", ds_kind, "beam or cell")->capture_default_str();
    gen->add_option("--config", config_path, "JSON file with scenario/channel sections");
    gen->add_option("--speed", ds_speed, "UE speed in km/h")->capture_default_str();
    gen->add_option("--ratio", ds_ratio, "Beam level: measurement ratio, e.g. 1/16");
    gen->add_option("--scheme", ds_scheme, "Beam level: equidistant or random Set B");
    gen->add_option("--variant", ds_variant, "Cell level: All_Beam_Cell, Part_Cell or Part_Beam");
    gen->add_option("--samples", ds_samples, "Number of windows");
    gen->add_option("--seed", ds_seed, "Seed")->capture_default_str();
    gen->add_flag("--full-scale", full_scale, "Full-size sample count (50000 beam windows)");
    gen->add_option("--out", out_path, "Dataset directory")->required();

    // train
    auto* train = app.add_subcommand("train", "Train a predictor on a dataset directory");
    std::string tr_dataset, tr_predictor, tr_config;
    unsigned long long tr_seed = 1;
    std::size_t tr_epochs = 0, tr_batch = 0;
    train->add_option("--dataset", tr_dataset, "Dataset directory")->required();
    train->add_option("--predictor", tr_predictor,
                      "nonai, lstm_downsampled, cnn_fc_downsampled, convlstm_downsampled, csai, cell_lstm, cell_cnn")
        ->required();
    train->add_option("--train-config", tr_config, "JSON file with training hyperparameters");
    train->add_option("--epochs", tr_epochs, "Maximum epochs");
    train->add_option("--batch", tr_batch, "Batch size");
    train->add_option("--seed", tr_seed, "Seed")->capture_default_str();
    train->add_flag("--full-scale", full_scale, "Full-size layer widths");
    train->add_option("--out", out_path, "Checkpoint path")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    std::string ev_ckpt, ev_dataset, ev_split = "test";
    eval->add_option("--checkpoint", ev_ckpt, "Checkpoint path")->required();
    eval->add_option("--dataset", ev_dataset, "Dataset directory")->required();
    eval->add_option("--split", ev_split, "train, val or test")->capture_default_str();
    eval->add_option("--out", out_path, "Write to a file instead of stdout");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Handover simulation along the track");
    std::string sim_mode = "traditional", sim_predictor, sim_forecast, sim_events;
    double sim_speed = 60.0;
    unsigned long long sim_seed = 1;
    std::size_t sim_passes = 2;
    simulate->add_option("--config", config_path, "JSON file with scenario/channel/handover sections");
    simulate->add_option("--mode", sim_mode, "traditional, ai_option1 or ai_option2")->capture_default_str();
    simulate->add_option("--predictor", sim_predictor, "Cell predictor checkpoint driving the ai modes");
    simulate->add_option("--forecast", sim_forecast, "none, oracle or model (default from mode/predictor)");
    simulate->add_option("--speed", sim_speed, "UE speed in km/h")->capture_default_str();
    simulate->add_option("--seed", sim_seed, "Seed")->capture_default_str();
    simulate->add_option("--passes", sim_passes, "Independent passes over the track")->capture_default_str();
    simulate->add_option("--events", sim_events, "Event log CSV path");
    simulate->add_option("--out", out_path, "KPI report JSON path");

    // report
    auto* report = app.add_subcommand("report", "Aggregate tables of an artifact directory");
    std::string rp_dir, rp_style = "fig3", rp_format = "csv";
    report->add_option("--dir", rp_dir, "Artifact directory of a run")->required();
    report->add_option("--style", rp_style, "fig3 or table2")->capture_default_str();
    report->add_option("--format", rp_format, "csv or json")->capture_default_str();
    report->add_option("--out", out_path, "Write to a file instead of stdout");

    // run
    auto* run = app.add_subcommand("run", "Run the full experiment pipeline from a config file");
    std::string run_dir;
    bool quiet = false;
    run->add_option("--config", config_path, "Experiment config JSON")->required();
    run->add_option("--output-dir", run_dir, "Override the config's output_dir");
    run->add_flag("--full-scale", full_scale, "Full-size layer widths");
    run->add_flag("--quiet", quiet, "No progress lines");

    // verify
    auto* verify = app.add_subcommand("verify", "Run the invariant suite");
    std::string vf_scratch;
    verify->add_option("--scratch", vf_scratch, "Scratch directory");
    verify->add_option("--out", out_path, "Write the JSON report to a file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : RB_ERR_VALIDATION;
    }

    try {
        if (*dump) {
            json sc = base_config(config_path).value("scenario", json::object());
            if (dump_speed >= 0.0) sc["ue_speed_kmh"] = dump_speed;
            Text t;
            check(rb_scenario_dump(sc.dump().c_str(), &t.p));
            emit(t.str(), out_path);
        } else if (*show) {
            Text t;
            check(rb_codebook_show(cb_rows, cb_cols, cb_os, cb_spacing, cb_ratio.c_str(), cb_pattern.c_str(), cb_seed,
                                   &t.p));
            emit(t.str(), out_path);
        } else if (*cexport) {
            json cfg = base_config(config_path);
            if (ch_speed >= 0.0) cfg["scenario"]["ue_speed_kmh"] = ch_speed;
            cfg["seed"] = ch_seed;
            cfg["first_slot"] = ch_first;
            cfg["n_slots"] = ch_slots;
            Text t;
            check(rb_channel_export(cfg.dump().c_str(), out_path.c_str(), &t.p));
            std::cout << t.str() << '\n';
        } else if (*gen) {
            json cfg = base_config(config_path);
            if (ds_kind == "cell" && cfg.contains("cell_scenario")) cfg["scenario"] = cfg["cell_scenario"];
            cfg.erase("cell_scenario");
            cfg["kind"] = ds_kind;
            json d{{"speed_kmh", ds_speed}, {"seed", ds_seed}};
            if (ds_samples) d["n_samples"] = ds_samples;
            else if (full_scale && ds_kind == "beam") d["n_samples"] = 50000;
            if (ds_kind == "beam") {
                if (!ds_variant.empty()) throw Failure{RB_ERR_VALIDATION, "--variant applies to cell datasets"};
                if (!ds_ratio.empty()) d["ratio"] = ds_ratio;
                if (!ds_scheme.empty()) d["pattern"] = ds_scheme;
            } else {
                if (!ds_ratio.empty() || !ds_scheme.empty())
                    throw Failure{RB_ERR_VALIDATION, "--ratio/--scheme apply to beam datasets"};
                if (!ds_variant.empty()) d["variant"] = ds_variant;
            }
            cfg["dataset"] = d;
            Text t;
            check(rb_dataset_generate(cfg.dump().c_str(), out_path.c_str(), &t.p));
            std::cout << t.str() << '\n';
        } else if (*train) {
            json tc = tr_config.empty() ? json::object() : read_json(tr_config);
            if (tr_epochs) tc["max_epochs"] = tr_epochs;
            if (tr_batch) tc["batch_size"] = tr_batch;
            Predictor p;
            Text t;
            check(rb_predictor_train(tr_dataset.c_str(), tr_predictor.c_str(), tc.dump().c_str(), full_scale ? 1 : 0,
                                     tr_seed, &p.p, &t.p));
            if (tr_predictor != "nonai" && tr_predictor != "nonai_best_measured")
                check(rb_predictor_save(p.p, out_path.c_str()));
            std::cout << t.str() << '\n';
        } else if (*eval) {
            Predictor p;
            check(rb_predictor_load(ev_ckpt.c_str(), &p.p));
            Text t;
            check(rb_predictor_eval(p.p, ev_dataset.c_str(), ev_split.c_str(), &t.p));
            emit(t.str(), out_path);
        } else if (*simulate) {
            json raw = config_path.empty() ? json::object() : read_json(config_path);
            json cfg = base_config(config_path);
            json sim{{"speed_kmh", sim_speed}, {"seed", sim_seed}, {"passes", sim_passes}};
            json ho = raw.value("handover", json::object());
            ho["mode"] = sim_mode;
            sim["handover"] = ho;
            if (raw.contains("cell") && raw["cell"].contains("trace")) sim["trace"] = raw["cell"]["trace"];
            if (raw.contains("trace")) sim["trace"] = raw["trace"];
            cfg["simulation"] = sim;
            Predictor p;
            if (!sim_predictor.empty()) check(rb_predictor_load(sim_predictor.c_str(), &p.p));
            cfg["forecast"] = !sim_forecast.empty()            ? sim_forecast
                              : sim_mode == "traditional"      ? "none"
                              : p.p                            ? "model"
                                                               : "oracle";
            Text t;
            check(rb_simulate(cfg.dump().c_str(), p.p, sim_events.empty() ? nullptr : sim_events.c_str(), &t.p));
            emit(t.str(), out_path);
        } else if (*report) {
            Text t;
            check(rb_report(rp_dir.c_str(), rp_style.c_str(), rp_format.c_str(), &t.p));
            emit(t.str(), out_path);
        } else if (*run) {
            json cfg = read_json(config_path);
            if (full_scale) cfg["full_scale"] = true;
            if (!run_dir.empty()) cfg["output_dir"] = run_dir;
            Experiment e;
            check(rb_experiment_from_json(cfg.dump().c_str(), &e.e));
            Text t;
            check(rb_experiment_run(e.e, quiet ? 0 : 1, &t.p));
            std::cout << t.str() << '\n';
        } else if (*verify) {
            Text t;
            const int rc = rb_verify(vf_scratch.empty() ? nullptr : vf_scratch.c_str(), &t.p);
            if (t.p) {
                const json rep = json::parse(t.str());
                for (const auto& c : rep.at("checks"))
                    std::printf("%s %-22s %s\n", c.at("passed").get<bool>() ? "PASS" : "FAIL",
                                c.at("name").get<std::string>().c_str(), c.at("detail").get<std::string>().c_str());
                if (!out_path.empty()) emit(t.str(), out_path);
            }
            check(rc);
        }
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << '\n';
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return RB_ERR_RUNTIME;
    }
    return 0;
}
