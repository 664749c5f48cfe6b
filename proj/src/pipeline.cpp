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


#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "metrics.hpp"
#include "simulate.hpp"

namespace railbeam {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <class T, class F>
std::vector<T> parse_list(const json& j, const char* key, F conv, std::vector<T> def) {
    if (!j.contains(key)) return def;
    std::vector<T> out;
    for (const auto& e : j.at(key)) out.push_back(conv(e));
    return out;
}

BeamStageConfig beam_stage_from_json(const json& j) {
    BeamStageConfig c;
    c.enabled = j.value("enabled", c.enabled);
    if (j.contains("ratio")) c.ratio = Ratio::parse(j.at("ratio").get<std::string>());
    if (j.contains("pattern")) c.pattern = selection_pattern_from_string(j.at("pattern").get<std::string>());
    c.t_in = j.value("t_in", c.t_in);
    c.horizon = j.value("horizon", c.horizon);
    c.n_samples = j.value("n_samples", c.n_samples);
    c.meas_period_slots = j.value("meas_period_slots", c.meas_period_slots);
    if (j.contains("noise")) c.noise = noise_config_from_json(j.at("noise"));
    c.predictors = parse_list<PredictorId>(
        j, "predictors", [](const json& e) { return predictor_id_from_string(e.get<std::string>()); }, c.predictors);
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    c.csai_warm_start = j.value("csai_warm_start", c.csai_warm_start);
    c.write_datasets = j.value("write_datasets", c.write_datasets);
    return c;
}

json stage_json(const BeamStageConfig& c) {
    json preds = json::array();
    for (auto p : c.predictors) preds.push_back(to_string(p));
    return {{"enabled", c.enabled},
            {"ratio", c.ratio.str()},
            {"pattern", c.pattern == SelectionPattern::equidistant ? "equidistant" : "random"},
            {"t_in", c.t_in},
            {"horizon", c.horizon},
            {"n_samples", c.n_samples},
            {"meas_period_slots", c.meas_period_slots},
            {"noise", to_json(c.noise)},
            {"predictors", preds},
            {"train", to_json(c.train)},
            {"csai_warm_start", c.csai_warm_start},
            {"write_datasets", c.write_datasets}};
}

CellStageConfig cell_stage_from_json(const json& j) {
    CellStageConfig c;
    c.enabled = j.value("enabled", c.enabled);
    if (j.contains("scenario")) c.scenario = scenario_config_from_json(j.at("scenario"));
    c.variants = parse_list<CellVariant>(
        j, "variants", [](const json& e) { return cell_variant_from_string(e.get<std::string>()); }, c.variants);
    c.predictors = parse_list<PredictorId>(
        j, "predictors", [](const json& e) { return predictor_id_from_string(e.get<std::string>()); }, c.predictors);
    c.t_in = j.value("t_in", c.t_in);
    c.t_out = j.value("t_out", c.t_out);
    c.n_samples = j.value("n_samples", c.n_samples);
    if (j.contains("trace")) c.trace = trace_config_from_json(j.at("trace"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    c.sim_passes = j.value("sim_passes", c.sim_passes);
    c.write_datasets = j.value("write_datasets", c.write_datasets);
    return c;
}

json stage_json(const CellStageConfig& c) {
    json preds = json::array(), vars = json::array();
    for (auto p : c.predictors) preds.push_back(to_string(p));
    for (auto v : c.variants) vars.push_back(to_string(v));
    json j{{"enabled", c.enabled},         {"variants", vars},      {"predictors", preds},
           {"t_in", c.t_in},               {"t_out", c.t_out},      {"n_samples", c.n_samples},
           {"trace", to_json(c.trace)},    {"train", to_json(c.train)}, {"sim_passes", c.sim_passes},
           {"write_datasets", c.write_datasets}};
    if (c.scenario) j["scenario"] = to_json(*c.scenario);
    return j;
}

void write_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw RuntimeError("cannot write " + path);
        out << text;
        if (!out) throw RuntimeError("failed writing " + path);
    }
    fs::rename(tmp, path);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("missing file " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvariantError("malformed JSON in " + path + ": " + e.what());
    }
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

json train_summary(const std::vector<TrainResult>& rs) {
    json a = json::array();
    for (const auto& r : rs)
        a.push_back({{"best_epoch", r.best_epoch},
                     {"epochs", r.history.size()},
                     {"best_val_loss", r.best_val_loss},
                     {"stop_reason", r.stop_reason}});
    return a;
}

/// Reuses a finished run when its marker carries the same config hash.
std::optional<json> finished(const std::string& dir, const std::string& hash) {
    const std::string marker = dir + "/done.json";
    if (!fs::exists(marker)) return std::nullopt;
    json j = read_json_file(marker);
    if (j.value("config_hash", "") != hash) return std::nullopt;
    return j;
}

json run_beam_unit(const ExperimentConfig& cfg, double speed, std::uint64_t seed, const std::string& dir,
                   std::size_t workers, std::ostream* log) {
    const BeamStageConfig& bs = cfg.beam;
    BeamDatasetConfig dc;
    dc.speed_kmh = speed;
    dc.ratio = bs.ratio;
    dc.pattern = bs.pattern;
    dc.t_in = bs.t_in;
    dc.horizon = bs.horizon;
    dc.n_samples = bs.n_samples;
    dc.meas_period_slots = bs.meas_period_slots;
    dc.noise = bs.noise;
    dc.seed = seed;
    const BeamDataset ds = generate_beam_dataset(cfg.scenario, cfg.channel, dc, workers);
    if (bs.write_datasets) write_beam_dataset(ds, dir + "/dataset");
    const ArchConfig arch{cfg.full_scale};

    std::vector<PredictorId> order = bs.predictors;
    if (bs.csai_warm_start)
        std::stable_sort(order.begin(), order.end(), [](PredictorId a, PredictorId b) {
            return a == PredictorId::convlstm_downsampled && b == PredictorId::csai;
        });
    std::optional<Predictor> convlstm;
    std::map<PredictorId, json> results;
    json timing;
    auto train_cfg = [&](PredictorId id) {
        TrainConfig tc = bs.train;
        tc.seed = derive_seed(seed, 1000 + static_cast<std::uint64_t>(id));
        tc.workers = workers;
        return tc;
    };
    for (PredictorId id : order) {
        Stopwatch sw;
        Predictor p;
        std::vector<TrainResult> tr;
        if (id == PredictorId::csai && bs.csai_warm_start) {
            if (!convlstm) {
                convlstm = make_beam_predictor(PredictorId::convlstm_downsampled, ds, arch, derive_seed(seed, 2003));
                train_predictor(*convlstm, ds, train_cfg(PredictorId::convlstm_downsampled));
            }
            p = csai_from_convlstm(*convlstm, ds);
        } else {
            p = make_beam_predictor(id, ds, arch, derive_seed(seed, 2000 + static_cast<std::uint64_t>(id)));
        }
        tr = train_predictor(p, ds, train_cfg(id));
        if (id == PredictorId::convlstm_downsampled) convlstm = p;
        const double acc = top1_accuracy(predict_best_beams(p, ds.test), ds.test.y_dbm.values(), ds.n_beams);
        save_predictor(dir + "/" + to_string(id) + ".rbck", p);
        results[id] = {{"predictor", to_string(id)}, {"top1_accuracy", acc}, {"train", train_summary(tr)}};
        timing[to_string(id)] = sw.seconds();
        if (log)
            *log << "[beam] " << speed_tag(speed) << " seed " << seed << " " << to_string(id) << " top1 "
                 << fixed6(acc) << " (" << std::setprecision(3) << sw.seconds() << " s)\n"
                 << std::flush;
    }
    json preds = json::array();
    for (PredictorId id : bs.predictors) preds.push_back(results.at(id));
    write_atomic(dir + "/timing.json", timing.dump(2));
    return {{"speed_kmh", speed}, {"seed", seed}, {"passes", ds.passes}, {"predictors", preds}};
}

json run_cell_unit(const ExperimentConfig& cfg, double speed, std::uint64_t seed, const std::string& dir,
                   std::size_t workers, std::ostream* log) {
    const CellStageConfig& cs = cfg.cell;
    SimulationConfig sim;
    sim.speed_kmh = speed;
    sim.passes = cs.sim_passes;
    sim.seed = seed;
    sim.trace = cs.trace;
    sim.handover = cfg.handover;
    const auto traces = simulation_traces(cfg.cell_scenario(), cfg.channel, sim, workers);

    HandoverConfig trad = cfg.handover, ai = cfg.handover;
    trad.mode = HandoverMode::traditional;
    ai.mode = HandoverMode::ai_option1;
    const auto base_runs = run_simulation(traces, trad, ForecastSource::none);
    const auto oracle_runs = run_simulation(traces, ai, ForecastSource::oracle, nullptr, cs.t_out);
    auto per_pass = [](const std::vector<SimulationRun>& runs) {
        json a = json::array();
        for (const auto& r : runs) a.push_back(r.kpi.to_json());
        return a;
    };
    fs::create_directories(dir + "/events");
    for (std::size_t p = 0; p < base_runs.size(); ++p)
        write_atomic(dir + "/events/traditional_pass" + std::to_string(p) + ".csv", base_runs[p].log.to_csv());

    const ArchConfig arch{cfg.full_scale};
    json models = json::array();
    json timing;
    for (CellVariant v : cs.variants) {
        CellDatasetConfig dc;
        dc.speed_kmh = speed;
        dc.variant = v;
        dc.t_in = cs.t_in;
        dc.t_out = cs.t_out;
        dc.n_samples = cs.n_samples;
        dc.trace = cs.trace;
        dc.seed = seed;
        const CellDataset ds = generate_cell_dataset(cfg.cell_scenario(), cfg.channel, dc, workers);
        if (cs.write_datasets) write_cell_dataset(ds, dir + "/dataset_" + to_string(v));
        for (PredictorId id : cs.predictors) {
            Stopwatch sw;
            const auto salt = static_cast<std::uint64_t>(id) * 16 + static_cast<std::uint64_t>(v);
            Predictor p = make_cell_predictor(id, ds, arch, derive_seed(seed, 3000 + salt));
            TrainConfig tc = cs.train;
            tc.seed = derive_seed(seed, 4000 + salt);
            tc.workers = workers;
            const auto tr = train_predictor(p, ds, tc);
            const nn::Tensor pred = predict_cell_l3(p, ds.test.x, v);
            const auto runs = run_simulation(traces, ai, ForecastSource::model, &p);
            const std::string name = to_string(id) + "_" + to_string(v);
            save_predictor(dir + "/" + name + ".rbck", p);
            for (std::size_t k = 0; k < runs.size(); ++k)
                write_atomic(dir + "/events/" + name + "_pass" + std::to_string(k) + ".csv", runs[k].log.to_csv());
            const KpiReport pooled = pool_kpis(runs);
            models.push_back({{"predictor", to_string(id)},
                              {"variant", to_string(v)},
                              {"nmse", nmse(pred.values(), ds.test.y_dbm.values())},
                              {"rsrp_difference", rsrp_difference(pred.values(), ds.test.y_dbm.values()).to_json()},
                              {"measured_per_window", ds.measured_per_window},
                              {"entries_per_window", ds.config.t_in * ds.n_cells * ds.n_beams},
                              {"kpi", pooled.to_json()},
                              {"kpi_per_pass", per_pass(runs)},
                              {"train", train_summary(tr)}});
            timing[name] = sw.seconds();
            if (log)
                *log << "[cell] " << speed_tag(speed) << " seed " << seed << " " << name << " rlf "
                     << fixed6(pooled.rlf_rate) << " vs traditional " << fixed6(pool_kpis(base_runs).rlf_rate)
                     << " (" << std::setprecision(3) << sw.seconds() << " s)\n"
                     << std::flush;
        }
    }
    write_atomic(dir + "/timing.json", timing.dump(2));
    return {{"speed_kmh", speed},
            {"seed", seed},
            {"traditional", pool_kpis(base_runs).to_json()},
            {"traditional_per_pass", per_pass(base_runs)},
            {"oracle", pool_kpis(oracle_runs).to_json()},
            {"models", models}};
}

std::string header_line(const json& config_meta, const std::string& extra) {
    std::string seeds;
    for (const auto& s : config_meta.at("seeds")) seeds += (seeds.empty() ? "" : ";") + std::to_string(s.get<std::uint64_t>());
    return "# railbeam " + std::string(kVersion) + " config_hash=" + config_meta.at("config_hash").get<std::string>() +
           " seeds=" + seeds + (extra.empty() ? "" : " " + extra) + "\n";
}

std::string row_name(const std::string& predictor, const std::string& variant) {
    const std::string arch = predictor == "cell_cnn" ? "CNN" : predictor == "cell_lstm" ? "LSTM" : predictor;
    return arch + "_" + variant;
}

} // namespace

std::string speed_tag(double speed_kmh) { return "v" + num(speed_kmh); }

void ExperimentConfig::validate() const {
    if (speeds.empty()) throw ValidationError("experiment config: empty speed sweep");
    if (seeds.empty()) throw ValidationError("experiment config: empty seed sweep");
    for (double s : speeds)
        if (!(s > 0.0)) throw ValidationError("experiment config: speeds must be > 0");
    if (!beam.enabled && !cell.enabled) throw ValidationError("experiment config: no stage enabled");
    if (beam.enabled && beam.predictors.empty()) throw ValidationError("experiment config: empty beam predictor list");
    if (cell.enabled && cell.variants.empty()) throw ValidationError("experiment config: empty cell variant list");
    if (cell.enabled && cell.predictors.empty()) throw ValidationError("experiment config: empty cell predictor list");
    for (auto p : beam.predictors)
        if (!is_beam_level(p)) throw ValidationError(to_string(p) + " is not a beam-level predictor");
    for (auto p : cell.predictors)
        if (is_beam_level(p)) throw ValidationError(to_string(p) + " is not a cell-level predictor");
    if (cell.sim_passes == 0) throw ValidationError("experiment config: sim_passes must be >= 1");
    if (output_dir.empty()) throw ValidationError("experiment config: empty output_dir");
    handover.validate();
}

json ExperimentConfig::to_json() const {
    return {{"scenario", railbeam::to_json(scenario)},
            {"channel", railbeam::to_json(channel)},
            {"beam", stage_json(beam)},
            {"cell", stage_json(cell)},
            {"handover", railbeam::to_json(handover)},
            {"speeds", speeds},
            {"seeds", seeds},
            {"output_dir", output_dir},
            {"full_scale", full_scale}};
}

std::string ExperimentConfig::hash() const {
    json j = to_json();
    j.erase("output_dir");
    return hex64(fnv1a64(j.dump() + kVersion));
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("scenario")) c.scenario = scenario_config_from_json(j.at("scenario"));
        if (j.contains("channel")) c.channel = channel_config_from_json(j.at("channel"));
        if (j.contains("beam")) c.beam = beam_stage_from_json(j.at("beam"));
        if (j.contains("cell")) c.cell = cell_stage_from_json(j.at("cell"));
        if (j.contains("handover")) c.handover = handover_config_from_json(j.at("handover"));
        c.speeds = parse_list<double>(j, "speeds", [](const json& e) { return e.get<double>(); }, c.speeds);
        c.seeds = parse_list<std::uint64_t>(j, "seeds", [](const json& e) { return e.get<std::uint64_t>(); }, c.seeds);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.full_scale = j.value("full_scale", c.full_scale);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("config " + path + " is not valid JSON: " + e.what());
    }
    return experiment_config_from_json(j);
}

json run_pipeline(const ExperimentConfig& cfg, const PipelineOptions& opts) {
    cfg.validate();
    const std::string out = cfg.output_dir;
    const std::string hash = cfg.hash();
    fs::create_directories(out);
    json cfg_json = cfg.to_json();
    cfg_json["config_hash"] = hash;
    cfg_json["version"] = kVersion;
    write_atomic(out + "/config.json", cfg_json.dump(2));

    for (double speed : cfg.speeds)
        for (std::uint64_t seed : cfg.seeds) {
            if (cfg.beam.enabled) {
                const std::string dir = out + "/beam/" + speed_tag(speed) + "_s" + std::to_string(seed);
                if (!finished(dir, hash)) {
                    fs::create_directories(dir);
                    Stopwatch sw;
                    json r = run_beam_unit(cfg, speed, seed, dir, opts.workers, opts.log);
                    r["config_hash"] = hash;
                    r["seconds"] = sw.seconds();
                    write_atomic(dir + "/done.json", r.dump(2));
                } else if (opts.log) {
                    *opts.log << "[beam] " << speed_tag(speed) << " seed " << seed << " already complete\n";
                }
            }
            if (cfg.cell.enabled) {
                const std::string dir = out + "/cell/" + speed_tag(speed) + "_s" + std::to_string(seed);
                if (!finished(dir, hash)) {
                    fs::create_directories(dir);
                    Stopwatch sw;
                    json r = run_cell_unit(cfg, speed, seed, dir, opts.workers, opts.log);
                    r["config_hash"] = hash;
                    r["seconds"] = sw.seconds();
                    write_atomic(dir + "/done.json", r.dump(2));
                } else if (opts.log) {
                    *opts.log << "[cell] " << speed_tag(speed) << " seed " << seed << " already complete\n";
                }
            }
        }

    json summary{{"config_hash", hash}, {"version", kVersion}, {"seeds", cfg.seeds}};
    if (cfg.beam.enabled) {
        write_atomic(out + "/fig3.csv", build_report_csv(out, ReportStyle::fig3));
        summary["fig3"] = build_report_json(out, ReportStyle::fig3);
        write_atomic(out + "/fig3.json", summary["fig3"].dump(2));
    }
    if (cfg.cell.enabled) {
        write_atomic(out + "/table2.csv", build_report_csv(out, ReportStyle::table2));
        summary["table2"] = build_report_json(out, ReportStyle::table2);
        write_atomic(out + "/table2.json", summary["table2"].dump(2));
    }
    write_atomic(out + "/summary.json", summary.dump(2));
    return summary;
}

ReportStyle report_style_from_string(const std::string& s) {
    if (s == "fig3") return ReportStyle::fig3;
    if (s == "table2") return ReportStyle::table2;
    throw ValidationError("unknown report style '" + s + "' (fig3 or table2)");
}

json build_report_json(const std::string& dir, ReportStyle style) {
    const json cfg = read_json_file(dir + "/config.json");
    const std::string hash = cfg.at("config_hash").get<std::string>();
    const auto speeds = cfg.at("speeds").get<std::vector<double>>();
    const auto seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
    json out{{"config_hash", hash}, {"version", kVersion}, {"seeds", seeds}};
    auto unit = [&](const char* stage, double speed, std::uint64_t seed) {
        const std::string path = dir + "/" + stage + "/" + speed_tag(speed) + "_s" + std::to_string(seed);
        auto j = finished(path, hash);
        if (!j) throw ValidationError("run " + path + " has not completed for config " + hash);
        return *j;
    };

    double stage_seconds = 0.0;
    if (style == ReportStyle::fig3) {
        json rows = json::array();
        for (double speed : speeds) {
            std::vector<std::string> names;
            std::map<std::string, std::vector<double>> acc;
            for (auto seed : seeds) {
                const json u = unit("beam", speed, seed);
                stage_seconds += u.value("seconds", 0.0);
                for (const auto& p : u.at("predictors")) {
                    const auto name = p.at("predictor").get<std::string>();
                    if (!acc.count(name)) names.push_back(name);
                    acc[name].push_back(p.at("top1_accuracy").get<double>());
                }
            }
            for (const auto& n : names) {
                double mean = 0.0;
                for (double a : acc[n]) mean += a;
                mean /= static_cast<double>(acc[n].size());
                rows.push_back({{"speed_kmh", speed}, {"predictor", n}, {"top1_accuracy", mean}, {"per_seed", acc[n]}});
            }
        }
        out["rows"] = rows;
        out["stage_seconds"] = stage_seconds;
        return out;
    }

    struct Pool {
        std::size_t rlf = 0, success = 0;
        std::vector<double> per_seed;
        void add(const json& kpi) {
            const auto r = kpi.at("rlf").get<std::size_t>(), s = kpi.at("ho_success").get<std::size_t>();
            rlf += r;
            success += s;
            per_seed.push_back(r + s ? static_cast<double>(r) / static_cast<double>(r + s) : 0.0);
        }
        double rate() const { return rlf + success ? static_cast<double>(rlf) / static_cast<double>(rlf + success) : 0.0; }
    };
    std::vector<std::string> names{"Non-AI"};
    std::map<std::string, std::map<double, Pool>> pools;
    std::map<double, Pool> oracle;
    std::map<std::string, std::map<double, std::vector<double>>> nmse_by;
    for (double speed : speeds)
        for (auto seed : seeds) {
            const json u = unit("cell", speed, seed);
            stage_seconds += u.value("seconds", 0.0);
            pools["Non-AI"][speed].add(u.at("traditional"));
            oracle[speed].add(u.at("oracle"));
            for (const auto& m : u.at("models")) {
                const std::string n = row_name(m.at("predictor"), m.at("variant"));
                if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
                pools[n][speed].add(m.at("kpi"));
                nmse_by[n][speed].push_back(m.at("nmse").get<double>());
            }
        }
    json rows = json::array();
    for (const auto& n : names) {
        json cols = json::array();
        for (double speed : speeds) {
            const Pool& p = pools[n][speed];
            json c{{"speed_kmh", speed}, {"rlf_rate", p.rate()}, {"rlf", p.rlf}, {"ho_success", p.success},
                   {"per_seed_rlf_rate", p.per_seed}};
            if (nmse_by.count(n)) c["per_seed_nmse"] = nmse_by[n][speed];
            cols.push_back(c);
        }
        rows.push_back({{"scheme", n}, {"columns", cols}});
    }
    json orc = json::array();
    for (double speed : speeds)
        orc.push_back({{"speed_kmh", speed}, {"rlf_rate", oracle[speed].rate()}, {"rlf", oracle[speed].rlf},
                       {"ho_success", oracle[speed].success}});
    out["metric"] = "rlf_rate";
    out["definition"] = kRlfRateDefinition;
    out["pooling"] = "RLF and successful-handover counts summed over seeds and simulation passes";
    out["stage_seconds"] = stage_seconds;
    out["rows"] = rows;
    out["oracle_ai_option1"] = orc;
    return out;
}

std::string build_report_csv(const std::string& dir, ReportStyle style) {
    const json cfg = read_json_file(dir + "/config.json");
    const json rep = build_report_json(dir, style);
    std::ostringstream os;
    if (style == ReportStyle::fig3) {
        os << header_line(cfg, "metric=top1_accuracy(mean over seeds)");
        os << "speed,predictor,top1_accuracy\n";
        for (const auto& r : rep.at("rows"))
            os << num(r.at("speed_kmh").get<double>()) << ',' << r.at("predictor").get<std::string>() << ','
               << fixed6(r.at("top1_accuracy").get<double>()) << '\n';
        return os.str();
    }
    os << header_line(cfg, "metric=rlf_rate(pooled over seeds and passes)");
    os << "scheme";
    for (const auto& s : cfg.at("speeds")) os << ',' << num(s.get<double>());
    os << '\n';
    for (const auto& r : rep.at("rows")) {
        os << r.at("scheme").get<std::string>();
        for (const auto& c : r.at("columns")) os << ',' << fixed6(c.at("rlf_rate").get<double>());
        os << '\n';
    }
    return os.str();
}

} // namespace railbeam
