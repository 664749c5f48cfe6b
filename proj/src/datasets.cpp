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


#include "datasets.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "nn/layers.hpp"
#include "workers.hpp"

namespace railbeam {

using nlohmann::json;
using nn::Shape;
using nn::Tensor;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

double MinMax::scale(double v) const { return nn::minmax_scale(v, lo, hi); }
double MinMax::unscale(double v) const { return nn::minmax_unscale(v, lo, hi); }

MinMax MinMax::from_json(const json& j) { return {j.at("min").get<double>(), j.at("max").get<double>()}; }

MinMax MinMax::fit(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("cannot fit normalisation on an empty split");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    MinMax m{*lo, *hi};
    if (!(m.hi > m.lo)) m.hi = m.lo + 1.0;
    return m;
}

namespace {

struct SplitSizes {
    std::size_t train, val, test;
};

SplitSizes split_sizes(std::size_t n, std::size_t val_parts, std::size_t total_parts) {
    const std::size_t val = n * val_parts / total_parts;
    return {n - 2 * val, val, val};
}

/// Scenario identity without the speed-dependent fields.
std::string geometry_hash(const Scenario& s) {
    json j = s.to_json();
    j.erase("ue_speed_kmh");
    j.erase("n_slots");
    return hex64(fnv1a64(j.dump()));
}

Scenario scenario_at_speed(const ScenarioConfig& base, double speed_kmh) {
    ScenarioConfig sc = base;
    sc.ue_speed_kmh = speed_kmh;
    sc.n_slots = 0;
    return build_scenario(sc);
}

Tensor slice_rows(const Tensor& t, std::size_t from, std::size_t count) {
    Shape s = t.shape();
    const std::size_t row = s[0] ? t.size() / s[0] : 0;
    s[0] = count;
    return Tensor(s, std::vector<double>(t.storage().begin() + static_cast<std::ptrdiff_t>(from * row),
                                         t.storage().begin() + static_cast<std::ptrdiff_t>((from + count) * row)));
}

void check_config_common(std::size_t t_in, std::size_t horizon, std::size_t n, double speed) {
    if (t_in == 0) throw ValidationError("t_in must be >= 1");
    if (horizon == 0) throw ValidationError("horizon must be >= 1");
    if (n == 0) throw ValidationError("n_samples must be >= 1");
    if (!(speed > 0.0)) throw ValidationError("speed must be > 0");
}

constexpr std::size_t kMaxPasses = 10000;

} // namespace

// ---------------------------------------------------------------- beam level

BeamDatasetConfig beam_dataset_config_from_json(const json& j) {
    BeamDatasetConfig c;
    try {
        c.speed_kmh = j.value("speed_kmh", c.speed_kmh);
        if (j.contains("ratio")) {
            const json& r = j.at("ratio");
            c.ratio = Ratio::parse(r.is_string() ? r.get<std::string>() : std::to_string(r.get<double>()));
        }
        c.pattern = selection_pattern_from_string(j.value("pattern", std::string("equidistant")));
        c.t_in = j.value("t_in", c.t_in);
        c.horizon = j.value("horizon", c.horizon);
        c.n_samples = j.value("n_samples", c.n_samples);
        c.meas_period_slots = j.value("meas_period_slots", c.meas_period_slots);
        if (j.contains("noise")) c.noise = noise_config_from_json(j.at("noise"));
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("beam dataset config: ") + e.what());
    }
    return c;
}

json to_json(const BeamDatasetConfig& c) {
    return {{"speed_kmh", c.speed_kmh},
            {"ratio", c.ratio.str()},
            {"pattern", c.pattern == SelectionPattern::equidistant ? "equidistant" : "random"},
            {"t_in", c.t_in},
            {"horizon", c.horizon},
            {"n_samples", c.n_samples},
            {"meas_period_slots", c.meas_period_slots},
            {"noise", to_json(c.noise)},
            {"seed", c.seed}};
}

const BeamSplit& BeamDataset::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw ValidationError("unknown split '" + name + "'");
}

json BeamDataset::meta() const {
    const std::size_t T = config.t_in;
    auto shapes = [&](const BeamSplit& s) {
        return json{{"n", s.n},
                    {"h", {s.n, T, 2 * n_beams}},
                    {"x", {s.n, T, m()}},
                    {"y", {s.n, n_beams}},
                    {"y_dbm", {s.n, n_beams}}};
    };
    return {{"schema_version", kDatasetSchemaVersion},
            {"kind", "beam"},
            {"config", to_json(config)},
            {"n_beams", n_beams},
            {"set_b", {{"kind", to_string(set_b.kind)},
                       {"indices", set_b.indices},
                       {"measurement_count", set_b.measurement_count},
                       {"set_a_size", set_b.set_a_size},
                       {"ratio", set_b.ratio().str()}}},
            {"normalization", {{"input_db", input_norm.to_json()}, {"output_db", output_norm.to_json()}}},
            {"scenario_hash", scenario_hash},
            {"passes", passes},
            {"splits", {{"train", shapes(train)}, {"val", shapes(val)}, {"test", shapes(test)}}}};
}

std::vector<double> measured_dbm(const BeamSplit& s, const SetB& set_b, std::size_t i, std::size_t t) {
    const std::size_t T = s.h.dim(1), twoB = s.h.dim(2);
    const double* row = s.h.data() + (i * T + t) * twoB;
    std::vector<double> out;
    out.reserve(set_b.indices.size());
    for (std::size_t idx : set_b.indices)
        out.push_back(power_to_db(std::norm(cplx{row[2 * idx], row[2 * idx + 1]})));
    return out;
}

Tensor downsampled_features(const Tensor& h, const SetB& set_b, const MinMax& norm) {
    if (h.rank() != 3) throw ValidationError("channel tensor must be [n, T, 2|A|]");
    const std::size_t n = h.dim(0), T = h.dim(1), twoB = h.dim(2);
    const std::size_t m = set_b.indices.size();
    Tensor x({n, T, m});
    for (std::size_t r = 0; r < n * T; ++r) {
        const double* row = h.data() + r * twoB;
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t idx = set_b.indices[j];
            if (2 * idx + 1 >= twoB) throw ValidationError("Set B index outside the channel tensor");
            x[r * m + j] = norm.scale(power_to_db(std::norm(cplx{row[2 * idx], row[2 * idx + 1]})));
        }
    }
    return x;
}

BeamDataset generate_beam_dataset(const ScenarioConfig& scenario_cfg, const ChannelConfig& channel,
                                  const BeamDatasetConfig& cfg, std::size_t workers) {
    check_config_common(cfg.t_in, cfg.horizon, cfg.n_samples, cfg.speed_kmh);
    if (cfg.meas_period_slots == 0) throw ValidationError("meas_period_slots must be >= 1");
    const Scenario scenario = scenario_at_speed(scenario_cfg, cfg.speed_kmh);
    const std::size_t B = scenario.uniform_beam_count();
    if (B == 0) throw ValidationError("beam dataset needs the same codebook in every sector");
    const std::size_t C = scenario.cell_count();
    const std::size_t T = cfg.t_in;

    BeamDataset ds;
    ds.config = cfg;
    ds.n_beams = B;
    ds.set_b = select_set_b(B, cfg.pattern, cfg.ratio, derive_seed(cfg.seed, 7));
    ds.scenario_hash = geometry_hash(scenario);

    const std::size_t n_inst = (scenario.n_slots() + cfg.meas_period_slots - 1) / cfg.meas_period_slots;
    const std::size_t span = T + cfg.horizon;
    if (n_inst < span)
        throw ValidationError("insufficient slots: " + std::to_string(n_inst) + " measurement instances, window needs " +
                              std::to_string(span));
    const std::size_t per_pass = n_inst - span + 1;

    const std::size_t N = cfg.n_samples;
    std::vector<double> h_all(N * T * 2 * B), y_all(N * B);
    std::size_t count = 0;
    for (std::size_t pass = 0; count < N; ++pass) {
        if (pass >= kMaxPasses) throw ValidationError("insufficient slots for the requested sample count");
        const ChannelModel model(scenario, channel, derive_seed(cfg.seed, 100 + pass));
        std::vector<cplx> coeffs(n_inst * C * B);
        std::vector<double> truth(n_inst * C * B);
        parallel_for(
            n_inst,
            [&](std::size_t i) {
                for (std::size_t c = 0; c < C; ++c) {
                    const std::size_t slot = i * cfg.meas_period_slots;
                    const PathSet paths = model.synthesize_paths(c, slot);
                    const auto h = beam_coefficients(paths, model.codebook(c), scenario.sector(c).tx_power_dbm);
                    const auto r = paths.paths.empty() ? std::vector<double>(B, kRsrpFloorDbm) : coefficients_to_rsrp(h);
                    std::copy(h.begin(), h.end(), coeffs.begin() + static_cast<std::ptrdiff_t>((i * C + c) * B));
                    std::copy(r.begin(), r.end(), truth.begin() + static_cast<std::ptrdiff_t>((i * C + c) * B));
                }
            },
            workers);
        std::mt19937_64 rng(derive_seed(cfg.seed, 200 + pass));
        apply_coefficient_noise(coeffs, cfg.noise, rng);

        std::vector<std::size_t> best(n_inst);
        for (std::size_t i = 0; i < n_inst; ++i) {
            const auto first = truth.begin() + static_cast<std::ptrdiff_t>(i * C * B);
            best[i] = static_cast<std::size_t>(std::max_element(first, first + static_cast<std::ptrdiff_t>(C * B)) - first) / B;
        }
        for (std::size_t w = 0; w < per_pass && count < N; ++w, ++count) {
            const std::size_t last = w + T - 1;
            const std::size_t c = best[last];
            for (std::size_t t = 0; t < T; ++t) {
                const cplx* src = coeffs.data() + ((w + t) * C + c) * B;
                double* dst = h_all.data() + (count * T + t) * 2 * B;
                for (std::size_t b = 0; b < B; ++b) {
                    dst[2 * b] = src[b].real();
                    dst[2 * b + 1] = src[b].imag();
                }
            }
            const double* tgt = truth.data() + ((last + cfg.horizon) * C + c) * B;
            std::copy(tgt, tgt + B, y_all.begin() + static_cast<std::ptrdiff_t>(count * B));
        }
        ds.passes = pass + 1;
    }

    const Tensor h({N, T, 2 * B}, std::move(h_all));
    const Tensor y_dbm({N, B}, std::move(y_all));
    const SplitSizes sz = split_sizes(N, 1, 10);

    std::vector<double> in_db;
    in_db.reserve(sz.train * T * B);
    for (std::size_t k = 0; k < sz.train * T * B; ++k)
        in_db.push_back(power_to_db(std::norm(cplx{h[2 * k], h[2 * k + 1]})));
    ds.input_norm = MinMax::fit(in_db);
    ds.output_norm = MinMax::fit(std::vector<double>(y_dbm.storage().begin(),
                                                     y_dbm.storage().begin() + static_cast<std::ptrdiff_t>(sz.train * B)));

    auto fill = [&](BeamSplit& s, std::size_t from, std::size_t n) {
        s.n = n;
        s.h = slice_rows(h, from, n);
        s.y_dbm = slice_rows(y_dbm, from, n);
        s.x = downsampled_features(s.h, ds.set_b, ds.input_norm);
        s.y = Tensor(s.y_dbm.shape());
        for (std::size_t k = 0; k < s.y.size(); ++k) s.y[k] = ds.output_norm.scale(s.y_dbm[k]);
    };
    fill(ds.train, 0, sz.train);
    fill(ds.val, sz.train, sz.val);
    fill(ds.test, sz.train + sz.val, sz.test);
    return ds;
}

// ---------------------------------------------------------------- tensor files

void write_tensor_file(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!out) throw RuntimeError("failed writing " + path);
}

Tensor read_tensor_file(const std::string& path, const Shape& shape) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("missing tensor file " + path);
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != t.size() * sizeof(double) || in.peek() != EOF)
        throw InvariantError("tensor file " + path + " does not match shape " + nn::shape_str(shape));
    return t;
}

namespace {

void write_meta(const std::string& dir, const json& meta) {
    fs::create_directories(dir);
    std::ofstream out(dir + "/meta.json", std::ios::trunc);
    if (!out) throw RuntimeError("cannot write " + dir + "/meta.json");
    out << meta.dump(2) << "\n";
}

json read_meta(const std::string& dir, const char* kind) {
    std::ifstream in(dir + "/meta.json");
    if (!in) throw ValidationError("dataset not found: " + dir);
    json meta;
    try {
        meta = json::parse(in);
    } catch (const json::exception& e) {
        throw InvariantError("bad meta.json in " + dir + ": " + e.what());
    }
    if (meta.value("schema_version", 0) != kDatasetSchemaVersion || meta.value("kind", "") != kind)
        throw InvariantError("dataset " + dir + " has an unexpected schema or kind");
    return meta;
}

Shape shape_of(const json& j) { return j.get<Shape>(); }

} // namespace

void write_beam_dataset(const BeamDataset& ds, const std::string& dir) {
    const Ratio r = ds.set_b.ratio();
    if (r.num * static_cast<std::int64_t>(ds.n_beams) != static_cast<std::int64_t>(ds.m()) * r.den)
        throw InvariantError("Set B ratio " + r.str() + " does not equal m/|A| = " + std::to_string(ds.m()) + "/" +
                             std::to_string(ds.n_beams));
    if (ds.m() != (ds.set_b.kind == SetBKind::compressed ? ds.set_b.measurement_count : ds.set_b.indices.size()))
        throw InvariantError("Set B measurement count disagrees with its indices");
    write_meta(dir, ds.meta());
    for (const char* name : {"train", "val", "test"}) {
        const BeamSplit& s = ds.split(name);
        const std::string p = dir + "/" + name;
        write_tensor_file(p + "_h.bin", s.h);
        write_tensor_file(p + "_x.bin", s.x);
        write_tensor_file(p + "_y.bin", s.y);
        write_tensor_file(p + "_y_dbm.bin", s.y_dbm);
    }
}

BeamDataset read_beam_dataset(const std::string& dir) {
    const json meta = read_meta(dir, "beam");
    BeamDataset ds;
    try {
        ds.config = beam_dataset_config_from_json(meta.at("config"));
        ds.n_beams = meta.at("n_beams").get<std::size_t>();
        const json& sb = meta.at("set_b");
        ds.set_b.kind = set_b_kind_from_string(sb.at("kind").get<std::string>());
        ds.set_b.indices = sb.at("indices").get<std::vector<std::size_t>>();
        ds.set_b.measurement_count = sb.at("measurement_count").get<std::size_t>();
        ds.set_b.set_a_size = sb.at("set_a_size").get<std::size_t>();
        ds.input_norm = MinMax::from_json(meta.at("normalization").at("input_db"));
        ds.output_norm = MinMax::from_json(meta.at("normalization").at("output_db"));
        ds.scenario_hash = meta.at("scenario_hash").get<std::string>();
        ds.passes = meta.at("passes").get<std::size_t>();
        for (const char* name : {"train", "val", "test"}) {
            BeamSplit& s = const_cast<BeamSplit&>(ds.split(name));
            const json& sh = meta.at("splits").at(name);
            const std::string p = dir + "/" + name;
            s.n = sh.at("n").get<std::size_t>();
            s.h = read_tensor_file(p + "_h.bin", shape_of(sh.at("h")));
            s.x = read_tensor_file(p + "_x.bin", shape_of(sh.at("x")));
            s.y = read_tensor_file(p + "_y.bin", shape_of(sh.at("y")));
            s.y_dbm = read_tensor_file(p + "_y_dbm.bin", shape_of(sh.at("y_dbm")));
        }
    } catch (const json::exception& e) {
        throw InvariantError("bad meta.json in " + dir + ": " + e.what());
    }
    return ds;
}

// ---------------------------------------------------------------- cell level

std::string to_string(CellVariant v) {
    switch (v) {
    case CellVariant::all_beam_cell: return "All_Beam_Cell";
    case CellVariant::part_cell: return "Part_Cell";
    case CellVariant::part_beam: return "Part_Beam";
    }
    return "?";
}

CellVariant cell_variant_from_string(const std::string& s) {
    std::string k;
    for (char c : s) k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (k == "all_beam_cell" || k == "all") return CellVariant::all_beam_cell;
    if (k == "part_cell") return CellVariant::part_cell;
    if (k == "part_beam") return CellVariant::part_beam;
    throw ValidationError("unknown cell variant '" + s + "'");
}

CellDatasetConfig cell_dataset_config_from_json(const json& j) {
    CellDatasetConfig c;
    try {
        c.speed_kmh = j.value("speed_kmh", c.speed_kmh);
        c.variant = cell_variant_from_string(j.value("variant", std::string("All_Beam_Cell")));
        c.t_in = j.value("t_in", c.t_in);
        c.t_out = j.value("t_out", c.t_out);
        c.n_samples = j.value("n_samples", c.n_samples);
        if (j.contains("trace")) c.trace = trace_config_from_json(j.at("trace"));
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("cell dataset config: ") + e.what());
    }
    return c;
}

json to_json(const CellDatasetConfig& c) {
    return {{"speed_kmh", c.speed_kmh}, {"variant", to_string(c.variant)}, {"t_in", c.t_in},
            {"t_out", c.t_out},         {"n_samples", c.n_samples},        {"trace", to_json(c.trace)},
            {"seed", c.seed}};
}

const CellSplit& CellDataset::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw ValidationError("unknown split '" + name + "'");
}

json CellDataset::meta() const {
    auto shapes = [&](const CellSplit& s) {
        return json{{"n", s.n},
                    {"x", {s.n, config.t_in, n_cells, n_beams}},
                    {"y", {s.n, config.t_out, n_cells}},
                    {"y_dbm", {s.n, config.t_out, n_cells}}};
    };
    return {{"schema_version", kDatasetSchemaVersion},
            {"kind", "cell"},
            {"config", to_json(config)},
            {"n_cells", n_cells},
            {"n_beams", n_beams},
            {"measured_per_window", measured_per_window},
            {"entries_per_window", config.t_in * n_cells * n_beams},
            {"normalization", {{"input_db", input_norm.to_json()}, {"output_db", output_norm.to_json()}}},
            {"scenario_hash", scenario_hash},
            {"passes", passes},
            {"splits", {{"train", shapes(train)}, {"val", shapes(val)}, {"test", shapes(test)}}}};
}

bool is_measured(CellVariant v, std::size_t k, std::size_t cell, std::size_t beam) {
    switch (v) {
    case CellVariant::all_beam_cell: return true;
    case CellVariant::part_beam: return beam % 2 == k % 2;
    case CellVariant::part_cell: return cell % 2 == k % 2;
    }
    return true;
}

std::size_t measured_count(CellVariant v, std::size_t k0, std::size_t t_in, std::size_t cells, std::size_t beams) {
    std::size_t n = 0;
    for (std::size_t k = k0; k < k0 + t_in; ++k)
        for (std::size_t c = 0; c < cells; ++c)
            for (std::size_t b = 0; b < beams; ++b) n += is_measured(v, k, c, b);
    return n;
}

std::vector<double> cell_input_window(const MeasurementTrace& t, CellVariant v, std::size_t last, std::size_t t_in) {
    if (last + 1 < t_in || last >= t.n_instances()) throw ValidationError("input window outside the trace");
    const std::size_t C = t.n_cells, B = t.n_beams;
    std::vector<double> out(t_in * C * B, kRsrpFloorDbm);
    for (std::size_t s = 0; s < t_in; ++s) {
        const std::size_t k = last + 1 - t_in + s;
        const auto l1 = t.l1_at(k);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t b = 0; b < B; ++b)
                if (is_measured(v, k, c, b)) out[(s * C + c) * B + b] = l1[c * B + b];
    }
    return out;
}

CellDataset generate_cell_dataset(const ScenarioConfig& scenario_cfg, const ChannelConfig& channel,
                                  const CellDatasetConfig& cfg, std::size_t workers) {
    check_config_common(cfg.t_in, cfg.t_out, cfg.n_samples, cfg.speed_kmh);
    const Scenario scenario = scenario_at_speed(scenario_cfg, cfg.speed_kmh);
    const std::size_t B = scenario.uniform_beam_count();
    if (B == 0) throw ValidationError("cell dataset needs the same codebook in every sector");
    const std::size_t C = scenario.cell_count();

    CellDataset ds;
    ds.config = cfg;
    ds.n_cells = C;
    ds.n_beams = B;
    ds.scenario_hash = geometry_hash(scenario);

    const std::size_t N = cfg.n_samples, TI = cfg.t_in, TO = cfg.t_out;
    std::vector<double> x_all(N * TI * C * B), y_all(N * TO * C);
    std::size_t count = 0;
    ds.measured_per_window = measured_count(cfg.variant, 0, TI, C, B);
    for (std::size_t pass = 0; count < N; ++pass) {
        if (pass >= kMaxPasses) throw ValidationError("insufficient slots for the requested sample count");
        const ChannelModel model(scenario, channel, derive_seed(cfg.seed, 300 + pass));
        const MeasurementTrace trace = generate_trace(model, cfg.trace, derive_seed(cfg.seed, 400 + pass), workers);
        const std::size_t n_inst = trace.n_instances();
        if (n_inst < TI + TO)
            throw ValidationError("insufficient slots: " + std::to_string(n_inst) + " instances, window needs " +
                                  std::to_string(TI + TO));
        for (std::size_t w = 0; w + TI + TO <= n_inst && count < N; ++w, ++count) {
            if (measured_count(cfg.variant, w, TI, C, B) != ds.measured_per_window)
                throw InvariantError("measurement count varies between windows");
            const auto x = cell_input_window(trace, cfg.variant, w + TI - 1, TI);
            std::copy(x.begin(), x.end(), x_all.begin() + static_cast<std::ptrdiff_t>(count * TI * C * B));
            for (std::size_t s = 0; s < TO; ++s) {
                const auto l3 = trace.l3_at(w + TI + s);
                std::copy(l3.begin(), l3.end(), y_all.begin() + static_cast<std::ptrdiff_t>((count * TO + s) * C));
            }
        }
        ds.passes = pass + 1;
    }

    const Tensor x_dbm({N, TI, C, B}, std::move(x_all));
    const Tensor y_dbm({N, TO, C}, std::move(y_all));
    const SplitSizes sz = split_sizes(N, 1, 5);
    ds.input_norm = MinMax::fit(std::vector<double>(
        x_dbm.storage().begin(), x_dbm.storage().begin() + static_cast<std::ptrdiff_t>(sz.train * TI * C * B)));
    ds.output_norm = MinMax::fit(std::vector<double>(
        y_dbm.storage().begin(), y_dbm.storage().begin() + static_cast<std::ptrdiff_t>(sz.train * TO * C)));

    auto fill = [&](CellSplit& s, std::size_t from, std::size_t n) {
        s.n = n;
        s.x = slice_rows(x_dbm, from, n);
        for (double& v : s.x.values()) v = ds.input_norm.scale(v);
        s.y_dbm = slice_rows(y_dbm, from, n);
        s.y = Tensor(s.y_dbm.shape());
        for (std::size_t k = 0; k < s.y.size(); ++k) s.y[k] = ds.output_norm.scale(s.y_dbm[k]);
    };
    fill(ds.train, 0, sz.train);
    fill(ds.val, sz.train, sz.val);
    fill(ds.test, sz.train + sz.val, sz.test);
    return ds;
}

void write_cell_dataset(const CellDataset& ds, const std::string& dir) {
    const std::size_t total = ds.config.t_in * ds.n_cells * ds.n_beams;
    if (ds.config.variant != CellVariant::all_beam_cell && 2 * ds.measured_per_window != total)
        throw InvariantError(to_string(ds.config.variant) + " window measures " + std::to_string(ds.measured_per_window) +
                             " of " + std::to_string(total) + " entries, expected exactly half");
    if (ds.config.variant == CellVariant::all_beam_cell && ds.measured_per_window != total)
        throw InvariantError("All_Beam_Cell window must measure every entry");
    write_meta(dir, ds.meta());
    for (const char* name : {"train", "val", "test"}) {
        const CellSplit& s = ds.split(name);
        const std::string p = dir + "/" + name;
        write_tensor_file(p + "_x.bin", s.x);
        write_tensor_file(p + "_y.bin", s.y);
        write_tensor_file(p + "_y_dbm.bin", s.y_dbm);
    }
}

CellDataset read_cell_dataset(const std::string& dir) {
    const json meta = read_meta(dir, "cell");
    CellDataset ds;
    try {
        ds.config = cell_dataset_config_from_json(meta.at("config"));
        ds.n_cells = meta.at("n_cells").get<std::size_t>();
        ds.n_beams = meta.at("n_beams").get<std::size_t>();
        ds.measured_per_window = meta.at("measured_per_window").get<std::size_t>();
        ds.input_norm = MinMax::from_json(meta.at("normalization").at("input_db"));
        ds.output_norm = MinMax::from_json(meta.at("normalization").at("output_db"));
        ds.scenario_hash = meta.at("scenario_hash").get<std::string>();
        ds.passes = meta.at("passes").get<std::size_t>();
        for (const char* name : {"train", "val", "test"}) {
            CellSplit& s = const_cast<CellSplit&>(ds.split(name));
            const json& sh = meta.at("splits").at(name);
            const std::string p = dir + "/" + name;
            s.n = sh.at("n").get<std::size_t>();
            s.x = read_tensor_file(p + "_x.bin", shape_of(sh.at("x")));
            s.y = read_tensor_file(p + "_y.bin", shape_of(sh.at("y")));
            s.y_dbm = read_tensor_file(p + "_y_dbm.bin", shape_of(sh.at("y_dbm")));
        }
    } catch (const json::exception& e) {
        throw InvariantError("bad meta.json in " + dir + ": " + e.what());
    }
    return ds;
}

} // namespace railbeam
