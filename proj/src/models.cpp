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


#include "models.hpp"

#include <algorithm>
#include <cmath>

#include "measurement.hpp"
#include "nn/checkpoint.hpp"
#include "nn/layers.hpp"

namespace railbeam {

using nlohmann::json;
using nn::Tensor;

namespace {

struct IdName {
    PredictorId id;
    const char* name;
};

constexpr IdName kIds[] = {
    {PredictorId::nonai_best_measured, "nonai_best_measured"},
    {PredictorId::lstm_downsampled, "lstm_downsampled"},
    {PredictorId::cnn_fc_downsampled, "cnn_fc_downsampled"},
    {PredictorId::convlstm_downsampled, "convlstm_downsampled"},
    {PredictorId::csai, "csai"},
    {PredictorId::cell_lstm, "cell_lstm"},
    {PredictorId::cell_cnn, "cell_cnn"},
};

std::int64_t i64(std::size_t v) { return static_cast<std::int64_t>(v); }

constexpr std::size_t kEvalChunk = 512;

Tensor forward_chunked(const nn::Sequential& net, const Tensor& x) {
    const std::size_t n = x.dim(0);
    if (n <= kEvalChunk) return net.forward(x);
    const std::size_t row = x.size() / n;
    Tensor out;
    std::vector<double> acc;
    nn::Shape os;
    for (std::size_t from = 0; from < n; from += kEvalChunk) {
        const std::size_t cnt = std::min(kEvalChunk, n - from);
        nn::Shape s = x.shape();
        s[0] = cnt;
        Tensor part(s, std::vector<double>(x.data() + from * row, x.data() + (from + cnt) * row));
        const Tensor y = net.forward(part);
        os = y.shape();
        acc.insert(acc.end(), y.storage().begin(), y.storage().end());
    }
    os[0] = n;
    return Tensor(os, std::move(acc));
}

} // namespace

std::string to_string(PredictorId id) {
    for (const auto& e : kIds)
        if (e.id == id) return e.name;
    return "?";
}

PredictorId predictor_id_from_string(const std::string& s) {
    for (const auto& e : kIds)
        if (s == e.name) return e.id;
    if (s == "nonai") return PredictorId::nonai_best_measured;
    throw ValidationError("unknown predictor '" + s + "'");
}

bool is_beam_level(PredictorId id) { return id != PredictorId::cell_lstm && id != PredictorId::cell_cnn; }
bool is_trainable(PredictorId id) { return id != PredictorId::nonai_best_measured; }

std::pair<std::size_t, std::size_t> grid_shape(std::size_t m) {
    if (m == 0) throw ValidationError("grid_shape: m must be >= 1");
    std::size_t ih = static_cast<std::size_t>(std::sqrt(static_cast<double>(m)));
    while (ih > 1 && m % ih) --ih;
    return {ih, m / ih};
}

nn::Sequential build_beam_network(PredictorId id, std::size_t n_beams, std::size_t m, std::size_t t_in,
                                  const ArchConfig& arch, const MinMax& input_norm) {
    using namespace nn;
    if (!n_beams || !m || !t_in) throw ValidationError("beam network sizes must be >= 1");
    const auto [ih, iw] = grid_shape(m);
    const std::size_t H = arch.lstm_hidden(), K = arch.beam_conv();
    Sequential net;
    auto convlstm_tail = [&] {
        net.emplace<Reshape>(std::vector<std::int64_t>{-1, 1, i64(ih), i64(iw)});
        net.emplace<Conv2d>(1, K, 3, 3, Padding::same);
        net.emplace<Activation>(ActivationKind::relu);
        net.emplace<Reshape>(std::vector<std::int64_t>{-1, i64(t_in), i64(K * m)});
        net.emplace<Lstm>(K * m, H, false);
        net.emplace<Dense>(H, n_beams);
        net.emplace<Activation>(ActivationKind::sigmoid);
    };
    switch (id) {
    case PredictorId::lstm_downsampled:
        net.emplace<Lstm>(m, H, false);
        net.emplace<Dense>(H, n_beams);
        net.emplace<Activation>(ActivationKind::sigmoid);
        break;
    case PredictorId::cnn_fc_downsampled:
        net.emplace<Reshape>(std::vector<std::int64_t>{-1, i64(t_in), i64(ih), i64(iw)});
        net.emplace<Conv2d>(t_in, K, 3, 3, Padding::same);
        net.emplace<Activation>(ActivationKind::relu);
        net.emplace<Reshape>(std::vector<std::int64_t>{-1, i64(K * m)});
        net.emplace<Dense>(K * m, arch.beam_dense());
        net.emplace<Activation>(ActivationKind::relu);
        net.emplace<Dense>(arch.beam_dense(), n_beams);
        net.emplace<Activation>(ActivationKind::sigmoid);
        break;
    case PredictorId::convlstm_downsampled:
        convlstm_tail();
        break;
    case PredictorId::csai:
        net.emplace<LinearCompression>(n_beams, m, input_norm.lo, input_norm.hi);
        convlstm_tail();
        break;
    default:
        throw ValidationError(to_string(id) + " is not a trainable beam-level predictor");
    }
    return net;
}

std::vector<nn::Sequential> build_cell_networks(PredictorId id, std::size_t n_cells, std::size_t n_beams,
                                                std::size_t t_in, std::size_t t_out, const ArchConfig& arch) {
    using namespace nn;
    if (!n_cells || !n_beams || !t_in || !t_out) throw ValidationError("cell network sizes must be >= 1");
    std::vector<Sequential> nets;
    if (id == PredictorId::cell_cnn) {
        Sequential net;
        std::size_t ch = t_in;
        for (std::size_t k : {arch.conv1(), arch.conv2(), arch.conv3()}) {
            net.emplace<Conv2d>(ch, k, 3, 3, Padding::same);
            net.emplace<Activation>(ActivationKind::relu);
            net.emplace<MaxPool>(1, 2);
            ch = k;
        }
        const Shape fs = net.output_shape({1, t_in, n_cells, n_beams});
        const std::size_t flat = fs[1] * fs[2] * fs[3];
        if (flat == 0) throw ValidationError("cell_cnn: " + std::to_string(n_cells) + "x" + std::to_string(n_beams) +
                                             " input is too small for three pooling stages");
        net.emplace<Reshape>(std::vector<std::int64_t>{-1, i64(flat)});
        net.emplace<Dense>(flat, arch.cell_dense());
        net.emplace<Activation>(ActivationKind::relu);
        net.emplace<Dense>(arch.cell_dense(), t_out * n_cells);
        net.emplace<Activation>(ActivationKind::sigmoid);
        net.emplace<Reshape>(std::vector<std::int64_t>{-1, i64(t_out), i64(n_cells)});
        nets.push_back(std::move(net));
    } else if (id == PredictorId::cell_lstm) {
        const std::size_t H = arch.lstm_hidden(), L = arch.cell_lstm_layers();
        for (std::size_t h = 0; h < t_out; ++h) {
            Sequential net;
            net.emplace<Reshape>(std::vector<std::int64_t>{-1, i64(t_in), i64(n_cells * n_beams)});
            for (std::size_t l = 0; l < L; ++l) net.emplace<Lstm>(l == 0 ? n_cells * n_beams : H, H, l + 1 < L);
            net.emplace<Dense>(H, n_cells);
            net.emplace<Activation>(ActivationKind::sigmoid);
            nets.push_back(std::move(net));
        }
    } else {
        throw ValidationError(to_string(id) + " is not a cell-level predictor");
    }
    return nets;
}

nn::Sequential csai_bridge(const nn::Sequential& convlstm, const SetB& set_b, std::size_t n_beams,
                           const MinMax& input_norm) {
    if (set_b.kind != SetBKind::subset_of_a && set_b.kind != SetBKind::full)
        throw ValidationError("csai bridge needs a selection Set B");
    nn::Sequential net;
    auto& lc = net.emplace<nn::LinearCompression>(n_beams, set_b.indices.size(), input_norm.lo, input_norm.hi);
    lc.set_matrix(CompressionMatrix::selection(set_b.indices, n_beams, false));
    lc.set_trainable(false);
    for (std::size_t i = 0; i < convlstm.size(); ++i) net.add(convlstm.layer(i).clone());
    return net;
}

json Predictor::meta() const {
    json j{{"predictor", to_string(id)},
           {"full_scale", arch.full_scale},
           {"normalization", {{"input_db", input_norm.to_json()}, {"output_db", output_norm.to_json()}}},
           {"n_beams", n_beams},
           {"n_cells", n_cells},
           {"t_in", t_in},
           {"t_out", t_out}};
    if (is_beam_level(id))
        j["set_b"] = {{"kind", to_string(set_b.kind)},
                      {"indices", set_b.indices},
                      {"set_a_size", set_b.set_a_size},
                      {"measurement_count", set_b.measurement_count}};
    else {
        j["variant"] = to_string(variant);
        j["normalization"]["residual_db"] = residual_norm.to_json();
    }
    return j;
}

Predictor make_beam_predictor(PredictorId id, const BeamDataset& ds, const ArchConfig& arch, std::uint64_t seed) {
    if (!is_beam_level(id)) throw ValidationError(to_string(id) + " is a cell-level predictor");
    Predictor p;
    p.id = id;
    p.arch = arch;
    p.input_norm = ds.input_norm;
    p.output_norm = ds.output_norm;
    p.set_b = ds.set_b;
    p.n_beams = ds.n_beams;
    p.t_in = ds.t_in();
    p.t_out = 1;
    if (!is_trainable(id)) return p;
    nn::Sequential net = build_beam_network(id, ds.n_beams, ds.m(), ds.t_in(), arch, ds.input_norm);
    net.init(derive_seed(seed, 11));
    if (id == PredictorId::csai) {
        auto& lc = static_cast<nn::LinearCompression&>(net.layer(0));
        lc.set_matrix(CompressionMatrix::selection(ds.set_b.indices, ds.n_beams, true));
    }
    p.networks.push_back(std::move(net));
    return p;
}

Predictor make_cell_predictor(PredictorId id, const CellDataset& ds, const ArchConfig& arch, std::uint64_t seed) {
    Predictor p;
    p.id = id;
    p.arch = arch;
    p.input_norm = ds.input_norm;
    p.output_norm = ds.output_norm;
    p.n_beams = ds.n_beams;
    p.n_cells = ds.n_cells;
    p.t_in = ds.config.t_in;
    p.t_out = ds.config.t_out;
    p.variant = ds.config.variant;
    const Tensor anchor = cell_anchor_dbm(ds.input_norm, ds.train.x);
    std::vector<double> res(ds.train.y_dbm.size());
    const std::size_t C = ds.n_cells, TO = p.t_out;
    for (std::size_t k = 0; k < res.size(); ++k) res[k] = ds.train.y_dbm[k] - anchor[(k / (TO * C)) * C + k % C];
    p.residual_norm = MinMax::fit(res);
    p.networks = build_cell_networks(id, ds.n_cells, ds.n_beams, p.t_in, p.t_out, arch);
    for (std::size_t k = 0; k < p.networks.size(); ++k) p.networks[k].init(derive_seed(seed, 20 + k));
    return p;
}

Tensor cell_anchor_dbm(const MinMax& input_norm, const Tensor& x) {
    if (x.rank() != 4) throw ValidationError("cell input must be [n, T, C, B], got " + nn::shape_str(x.shape()));
    const std::size_t n = x.dim(0), T = x.dim(1), C = x.dim(2), B = x.dim(3);
    const double floor_n = input_norm.scale(kRsrpFloorDbm);
    Tensor out({n, C});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < C; ++c) {
            double best = floor_n;
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t t = T; t-- > 0;) {
                    const double v = x[((i * T + t) * C + c) * B + b];
                    if (v > floor_n) {
                        best = std::max(best, v);
                        break;
                    }
                }
            out[i * C + c] = best <= floor_n ? kRsrpFloorDbm : input_norm.unscale(best);
        }
    return out;
}

Tensor cell_targets(const Predictor& p, const CellSplit& s) {
    const Tensor anchor = cell_anchor_dbm(p.input_norm, s.x);
    const std::size_t C = p.n_cells, TO = p.t_out;
    if (s.y_dbm.rank() != 3 || s.y_dbm.dim(1) != TO || s.y_dbm.dim(2) != C)
        throw ValidationError("cell targets must be [n, " + std::to_string(TO) + ", " + std::to_string(C) + "]");
    Tensor y(s.y_dbm.shape());
    for (std::size_t k = 0; k < y.size(); ++k)
        y[k] = p.residual_norm.scale(s.y_dbm[k] - anchor[(k / (TO * C)) * C + k % C]);
    return y;
}

const Tensor& beam_input(const Predictor& p, const BeamSplit& s) { return p.id == PredictorId::csai ? s.h : s.x; }

Tensor predict_beam_rsrp(const Predictor& p, const Tensor& input) {
    if (!is_beam_level(p.id) || !is_trainable(p.id))
        throw ValidationError(to_string(p.id) + " does not output per-beam RSRP");
    const std::size_t feat = p.id == PredictorId::csai ? 2 * p.n_beams : p.set_b.indices.size();
    if (input.rank() != 3 || input.dim(1) != p.t_in || input.dim(2) != feat)
        throw ValidationError("beam predictor input must be [n, " + std::to_string(p.t_in) + ", " +
                              std::to_string(feat) + "], got " + nn::shape_str(input.shape()));
    return forward_chunked(p.networks.at(0), input);
}

std::size_t predict_nonai(const std::vector<double>& measured_dbm, const SetB& set_b) {
    if (measured_dbm.empty()) throw ValidationError("predict_nonai: empty measurement");
    if (measured_dbm.size() != set_b.indices.size())
        throw ValidationError("predict_nonai: measurement count does not match Set B");
    const auto it = std::max_element(measured_dbm.begin(), measured_dbm.end());
    return set_b.indices[static_cast<std::size_t>(it - measured_dbm.begin())];
}

std::vector<std::size_t> predict_best_beams(const Predictor& p, const BeamSplit& s) {
    std::vector<std::size_t> out(s.n);
    if (p.id == PredictorId::nonai_best_measured) {
        const std::size_t last = s.h.dim(1) - 1;
        for (std::size_t i = 0; i < s.n; ++i) out[i] = predict_nonai(measured_dbm(s, p.set_b, i, last), p.set_b);
        return out;
    }
    const Tensor y = predict_beam_rsrp(p, beam_input(p, s));
    const std::size_t B = y.dim(1);
    for (std::size_t i = 0; i < s.n; ++i) {
        const double* row = y.data() + i * B;
        out[i] = static_cast<std::size_t>(std::max_element(row, row + B) - row);
    }
    return out;
}

Tensor predict_cell_l3(const Predictor& p, const Tensor& x, CellVariant variant) {
    if (is_beam_level(p.id)) throw ValidationError(to_string(p.id) + " is not a cell-level predictor");
    if (variant != p.variant)
        throw ValidationError("variant mismatch: model trained on " + to_string(p.variant) + ", input is " +
                              to_string(variant));
    if (x.rank() != 4 || x.dim(1) != p.t_in || x.dim(2) != p.n_cells || x.dim(3) != p.n_beams)
        throw ValidationError("cell predictor input must be [n, " + std::to_string(p.t_in) + ", " +
                              std::to_string(p.n_cells) + ", " + std::to_string(p.n_beams) + "], got " +
                              nn::shape_str(x.shape()));
    const std::size_t n = x.dim(0), C = p.n_cells, TO = p.t_out;
    Tensor out({n, TO, C});
    const Tensor anchor = cell_anchor_dbm(p.input_norm, x);
    if (p.id == PredictorId::cell_cnn) {
        const Tensor y = forward_chunked(p.networks.at(0), x);
        for (std::size_t k = 0; k < y.size(); ++k) out[k] = p.residual_norm.unscale(y[k]);
    } else {
        if (p.networks.size() != TO) throw InvariantError("cell_lstm needs one network per horizon");
        for (std::size_t h = 0; h < TO; ++h) {
            const Tensor y = forward_chunked(p.networks[h], x);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < C; ++c) out[(i * TO + h) * C + c] = p.residual_norm.unscale(y[i * C + c]);
        }
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += anchor[(k / (TO * C)) * C + k % C];
    return out;
}

void save_predictor(const std::string& path, const Predictor& p) {
    std::vector<const nn::Sequential*> nets;
    for (const auto& n : p.networks) nets.push_back(&n);
    nn::save_checkpoint(path, nets, p.meta());
}

Predictor load_predictor(const std::string& path) {
    nn::Checkpoint ck = nn::load_checkpoint(path);
    const json& m = ck.meta;
    Predictor p;
    try {
        p.id = predictor_id_from_string(m.at("predictor").get<std::string>());
        p.arch.full_scale = m.value("full_scale", false);
        p.input_norm = MinMax::from_json(m.at("normalization").at("input_db"));
        p.output_norm = MinMax::from_json(m.at("normalization").at("output_db"));
        p.n_beams = m.at("n_beams").get<std::size_t>();
        p.n_cells = m.at("n_cells").get<std::size_t>();
        p.t_in = m.at("t_in").get<std::size_t>();
        p.t_out = m.at("t_out").get<std::size_t>();
        if (m.contains("set_b")) {
            const json& sb = m.at("set_b");
            p.set_b.kind = set_b_kind_from_string(sb.at("kind").get<std::string>());
            p.set_b.indices = sb.at("indices").get<std::vector<std::size_t>>();
            p.set_b.set_a_size = sb.at("set_a_size").get<std::size_t>();
            p.set_b.measurement_count = sb.at("measurement_count").get<std::size_t>();
        }
        if (m.contains("variant")) {
            p.variant = cell_variant_from_string(m.at("variant").get<std::string>());
            p.residual_norm = MinMax::from_json(m.at("normalization").at("residual_db"));
        }
    } catch (const json::exception& e) {
        throw InvariantError("checkpoint " + path + " has malformed metadata: " + e.what());
    }
    p.networks = std::move(ck.networks);
    return p;
}

} // namespace railbeam
