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


#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

#include "nn/layers.hpp"
#include "nn/optim.hpp"
#include "workers.hpp"

namespace railbeam {

using nlohmann::json;
using nn::Tensor;

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    try {
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
        c.lr = j.value("lr", c.lr);
        c.lr_floor = j.value("lr_floor", c.lr_floor);
        c.lr_factor = j.value("lr_factor", c.lr_factor);
        c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("train config: ") + e.what());
    }
    if (c.batch_size == 0 || c.max_epochs == 0) throw ValidationError("batch_size and max_epochs must be >= 1");
    if (!(c.lr > 0.0) || !(c.lr_floor > 0.0) || c.lr_floor > c.lr) throw ValidationError("need 0 < lr_floor <= lr");
    return c;
}

json to_json(const TrainConfig& c) {
    return {{"batch_size", c.batch_size},       {"max_epochs", c.max_epochs}, {"early_stop_patience", c.early_stop_patience},
            {"lr", c.lr},                       {"lr_floor", c.lr_floor},     {"lr_factor", c.lr_factor},
            {"plateau_patience", c.plateau_patience}, {"seed", c.seed}};
}

json TrainResult::to_json() const {
    json h = json::array();
    for (const auto& e : history)
        h.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"lr", e.lr}});
    return {{"best_epoch", best_epoch}, {"best_val_loss", best_val_loss}, {"stop_reason", stop_reason}, {"history", h}};
}

namespace {

constexpr std::size_t kChunk = 32;

Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& order, std::size_t from, std::size_t count) {
    const std::size_t row = t.size() / t.dim(0);
    nn::Shape s = t.shape();
    s[0] = count;
    Tensor out(s);
    for (std::size_t i = 0; i < count; ++i)
        std::copy_n(t.data() + order[from + i] * row, row, out.data() + i * row);
    return out;
}

double eval_loss(const nn::Sequential& net, const Tensor& x, const Tensor& y) {
    const std::size_t n = x.dim(0);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    double sum = 0.0;
    for (std::size_t from = 0; from < n; from += 512) {
        const std::size_t cnt = std::min<std::size_t>(512, n - from);
        const Tensor p = net.forward(gather_rows(x, all, from, cnt));
        const Tensor t = gather_rows(y, all, from, cnt);
        if (p.size() != t.size()) throw ValidationError("prediction/target size mismatch during evaluation");
        for (std::size_t k = 0; k < p.size(); ++k) sum += (p[k] - t[k]) * (p[k] - t[k]);
    }
    return sum / static_cast<double>(y.size());
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

TrainResult train_network(nn::Sequential& net, const Tensor& x_train, const Tensor& y_train, const Tensor& x_val,
                          const Tensor& y_val, const TrainConfig& cfg) {
    if (x_train.rank() == 0 || x_train.dim(0) == 0 || x_train.dim(0) != y_train.dim(0))
        throw ValidationError("training split is empty or inconsistent");
    if (x_val.rank() == 0 || x_val.dim(0) == 0 || x_val.dim(0) != y_val.dim(0))
        throw ValidationError("validation split is empty or inconsistent");
    if (cfg.batch_size == 0 || cfg.max_epochs == 0) throw ValidationError("batch_size and max_epochs must be >= 1");

    const std::size_t n = x_train.dim(0);
    nn::Adam adam({cfg.lr, 0.9, 0.999, 1e-8});
    nn::PlateauSchedule sched(cfg.lr, cfg.lr_floor, cfg.lr_factor, cfg.plateau_patience);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainResult res;
    res.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_params;
    auto snapshot = [&] {
        best_params.clear();
        for (const Tensor* p : std::as_const(net).params()) best_params.push_back(*p);
    };
    snapshot();
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::mt19937_64 rng(derive_seed(cfg.seed, epoch));
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t b0 = 0; b0 < n; b0 += cfg.batch_size) {
            const std::size_t nb = std::min(cfg.batch_size, n - b0);
            const std::size_t n_chunks = (nb + kChunk - 1) / kChunk;
            const std::size_t row_y = y_train.size() / n;
            const double batch_elems = static_cast<double>(nb * row_y);
            std::vector<nn::Gradients> grads(n_chunks);
            std::vector<double> losses(n_chunks);
            parallel_for(
                n_chunks,
                [&](std::size_t c) {
                    const std::size_t from = b0 + c * kChunk, cnt = std::min(kChunk, b0 + nb - from);
                    const Tensor xb = gather_rows(x_train, order, from, cnt);
                    const Tensor yb = gather_rows(y_train, order, from, cnt);
                    nn::ForwardCache cache;
                    const Tensor pred = net.forward(xb, cache);
                    nn::LossValue lv = nn::mse(pred, yb);
                    const double w = static_cast<double>(yb.size()) / batch_elems;
                    for (double& g : lv.grad.values()) g *= w;
                    losses[c] = lv.value * static_cast<double>(yb.size());
                    grads[c] = net.backward(cache, lv.grad);
                },
                cfg.workers);
            double batch_loss = 0.0;
            for (std::size_t c = 0; c < n_chunks; ++c) batch_loss += losses[c];
            for (std::size_t c = 1; c < n_chunks; ++c)
                for (std::size_t k = 0; k < grads[0].size(); ++k)
                    for (std::size_t e = 0; e < grads[0][k].size(); ++e) grads[0][k][e] += grads[c][k][e];
            if (!std::isfinite(batch_loss))
                throw RuntimeError("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(b0 / cfg.batch_size) + ", lr " + fmt(adam.lr()));
            loss_sum += batch_loss;
            loss_count += nb * row_y;
            adam.step(net.params(), grads[0]);
        }
        const double val = eval_loss(net, x_val, y_val);
        if (!std::isfinite(val))
            throw RuntimeError("training diverged: non-finite validation loss at epoch " + std::to_string(epoch));
        res.history.push_back({epoch, loss_sum / static_cast<double>(loss_count), val, adam.lr()});
        if (cfg.verbose)
            std::cerr << "epoch " << epoch << " train " << res.history.back().train_loss << " val " << val << " lr "
                      << adam.lr() << "\n";
        if (val < res.best_val_loss) {
            res.best_val_loss = val;
            res.best_epoch = epoch;
            since_best = 0;
            snapshot();
        } else {
            ++since_best;
        }
        sched.observe(val);
        adam.set_lr(sched.lr());
        if (since_best >= cfg.early_stop_patience) {
            res.stop_reason = "early_stop";
            break;
        }
        if (sched.at_floor()) {
            res.stop_reason = "lr_floor";
            break;
        }
    }
    if (res.stop_reason.empty()) res.stop_reason = "max_epochs";
    auto params = net.params();
    for (std::size_t k = 0; k < params.size(); ++k) *params[k] = best_params[k];
    return res;
}

std::vector<TrainResult> train_predictor(Predictor& p, const BeamDataset& ds, const TrainConfig& cfg) {
    if (!is_beam_level(p.id)) throw ValidationError("beam dataset given to " + to_string(p.id));
    if (!is_trainable(p.id)) return {};
    return {train_network(p.networks.at(0), beam_input(p, ds.train), ds.train.y, beam_input(p, ds.val), ds.val.y, cfg)};
}

std::vector<TrainResult> train_predictor(Predictor& p, const CellDataset& ds, const TrainConfig& cfg) {
    if (is_beam_level(p.id)) throw ValidationError("cell dataset given to " + to_string(p.id));
    if (ds.config.variant != p.variant)
        throw ValidationError("variant mismatch: predictor " + to_string(p.variant) + ", dataset " +
                              to_string(ds.config.variant));
    const Tensor y_train = cell_targets(p, ds.train), y_val = cell_targets(p, ds.val);
    if (p.id == PredictorId::cell_cnn)
        return {train_network(p.networks.at(0), ds.train.x, y_train, ds.val.x, y_val, cfg)};
    auto horizon = [&](const Tensor& y, std::size_t h) {
        const std::size_t n = y.dim(0), TO = y.dim(1), C = y.dim(2);
        Tensor out({n, C});
        for (std::size_t i = 0; i < n; ++i) std::copy_n(y.data() + (i * TO + h) * C, C, out.data() + i * C);
        return out;
    };
    std::vector<TrainResult> out;
    for (std::size_t h = 0; h < p.networks.size(); ++h) {
        TrainConfig c = cfg;
        c.seed = derive_seed(cfg.seed, 50 + h);
        out.push_back(train_network(p.networks[h], ds.train.x, horizon(y_train, h), ds.val.x, horizon(y_val, h), c));
    }
    return out;
}

Predictor csai_from_convlstm(const Predictor& convlstm, const BeamDataset& ds) {
    if (convlstm.id != PredictorId::convlstm_downsampled) throw ValidationError("warm start needs a convlstm predictor");
    Predictor p = convlstm;
    p.id = PredictorId::csai;
    nn::Sequential net = csai_bridge(convlstm.networks.at(0), ds.set_b, ds.n_beams, ds.input_norm);
    auto& lc = static_cast<nn::LinearCompression&>(net.layer(0));
    lc.set_matrix(CompressionMatrix::selection(ds.set_b.indices, ds.n_beams, true));
    lc.set_trainable(true);
    p.networks = {std::move(net)};
    return p;
}

} // namespace railbeam
