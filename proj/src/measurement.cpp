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


#include "measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace railbeam {

using nlohmann::json;

CompressionMatrix::CompressionMatrix(std::size_t rows, std::size_t cols, bool learnable)
    : rows_(rows), cols_(cols), learnable_(learnable), entries_(rows * cols, cplx{0.0, 0.0}) {
    if (rows == 0 || cols == 0) throw ValidationError("compression matrix must be non-empty");
}

CompressionMatrix CompressionMatrix::selection(std::span<const std::size_t> indices, std::size_t cols,
                                               bool learnable) {
    CompressionMatrix m(indices.size(), cols, learnable);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= cols) throw ValidationError("selection index out of range");
        m.at(r, indices[r]) = cplx{1.0, 0.0};
    }
    return m;
}

CompressionMatrix CompressionMatrix::random(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                            bool learnable) {
    CompressionMatrix m(rows, cols, learnable);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double norm = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            m.at(r, c) = {g(rng), g(rng)};
            norm += std::norm(m.at(r, c));
        }
        const double s = 1.0 / std::sqrt(norm);
        for (std::size_t c = 0; c < cols; ++c) m.at(r, c) *= s;
    }
    return m;
}

CompressionMatrix CompressionMatrix::wide_beam(const Codebook& cb) {
    const std::size_t nh = cb.horizontal_beams(), nv = cb.vertical_beams();
    const std::size_t gh = nh >= 2 ? 2 : 1, gv = nv >= 2 ? 2 : 1;
    const std::size_t wh = nh / gh, wv = nv / gv;
    CompressionMatrix m(wh * wv, cb.size(), false);
    const double w = 1.0 / std::sqrt(static_cast<double>(gh * gv));
    for (std::size_t a = 0; a < wh; ++a)
        for (std::size_t b = 0; b < wv; ++b)
            for (std::size_t i = 0; i < gh; ++i)
                for (std::size_t j = 0; j < gv; ++j)
                    m.at(a * wv + b, (a * gh + i) * nv + (b * gv + j)) = cplx{w, 0.0};
    return m;
}

bool CompressionMatrix::all_finite() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

std::vector<double> downsample_measure(std::span<const double> l1_rsrp, const SetB& set_b) {
    if (set_b.kind != SetBKind::subset_of_a && set_b.kind != SetBKind::full)
        throw ValidationError("downsampling needs a subset-of-Set-A scheme, got " + to_string(set_b.kind));
    std::vector<double> out;
    out.reserve(set_b.indices.size());
    for (std::size_t idx : set_b.indices) {
        if (idx >= l1_rsrp.size())
            throw ValidationError("Set B index " + std::to_string(idx) + " out of range for " +
                                  std::to_string(l1_rsrp.size()) + " beams");
        out.push_back(l1_rsrp[idx]);
    }
    return out;
}

std::vector<cplx> cs_measure(std::span<const cplx> beam_coeffs, const CompressionMatrix& m) {
    if (beam_coeffs.size() != m.cols())
        throw ValidationError("cs_measure: channel has " + std::to_string(beam_coeffs.size()) +
                              " beams, matrix expects " + std::to_string(m.cols()));
    std::vector<cplx> y(m.rows(), cplx{0.0, 0.0});
    for (std::size_t r = 0; r < m.rows(); ++r) {
        cplx acc{0.0, 0.0};
        for (std::size_t c = 0; c < m.cols(); ++c) acc += m.at(r, c) * beam_coeffs[c];
        y[r] = acc;
    }
    return y;
}

std::vector<double> measurement_power_dbm(std::span<const cplx> y, double floor) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = power_to_db(std::norm(y[i]), floor);
    return out;
}

L3Config l3_config_from_json(const json& j) {
    L3Config c;
    try {
        const std::string agg = j.value("aggregation", std::string("max"));
        if (agg == "max") c.aggregation = L3Aggregation::max;
        else if (agg == "mean") c.aggregation = L3Aggregation::mean;
        else throw ValidationError("unknown L3 aggregation '" + agg + "'");
        const std::string f = j.value("filter", std::string("ema"));
        if (f == "ema") c.filter = L3Filter::ema;
        else if (f == "window_mean") c.filter = L3Filter::window_mean;
        else throw ValidationError("unknown L3 filter '" + f + "'");
        c.alpha = j.value("alpha", c.alpha);
        c.window = j.value("window", c.window);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("l3 config: ") + e.what());
    }
    if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ValidationError("L3 alpha must lie in (0, 1]");
    if (c.window == 0) throw ValidationError("L3 window must be >= 1");
    return c;
}

json to_json(const L3Config& c) {
    return {{"aggregation", c.aggregation == L3Aggregation::max ? "max" : "mean"},
            {"filter", c.filter == L3Filter::ema ? "ema" : "window_mean"},
            {"alpha", c.alpha},
            {"window", c.window}};
}

double aggregate_beams(std::span<const double> beams, L3Aggregation mode) {
    if (beams.empty()) throw ValidationError("L3 update: empty beam vector");
    if (mode == L3Aggregation::max) return *std::max_element(beams.begin(), beams.end());
    return std::accumulate(beams.begin(), beams.end(), 0.0) / static_cast<double>(beams.size());
}

L3State::L3State(std::size_t n_cells, L3Config cfg) : cfg_(cfg), filtered_(n_cells, kRsrpFloorDbm) {}

void L3State::absorb(const std::vector<double>& instant) {
    if (cfg_.filter == L3Filter::window_mean) {
        history_.push_back(instant);
        if (history_.size() > cfg_.window) history_.pop_front();
        for (std::size_t c = 0; c < filtered_.size(); ++c) {
            double s = 0.0;
            for (const auto& h : history_) s += h[c];
            filtered_[c] = s / static_cast<double>(history_.size());
        }
    } else if (cold_) {
        filtered_ = instant;
    } else {
        for (std::size_t c = 0; c < filtered_.size(); ++c)
            filtered_[c] = (1.0 - cfg_.alpha) * filtered_[c] + cfg_.alpha * instant[c];
    }
    cold_ = false;
}

void L3State::update(std::span<const double> l1, std::size_t beams) {
    if (beams == 0) throw ValidationError("L3 update: empty beam vector");
    if (l1.size() != filtered_.size() * beams)
        throw ValidationError("L3 update: expected " + std::to_string(filtered_.size()) + " cells");
    std::vector<double> instant(filtered_.size());
    for (std::size_t c = 0; c < filtered_.size(); ++c)
        instant[c] = aggregate_beams(l1.subspan(c * beams, beams), cfg_.aggregation);
    absorb(instant);
}

void L3State::update(const std::vector<std::vector<double>>& per_cell) {
    if (per_cell.size() != filtered_.size())
        throw ValidationError("L3 update: expected " + std::to_string(filtered_.size()) +
                              " cells, got " + std::to_string(per_cell.size()));
    std::vector<double> instant(filtered_.size());
    for (std::size_t c = 0; c < per_cell.size(); ++c)
        instant[c] = aggregate_beams(per_cell[c], cfg_.aggregation);
    absorb(instant);
}

L3State l3_update(L3State state, const std::vector<std::vector<double>>& per_cell) {
    state.update(per_cell);
    return state;
}

NoiseConfig noise_config_from_json(const json& j) {
    NoiseConfig c;
    c.enabled = j.value("enabled", c.enabled);
    c.sigma_db = j.value("sigma_db", c.sigma_db);
    if (c.sigma_db < 0.0) throw ValidationError("noise sigma_db must be >= 0");
    return c;
}

json to_json(const NoiseConfig& c) { return {{"enabled", c.enabled}, {"sigma_db", c.sigma_db}}; }

void apply_rsrp_noise(std::span<double> dbm, const NoiseConfig& cfg, std::mt19937_64& rng,
                      double floor) {
    if (!cfg.enabled || cfg.sigma_db == 0.0) return;
    std::normal_distribution<double> g(0.0, cfg.sigma_db);
    for (double& v : dbm) {
        const double n = g(rng);
        if (v > floor) v = std::max(floor, v + n);
    }
}

void apply_coefficient_noise(std::span<cplx> coeffs, const NoiseConfig& cfg, std::mt19937_64& rng) {
    if (!cfg.enabled || cfg.sigma_db == 0.0) return;
    std::normal_distribution<double> g(0.0, cfg.sigma_db);
    for (cplx& v : coeffs) v *= std::pow(10.0, g(rng) / 20.0);
}

} // namespace railbeam
