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


#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "codebook.hpp"
#include "common.hpp"
#include "json.hpp"

namespace railbeam {

/// m x |Set A| complex matrix applied to the beam-domain channel. Doubles as
/// the parameter of the learnable compression layer.
class CompressionMatrix {
public:
    CompressionMatrix() = default;
    CompressionMatrix(std::size_t rows, std::size_t cols, bool learnable);

    /// One 1 per row at the given Set A index, zeros elsewhere.
    static CompressionMatrix selection(std::span<const std::size_t> indices, std::size_t cols,
                                       bool learnable = true);
    /// Complex Gaussian rows scaled to unit norm.
    static CompressionMatrix random(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                    bool learnable = true);
    /// Each row sums a 2x2 block of neighbouring narrow beams (weights 1/2).
    static CompressionMatrix wide_beam(const Codebook& cb);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool learnable() const { return learnable_; }
    cplx at(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
    cplx& at(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
    std::span<const cplx> entries() const { return entries_; }
    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    bool learnable_ = false;
    std::vector<cplx> entries_;
};

/// Gathers the Set B entries of a per-beam RSRP vector, order preserved.
std::vector<double> downsample_measure(std::span<const double> l1_rsrp, const SetB& set_b);

/// y = M h.
std::vector<cplx> cs_measure(std::span<const cplx> beam_coeffs, const CompressionMatrix& m);

/// Received power of each measurement in dBm (coefficients in sqrt(mW)).
std::vector<double> measurement_power_dbm(std::span<const cplx> y, double floor = kRsrpFloorDbm);

enum class L3Aggregation { max, mean };
enum class L3Filter { ema, window_mean };

struct L3Config {
    L3Aggregation aggregation = L3Aggregation::max;
    L3Filter filter = L3Filter::ema;
    double alpha = 0.5;      ///< EMA weight of the newest sample, dB domain
    std::size_t window = 4;  ///< window_mean length in measurement instances
};

L3Config l3_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const L3Config& c);

/// Cell-level filtered RSRP for every cell.
class L3State {
public:
    L3State() = default;
    L3State(std::size_t n_cells, L3Config cfg);

    /// One measurement instance: `l1` holds n_cells rows of `beams` values.
    void update(std::span<const double> l1, std::size_t beams);
    void update(const std::vector<std::vector<double>>& per_cell);

    bool cold() const { return cold_; }
    const std::vector<double>& filtered() const { return filtered_; }
    const L3Config& config() const { return cfg_; }

private:
    void absorb(const std::vector<double>& instant);

    L3Config cfg_;
    bool cold_ = true;
    std::vector<double> filtered_;
    std::deque<std::vector<double>> history_;
};

/// Functional form of L3State::update.
L3State l3_update(L3State state, const std::vector<std::vector<double>>& per_cell);

/// Aggregate one cell's beams according to the configured mode.
double aggregate_beams(std::span<const double> beams, L3Aggregation mode);

struct NoiseConfig {
    bool enabled = false;
    double sigma_db = 1.0;
};

NoiseConfig noise_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NoiseConfig& c);

/// Log-normal perturbation of measured RSRP; floor entries stay at the floor.
void apply_rsrp_noise(std::span<double> dbm, const NoiseConfig& cfg, std::mt19937_64& rng,
                      double floor = kRsrpFloorDbm);

/// Same perturbation applied to complex amplitudes (power scales by 10^(n/10)).
void apply_coefficient_noise(std::span<cplx> coeffs, const NoiseConfig& cfg, std::mt19937_64& rng);

} // namespace railbeam
