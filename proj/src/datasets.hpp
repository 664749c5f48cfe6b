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
#include <string>
#include <vector>

#include "channel.hpp"
#include "codebook.hpp"
#include "json.hpp"
#include "measurement.hpp"
#include "nn/tensor.hpp"
#include "scenario.hpp"
#include "trace.hpp"

namespace railbeam {

inline constexpr int kDatasetSchemaVersion = 1;

struct MinMax {
    double lo = 0.0;
    double hi = 1.0;
    double scale(double v) const;
    double unscale(double v) const;
    nlohmann::json to_json() const { return {{"min", lo}, {"max", hi}}; }
    static MinMax from_json(const nlohmann::json& j);
    /// Min and max of `values`; widened to a unit span when degenerate.
    static MinMax fit(const std::vector<double>& values);
};

// ---------------------------------------------------------------- beam level

struct BeamDatasetConfig {
    double speed_kmh = 350.0;
    Ratio ratio{1, 16};
    SelectionPattern pattern = SelectionPattern::equidistant;
    std::size_t t_in = 4;    ///< measurement instances per input window
    std::size_t horizon = 1; ///< target instance offset after the last input
    std::size_t n_samples = 10000;
    std::size_t meas_period_slots = 4;
    NoiseConfig noise{true, 1.0};
    std::uint64_t seed = 1;
};

BeamDatasetConfig beam_dataset_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BeamDatasetConfig& c);

struct BeamSplit {
    std::size_t n = 0;
    nn::Tensor h;     ///< [n, T, 2|A|] noisy beam-domain channel of the serving cell, interleaved re/im
    nn::Tensor x;     ///< [n, T, m] normalised downsampled RSRP
    nn::Tensor y;     ///< [n, |A|] normalised true RSRP at the target instance
    nn::Tensor y_dbm; ///< [n, |A|] same in dBm
};

/// Windows over the serving cell (strongest at the last input instance).
/// Samples are drawn from consecutive passes over the track, each with its
/// own run seed; no window crosses a pass boundary.
struct BeamDataset {
    BeamDatasetConfig config;
    std::size_t n_beams = 0;
    SetB set_b;
    MinMax input_norm;  ///< RSRP dB of measured inputs
    MinMax output_norm; ///< RSRP dB of targets
    std::string scenario_hash;
    std::size_t passes = 0;
    BeamSplit train, val, test;

    std::size_t t_in() const { return config.t_in; }
    std::size_t m() const { return set_b.measurement_count; }
    const BeamSplit& split(const std::string& name) const;
    nlohmann::json meta() const;
};

BeamDataset generate_beam_dataset(const ScenarioConfig& scenario, const ChannelConfig& channel,
                                  const BeamDatasetConfig& cfg, std::size_t workers = 0);

/// Measured dBm of the Set B beams at time step t of sample i.
std::vector<double> measured_dbm(const BeamSplit& s, const SetB& set_b, std::size_t i, std::size_t t);

/// Rebuilds the downsampled features from stored channels (same arithmetic
/// as the dataset writer).
nn::Tensor downsampled_features(const nn::Tensor& h, const SetB& set_b, const MinMax& norm);

void write_beam_dataset(const BeamDataset& ds, const std::string& dir);
BeamDataset read_beam_dataset(const std::string& dir);

// ---------------------------------------------------------------- cell level

enum class CellVariant { all_beam_cell, part_cell, part_beam };

std::string to_string(CellVariant v);
CellVariant cell_variant_from_string(const std::string& s);

struct CellDatasetConfig {
    double speed_kmh = 350.0;
    CellVariant variant = CellVariant::all_beam_cell;
    std::size_t t_in = 6;
    std::size_t t_out = 4;
    std::size_t n_samples = 10000;
    TraceConfig trace{4, {true, 1.0}, {}, 1.0};
    std::uint64_t seed = 1;
};

CellDatasetConfig cell_dataset_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CellDatasetConfig& c);

struct CellSplit {
    std::size_t n = 0;
    nn::Tensor x;     ///< [n, t_in, C, B] normalised partial L1-RSRP, unmeasured at the floor
    nn::Tensor y;     ///< [n, t_out, C] normalised L3-RSRP
    nn::Tensor y_dbm; ///< [n, t_out, C]
};

struct CellDataset {
    CellDatasetConfig config;
    std::size_t n_cells = 0;
    std::size_t n_beams = 0;
    MinMax input_norm;
    MinMax output_norm;
    std::string scenario_hash;
    std::size_t passes = 0;
    std::size_t measured_per_window = 0; ///< measured (cell, beam, instance) entries per input window
    CellSplit train, val, test;

    const CellSplit& split(const std::string& name) const;
    nlohmann::json meta() const;
};

/// Whether (cell, beam) is measured at absolute instance k under a variant.
/// Part_Beam measures every other beam of every cell, even beams on even
/// instances and odd beams on odd ones; Part_Cell alternates cells the same way.
bool is_measured(CellVariant v, std::size_t k, std::size_t cell, std::size_t beam);

/// Count of measured entries in a window of `t_in` instances starting at `k0`.
std::size_t measured_count(CellVariant v, std::size_t k0, std::size_t t_in, std::size_t cells,
                           std::size_t beams);

/// Raw (dBm) masked input window ending at instance `last` (inclusive).
std::vector<double> cell_input_window(const MeasurementTrace& t, CellVariant v, std::size_t last,
                                      std::size_t t_in);

CellDataset generate_cell_dataset(const ScenarioConfig& scenario, const ChannelConfig& channel,
                                  const CellDatasetConfig& cfg, std::size_t workers = 0);

void write_cell_dataset(const CellDataset& ds, const std::string& dir);
CellDataset read_cell_dataset(const std::string& dir);

/// Flat little-endian f64 tensor files.
void write_tensor_file(const std::string& path, const nn::Tensor& t);
nn::Tensor read_tensor_file(const std::string& path, const nn::Shape& shape);

} // namespace railbeam
