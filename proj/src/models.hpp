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
#include <string>
#include <vector>

#include "codebook.hpp"
#include "datasets.hpp"
#include "json.hpp"
#include "nn/model.hpp"

namespace railbeam {

enum class PredictorId {
    nonai_best_measured,
    lstm_downsampled,
    cnn_fc_downsampled,
    convlstm_downsampled,
    csai,
    cell_lstm,
    cell_cnn,
};

std::string to_string(PredictorId id);
PredictorId predictor_id_from_string(const std::string& s);
bool is_beam_level(PredictorId id);
bool is_trainable(PredictorId id);

/// Architecture sizes. Desk scale by default; full_scale restores the
/// full-size widths (LSTM 168, conv kernels 12/24/32). probe shrinks every
/// width for gradient checks, where finite differences must resolve the
/// smallest parameter gradients.
struct ArchConfig {
    bool full_scale = false;
    bool probe = false;
    std::size_t lstm_hidden() const { return probe ? 6 : full_scale ? 168 : 64; }
    std::size_t conv1() const { return probe ? 3 : full_scale ? 12 : 8; }
    std::size_t conv2() const { return probe ? 4 : full_scale ? 24 : 16; }
    std::size_t conv3() const { return probe ? 4 : full_scale ? 32 : 16; }
    std::size_t beam_conv() const { return probe ? 2 : 8; }
    std::size_t beam_dense() const { return probe ? 8 : 64; }
    std::size_t cell_dense() const { return probe ? 8 : 128; }
    std::size_t cell_lstm_layers() const { return 4; }
};

/// Most square factorisation ih x iw = m with ih <= iw.
std::pair<std::size_t, std::size_t> grid_shape(std::size_t m);

/// Beam-level network. Input [n, t_in, m] for the downsampled variants,
/// [n, t_in, 2 * n_beams] for csai; output [n, n_beams] in (0, 1).
nn::Sequential build_beam_network(PredictorId id, std::size_t n_beams, std::size_t m, std::size_t t_in,
                                  const ArchConfig& arch, const MinMax& input_norm = {});

/// Cell-level networks on [n, t_in, n_cells, n_beams]. cell_cnn returns one
/// network emitting [n, t_out, n_cells]; cell_lstm returns t_out networks each
/// emitting [n, n_cells].
std::vector<nn::Sequential> build_cell_networks(PredictorId id, std::size_t n_cells, std::size_t n_beams,
                                                std::size_t t_in, std::size_t t_out, const ArchConfig& arch);

/// CSAI network whose compression layer is frozen to the Set B selection and
/// whose remaining layers are copies of a convlstm_downsampled network.
nn::Sequential csai_bridge(const nn::Sequential& convlstm, const SetB& set_b, std::size_t n_beams,
                           const MinMax& input_norm);

/// A trained (or baseline) predictor plus everything needed to feed it.
struct Predictor {
    PredictorId id = PredictorId::nonai_best_measured;
    std::vector<nn::Sequential> networks;
    MinMax input_norm, output_norm;
    SetB set_b;                                   // beam level
    std::size_t n_beams = 0, n_cells = 0;
    std::size_t t_in = 0, t_out = 0;
    CellVariant variant = CellVariant::all_beam_cell; // cell level
    /// Cell networks emit the change relative to each cell's newest measured
    /// best-beam RSRP, scaled by residual_norm.
    MinMax residual_norm;
    ArchConfig arch;
    nlohmann::json meta() const;
};

Predictor make_beam_predictor(PredictorId id, const BeamDataset& ds, const ArchConfig& arch, std::uint64_t seed);
Predictor make_cell_predictor(PredictorId id, const CellDataset& ds, const ArchConfig& arch, std::uint64_t seed);

/// Per-cell anchor in dBm, [n, C]: each beam's newest value above the floor,
/// strongest over beams; the RSRP floor when nothing was measured.
nn::Tensor cell_anchor_dbm(const MinMax& input_norm, const nn::Tensor& x);

/// Normalised training targets of a cell predictor for one split, [n, t_out, C].
nn::Tensor cell_targets(const Predictor& p, const CellSplit& s);

/// The tensor a beam predictor consumes for a split (x, or h for csai).
const nn::Tensor& beam_input(const Predictor& p, const BeamSplit& s);

/// Normalised per-beam RSRP for the target slot, [n, n_beams].
nn::Tensor predict_beam_rsrp(const Predictor& p, const nn::Tensor& input);

/// Predicted best beam per sample; nonai reads the newest measured instance.
std::vector<std::size_t> predict_best_beams(const Predictor& p, const BeamSplit& s);

/// Set B index of the strongest measurement; ties go to the lowest index.
std::size_t predict_nonai(const std::vector<double>& measured_dbm, const SetB& set_b);

/// L3-RSRP in dBm, [n, t_out, n_cells]. Input is the normalised window tensor.
nn::Tensor predict_cell_l3(const Predictor& p, const nn::Tensor& x, CellVariant variant);

void save_predictor(const std::string& path, const Predictor& p);
Predictor load_predictor(const std::string& path);

} // namespace railbeam
