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

#include "datasets.hpp"
#include "json.hpp"
#include "models.hpp"
#include "nn/model.hpp"

namespace railbeam {

struct TrainConfig {
    std::size_t batch_size = 256;
    std::size_t max_epochs = 800;
    std::size_t early_stop_patience = 30; ///< epochs without validation improvement
    double lr = 1e-3;
    double lr_floor = 1e-8;
    double lr_factor = 0.5;
    std::size_t plateau_patience = 10;
    std::uint64_t seed = 1;
    std::size_t workers = 0;
    bool verbose = false;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    std::string stop_reason;
    nlohmann::json to_json() const;
};

/// Mini-batch Adam on MSE with a reduce-on-plateau rate and early stopping.
/// The network is left holding the best-validation parameters. Gradients are
/// summed over fixed 32-sample chunks in order, so the result does not depend
/// on the worker count.
TrainResult train_network(nn::Sequential& net, const nn::Tensor& x_train, const nn::Tensor& y_train,
                          const nn::Tensor& x_val, const nn::Tensor& y_val, const TrainConfig& cfg);

std::vector<TrainResult> train_predictor(Predictor& p, const BeamDataset& ds, const TrainConfig& cfg);
std::vector<TrainResult> train_predictor(Predictor& p, const CellDataset& ds, const TrainConfig& cfg);

/// CSAI initialised from a trained convlstm_downsampled predictor: selection
/// matrix (left trainable) in front of copies of its layers.
Predictor csai_from_convlstm(const Predictor& convlstm, const BeamDataset& ds);

} // namespace railbeam
