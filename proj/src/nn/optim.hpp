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
#include <vector>

#include "nn/model.hpp"

namespace railbeam::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<Tensor*>& params, const Gradients& grads);

    double lr() const { return cfg_.lr; }
    void set_lr(double lr) { cfg_.lr = lr; }
    std::size_t steps() const { return t_; }
    const std::vector<Tensor>& first_moments() const { return m_; }
    const std::vector<Tensor>& second_moments() const { return v_; }

private:
    AdamConfig cfg_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

/// Halves the learning rate after `patience` validation rounds without
/// improvement, never going below `floor`.
class PlateauSchedule {
public:
    PlateauSchedule(double initial = 1e-3, double floor = 1e-8, double factor = 0.5,
                    std::size_t patience = 10);

    /// Feeds one validation loss; returns true when the rate was reduced.
    bool observe(double val_loss);

    double lr() const { return lr_; }
    double best() const { return best_; }
    std::size_t rounds_since_best() const { return wait_; }
    bool at_floor() const { return lr_ <= floor_; }

private:
    double lr_, floor_, factor_;
    std::size_t patience_;
    double best_;
    std::size_t wait_ = 0;
};

} // namespace railbeam::nn
