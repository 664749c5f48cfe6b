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


#include "nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common.hpp"

namespace railbeam::nn {

void Adam::step(const std::vector<Tensor*>& params, const Gradients& grads) {
    if (params.size() != grads.size())
        throw ValidationError("adam: " + std::to_string(params.size()) + " parameters vs " +
                              std::to_string(grads.size()) + " gradients");
    if (m_.empty()) {
        for (const Tensor* p : params) {
            m_.emplace_back(p->shape());
            v_.emplace_back(p->shape());
        }
    }
    if (m_.size() != params.size()) throw ValidationError("adam: parameter set changed between steps");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& g = grads[k];
        if (p.shape() != g.shape() || p.shape() != m_[k].shape())
            throw ValidationError("adam: shape mismatch at parameter " + std::to_string(k));
        for (std::size_t i = 0; i < p.size(); ++i) {
            m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g[i];
            v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            p[i] -= cfg_.lr * (m_[k][i] / c1) / (std::sqrt(v_[k][i] / c2) + cfg_.eps);
        }
    }
}

PlateauSchedule::PlateauSchedule(double initial, double floor, double factor, std::size_t patience)
    : lr_(initial), floor_(floor), factor_(factor), patience_(patience),
      best_(std::numeric_limits<double>::infinity()) {
    if (!(initial > 0.0) || !(floor > 0.0) || floor > initial) throw ValidationError("schedule: need 0 < floor <= initial");
    if (!(factor > 0.0 && factor < 1.0)) throw ValidationError("schedule: factor must lie in (0, 1)");
    if (patience == 0) throw ValidationError("schedule: patience must be >= 1");
}

bool PlateauSchedule::observe(double val_loss) {
    if (val_loss < best_) {
        best_ = val_loss;
        wait_ = 0;
        return false;
    }
    if (++wait_ < patience_) return false;
    wait_ = 0;
    const double next = std::max(lr_ * factor_, floor_);
    const bool reduced = next < lr_;
    lr_ = next;
    return reduced;
}

} // namespace railbeam::nn
