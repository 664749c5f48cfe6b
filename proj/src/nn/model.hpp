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
#include <memory>
#include <vector>

#include "json.hpp"
#include "nn/layers.hpp"
#include "nn/tensor.hpp"

namespace railbeam::nn {

class Sequential;

/// Activations recorded by a training forward pass. Bound to the model
/// instance and parameter version that produced it.
struct ForwardCache {
    std::vector<LayerCache> layers;
    const Sequential* owner = nullptr;
    std::uint64_t version = 0;
};

/// One gradient tensor per parameter tensor, in params() order.
using Gradients = std::vector<Tensor>;

class Sequential {
public:
    Sequential();
    Sequential(const Sequential& other);
    Sequential& operator=(const Sequential& other);
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    Layer& add(std::unique_ptr<Layer> layer);
    template <class L, class... Args>
    L& emplace(Args&&... args) {
        return static_cast<L&>(add(std::make_unique<L>(std::forward<Args>(args)...)));
    }

    std::size_t size() const { return layers_.size(); }
    Layer& layer(std::size_t i);
    const Layer& layer(std::size_t i) const { return *layers_.at(i); }

    /// Mutable access invalidates outstanding forward caches.
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
    std::size_t parameter_count() const;
    std::uint64_t version() const { return version_; }
    void touch();

    Shape output_shape(const Shape& input) const;

    Tensor forward(const Tensor& x) const;
    Tensor forward(const Tensor& x, ForwardCache& cache) const;
    Gradients backward(const ForwardCache& cache, const Tensor& loss_grad) const;
    Gradients zero_gradients() const;

    /// Signature of every piecewise layer's active piece in `cache`.
    std::uint64_t kink_signature(const ForwardCache& cache) const;

    void init(std::uint64_t seed);

    /// Layer descriptors: [{kind, hyper}, ...].
    nlohmann::json describe() const;
    static Sequential from_description(const nlohmann::json& layers);

private:
    std::vector<std::unique_ptr<Layer>> layers_;
    std::uint64_t version_ = 0;
};

struct LossValue {
    double value = 0.0;
    Tensor grad;
};

/// Mean squared error over all elements.
LossValue mse(const Tensor& pred, const Tensor& target);

} // namespace railbeam::nn
