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


#include "nn/model.hpp"

#include <atomic>
#include <random>

#include "common.hpp"

namespace railbeam::nn {

namespace {
std::atomic<std::uint64_t> g_version{0};
std::uint64_t next_version() { return ++g_version; }
} // namespace

Sequential::Sequential() : version_(next_version()) {}

Sequential::Sequential(const Sequential& other) : version_(next_version()) {
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
    if (this != &other) {
        layers_.clear();
        for (const auto& l : other.layers_) layers_.push_back(l->clone());
        touch();
    }
    return *this;
}

Layer& Sequential::add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    touch();
    return *layers_.back();
}

Layer& Sequential::layer(std::size_t i) {
    touch();
    return *layers_.at(i);
}

void Sequential::touch() { version_ = next_version(); }

std::vector<Tensor*> Sequential::params() {
    touch();
    std::vector<Tensor*> out;
    for (auto& l : layers_)
        for (Tensor& p : l->params()) out.push_back(&p);
    return out;
}

std::vector<const Tensor*> Sequential::params() const {
    std::vector<const Tensor*> out;
    for (const auto& l : layers_)
        for (const Tensor& p : l->params()) out.push_back(&p);
    return out;
}

std::size_t Sequential::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* p : params()) n += p->size();
    return n;
}

Shape Sequential::output_shape(const Shape& input) const {
    Shape s = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        try {
            s = layers_[i]->output_shape(s);
        } catch (const ValidationError& e) {
            throw ValidationError("layer " + std::to_string(i) + " (" + to_string(layers_[i]->kind()) +
                                  "): " + e.what());
        }
    }
    return s;
}

Tensor Sequential::forward(const Tensor& x) const {
    output_shape(x.shape());
    Tensor cur = x;
    for (const auto& l : layers_) cur = l->forward(cur, nullptr);
    return cur;
}

Tensor Sequential::forward(const Tensor& x, ForwardCache& cache) const {
    output_shape(x.shape());
    cache.layers.assign(layers_.size(), LayerCache{});
    cache.owner = this;
    cache.version = version_;
    Tensor cur = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) cur = layers_[i]->forward(cur, &cache.layers[i]);
    return cur;
}

Gradients Sequential::zero_gradients() const {
    Gradients g;
    for (const Tensor* p : params()) g.emplace_back(p->shape());
    return g;
}

Gradients Sequential::backward(const ForwardCache& cache, const Tensor& loss_grad) const {
    if (cache.owner != this || cache.version != version_ || cache.layers.size() != layers_.size())
        throw RuntimeError("stale forward cache: parameters changed since the forward pass");
    Gradients grads = zero_gradients();
    std::vector<std::size_t> offset(layers_.size() + 1, 0);
    for (std::size_t i = 0; i < layers_.size(); ++i) offset[i + 1] = offset[i] + layers_[i]->params().size();
    Tensor g = loss_grad;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        std::span<Tensor> pg(grads.data() + offset[i], offset[i + 1] - offset[i]);
        g = layers_[i]->backward(g, cache.layers[i], pg);
    }
    return grads;
}

std::uint64_t Sequential::kink_signature(const ForwardCache& cache) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h ^= layers_[i]->kink_signature(cache.layers[i]);
        h *= 1099511628211ULL;
    }
    return h;
}

void Sequential::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& l : layers_) l->init(rng);
    touch();
}

nlohmann::json Sequential::describe() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& l : layers_) out.push_back({{"kind", to_string(l->kind())}, {"hyper", l->hyper()}});
    return out;
}

Sequential Sequential::from_description(const nlohmann::json& layers) {
    Sequential m;
    for (const auto& d : layers)
        m.add(make_layer(layer_kind_from_string(d.at("kind").get<std::string>()), d.at("hyper")));
    return m;
}

LossValue mse(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw ValidationError("mse: prediction " + shape_str(pred.shape()) + " vs target " +
                              shape_str(target.shape()));
    LossValue out{0.0, Tensor(pred.shape())};
    const double n = static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        out.value += d * d;
        out.grad[i] = 2.0 * d / n;
    }
    out.value /= n;
    return out;
}

} // namespace railbeam::nn
