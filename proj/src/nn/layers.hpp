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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "measurement.hpp"
#include "nn/tensor.hpp"

namespace railbeam::nn {

enum class LayerKind { dense, conv2d, maxpool, lstm, activation, linear_compression, reshape };

std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

/// Whatever a layer's backward pass needs from its forward pass.
struct LayerCache {
    std::vector<Tensor> t;
    std::vector<std::uint32_t> idx;
    Shape in_shape;
};

class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerKind kind() const = 0;
    virtual std::unique_ptr<Layer> clone() const = 0;
    virtual nlohmann::json hyper() const = 0;

    /// Output shape for a given input shape (batch first); throws on mismatch.
    virtual Shape output_shape(const Shape& in) const = 0;

    /// `cache` may be null for inference.
    virtual Tensor forward(const Tensor& x, LayerCache* cache) const = 0;

    /// Adds parameter gradients into `grads` (aligned with params()) and
    /// returns the gradient with respect to the input.
    virtual Tensor backward(const Tensor& grad_out, const LayerCache& cache,
                            std::span<Tensor> grads) const = 0;

    /// Identifies the active piece of a piecewise-smooth layer (ReLU masks,
    /// pooling winners, clamps). Zero for smooth layers.
    virtual std::uint64_t kink_signature(const LayerCache&) const { return 0; }

    virtual void init(std::mt19937_64&) {}

    std::vector<Tensor>& params() { return params_; }
    const std::vector<Tensor>& params() const { return params_; }

protected:
    std::vector<Tensor> params_;
};

/// y = x W^T + b on [B, in].
class Dense final : public Layer {
public:
    Dense(std::size_t in, std::size_t out);
    LayerKind kind() const override { return LayerKind::dense; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
    nlohmann::json hyper() const override;
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const Tensor& g, const LayerCache& cache, std::span<Tensor> grads) const override;
    void init(std::mt19937_64& rng) override;

    std::size_t in() const { return in_; }
    std::size_t out() const { return out_; }
    Tensor& weight() { return params_[0]; }
    Tensor& bias() { return params_[1]; }

private:
    std::size_t in_, out_;
};

enum class Padding { same, valid };

/// Stride-1 2-D convolution on [B, C, H, W].
class Conv2d final : public Layer {
public:
    Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw, Padding pad);
    LayerKind kind() const override { return LayerKind::conv2d; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
    nlohmann::json hyper() const override;
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const Tensor& g, const LayerCache& cache, std::span<Tensor> grads) const override;
    void init(std::mt19937_64& rng) override;

    Tensor& weight() { return params_[0]; }
    Tensor& bias() { return params_[1]; }

private:
    void im2col(const double* x, std::size_t h, std::size_t w, double* col) const;
    void col2im(const double* col, std::size_t h, std::size_t w, double* dx) const;

    std::size_t in_ch_, out_ch_, kh_, kw_;
    Padding pad_;
};

/// Non-overlapping ph x pw max pooling on [B, C, H, W]; ties go to the first element.
class MaxPool final : public Layer {
public:
    explicit MaxPool(std::size_t pool = 2) : MaxPool(pool, pool) {}
    MaxPool(std::size_t pool_h, std::size_t pool_w);
    LayerKind kind() const override { return LayerKind::maxpool; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool>(*this); }
    nlohmann::json hyper() const override;
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const Tensor& g, const LayerCache& cache, std::span<Tensor> grads) const override;
    std::uint64_t kink_signature(const LayerCache& cache) const override;

private:
    std::size_t ph_, pw_;
};

/// LSTM over [B, T, in]; gate order i, f, g, o. Returns [B, T, H] or the
/// last hidden state [B, H].
class Lstm final : public Layer {
public:
    Lstm(std::size_t in, std::size_t hidden, bool return_sequences);
    LayerKind kind() const override { return LayerKind::lstm; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Lstm>(*this); }
    nlohmann::json hyper() const override;
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const Tensor& g, const LayerCache& cache, std::span<Tensor> grads) const override;
    void init(std::mt19937_64& rng) override;

    std::size_t hidden() const { return hidden_; }
    Tensor& input_weight() { return params_[0]; }
    Tensor& recurrent_weight() { return params_[1]; }
    Tensor& bias() { return params_[2]; }

private:
    std::size_t in_, hidden_;
    bool return_sequences_;
};

enum class ActivationKind { relu, sigmoid, tanh };

class Activation final : public Layer {
public:
    explicit Activation(ActivationKind k) : act_(k) {}
    LayerKind kind() const override { return LayerKind::activation; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Activation>(*this); }
    nlohmann::json hyper() const override;
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const Tensor& g, const LayerCache& cache, std::span<Tensor> grads) const override;
    std::uint64_t kink_signature(const LayerCache& cache) const override;

private:
    ActivationKind act_;
};

/// Power-domain features of y = M h. Input holds h as interleaved re/im
/// ([..., 2N]); output is the min-max normalised received power in dB of
/// each of the m measurements ([..., m]). M is stored as [m, N, 2].
class LinearCompression final : public Layer {
public:
    LinearCompression(std::size_t n_beams, std::size_t m, double in_min_db, double in_max_db,
                      double floor_db = kRsrpFloorDbm);
    LayerKind kind() const override { return LayerKind::linear_compression; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<LinearCompression>(*this); }
    nlohmann::json hyper() const override;
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const Tensor& g, const LayerCache& cache, std::span<Tensor> grads) const override;
    std::uint64_t kink_signature(const LayerCache& cache) const override;

    void set_matrix(const CompressionMatrix& m);
    CompressionMatrix matrix() const;
    bool trainable() const { return trainable_; }
    void set_trainable(bool t) { trainable_ = t; }

private:
    std::size_t n_, m_;
    double lo_, hi_, floor_;
    bool trainable_ = true;
};

/// Reshape of the whole tensor (batch included); one entry may be -1.
class Reshape final : public Layer {
public:
    explicit Reshape(std::vector<std::int64_t> target);
    LayerKind kind() const override { return LayerKind::reshape; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Reshape>(*this); }
    nlohmann::json hyper() const override;
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const Tensor& g, const LayerCache& cache, std::span<Tensor> grads) const override;

private:
    std::vector<std::int64_t> target_;
};

/// Rebuilds a layer from kind and hyper(); parameters start at zero.
std::unique_ptr<Layer> make_layer(LayerKind kind, const nlohmann::json& hyper);

/// Min-max scaling shared by the datasets and the compression layer so both
/// produce bit-identical features.
inline double minmax_scale(double v, double lo, double hi) { return (v - lo) / (hi - lo); }
inline double minmax_unscale(double v, double lo, double hi) { return v * (hi - lo) + lo; }

} // namespace railbeam::nn
