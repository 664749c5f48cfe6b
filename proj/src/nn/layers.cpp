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


#include "nn/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "common.hpp"

namespace railbeam::nn {

using nlohmann::json;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using CMapM = Eigen::Map<const RowMat>;
using MapV = Eigen::Map<Eigen::RowVectorXd>;
using CMapV = Eigen::Map<const Eigen::RowVectorXd>;
using Strided = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using CStrided = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

namespace {

std::string shape_error(const char* layer, const std::string& expected, const Shape& got) {
    return std::string(layer) + ": expected input " + expected + ", got " + shape_str(got);
}

void glorot(Tensor& w, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (double& v : w.values()) v = u(rng);
}

std::uint64_t hash_bits(const std::vector<bool>& bits) {
    std::uint64_t h = 1469598103934665603ULL;
    for (bool b : bits) {
        h ^= b ? 0x9eu : 0x35u;
        h *= 1099511628211ULL;
    }
    return h;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace

std::string to_string(LayerKind k) {
    switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::lstm: return "lstm";
    case LayerKind::activation: return "activation";
    case LayerKind::linear_compression: return "linear_compression";
    case LayerKind::reshape: return "reshape";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
    for (auto k : {LayerKind::dense, LayerKind::conv2d, LayerKind::maxpool, LayerKind::lstm,
                   LayerKind::activation, LayerKind::linear_compression, LayerKind::reshape})
        if (to_string(k) == s) return k;
    throw ValidationError("unknown layer kind '" + s + "'");
}

// ---------------------------------------------------------------- dense

Dense::Dense(std::size_t in, std::size_t out) : in_(in), out_(out) {
    if (in == 0 || out == 0) throw ValidationError("dense: sizes must be >= 1");
    params_ = {Tensor({out, in}), Tensor({out})};
}

json Dense::hyper() const { return {{"in", in_}, {"out", out_}}; }

Shape Dense::output_shape(const Shape& in) const {
    if (in.size() != 2 || in[1] != in_) throw ValidationError(shape_error("dense", "[B, " + std::to_string(in_) + "]", in));
    return {in[0], out_};
}

Tensor Dense::forward(const Tensor& x, LayerCache* cache) const {
    const Shape os = output_shape(x.shape());
    Tensor y(os);
    CMapM X(x.data(), static_cast<Eigen::Index>(os[0]), static_cast<Eigen::Index>(in_));
    CMapM W(params_[0].data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
    CMapV b(params_[1].data(), static_cast<Eigen::Index>(out_));
    MapM Y(y.data(), static_cast<Eigen::Index>(os[0]), static_cast<Eigen::Index>(out_));
    Y.noalias() = X * W.transpose();
    Y.rowwise() += b;
    if (cache) cache->t = {x};
    return y;
}

Tensor Dense::backward(const Tensor& g, const LayerCache& cache, std::span<Tensor> grads) const {
    const Tensor& x = cache.t.at(0);
    const auto B = static_cast<Eigen::Index>(x.dim(0));
    const auto I = static_cast<Eigen::Index>(in_), O = static_cast<Eigen::Index>(out_);
    CMapM X(x.data(), B, I);
    CMapM G(g.data(), B, O);
    CMapM W(params_[0].data(), O, I);
    MapM dW(grads[0].data(), O, I);
    MapV db(grads[1].data(), O);
    dW.noalias() += G.transpose() * X;
    db += G.colwise().sum();
    Tensor dx(x.shape());
    MapM dX(dx.data(), B, I);
    dX.noalias() = G * W;
    return dx;
}

void Dense::init(std::mt19937_64& rng) {
    glorot(params_[0], in_, out_, rng);
    params_[1].fill(0.0);
}

// ---------------------------------------------------------------- conv2d

Conv2d::Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw, Padding pad)
    : in_ch_(in_ch), out_ch_(out_ch), kh_(kh), kw_(kw), pad_(pad) {
    if (!in_ch || !out_ch || !kh || !kw) throw ValidationError("conv2d: sizes must be >= 1");
    params_ = {Tensor({out_ch, in_ch, kh, kw}), Tensor({out_ch})};
}

json Conv2d::hyper() const {
    return {{"in_channels", in_ch_}, {"out_channels", out_ch_}, {"kernel_h", kh_}, {"kernel_w", kw_},
            {"padding", pad_ == Padding::same ? "same" : "valid"}};
}

Shape Conv2d::output_shape(const Shape& in) const {
    if (in.size() != 4 || in[1] != in_ch_)
        throw ValidationError(shape_error("conv2d", "[B, " + std::to_string(in_ch_) + ", H, W]", in));
    if (pad_ == Padding::same) return {in[0], out_ch_, in[2], in[3]};
    if (in[2] < kh_ || in[3] < kw_) throw ValidationError(shape_error("conv2d", "spatial size >= kernel", in));
    return {in[0], out_ch_, in[2] - kh_ + 1, in[3] - kw_ + 1};
}

void Conv2d::im2col(const double* x, std::size_t h, std::size_t w, double* col) const {
    const std::ptrdiff_t pt = pad_ == Padding::same ? static_cast<std::ptrdiff_t>((kh_ - 1) / 2) : 0;
    const std::ptrdiff_t pl = pad_ == Padding::same ? static_cast<std::ptrdiff_t>((kw_ - 1) / 2) : 0;
    const std::size_t ho = pad_ == Padding::same ? h : h - kh_ + 1;
    const std::size_t wo = pad_ == Padding::same ? w : w - kw_ + 1;
    const std::size_t P = ho * wo;
    for (std::size_t c = 0; c < in_ch_; ++c)
        for (std::size_t i = 0; i < kh_; ++i)
            for (std::size_t j = 0; j < kw_; ++j) {
                double* row = col + ((c * kh_ + i) * kw_ + j) * P;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + i) - pt;
                    for (std::size_t ox = 0; ox < wo; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + j) - pl;
                        const bool in = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(h) &&
                                        ix < static_cast<std::ptrdiff_t>(w);
                        row[oy * wo + ox] =
                            in ? x[(c * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)] : 0.0;
                    }
                }
            }
}

void Conv2d::col2im(const double* col, std::size_t h, std::size_t w, double* dx) const {
    const std::ptrdiff_t pt = pad_ == Padding::same ? static_cast<std::ptrdiff_t>((kh_ - 1) / 2) : 0;
    const std::ptrdiff_t pl = pad_ == Padding::same ? static_cast<std::ptrdiff_t>((kw_ - 1) / 2) : 0;
    const std::size_t ho = pad_ == Padding::same ? h : h - kh_ + 1;
    const std::size_t wo = pad_ == Padding::same ? w : w - kw_ + 1;
    const std::size_t P = ho * wo;
    for (std::size_t c = 0; c < in_ch_; ++c)
        for (std::size_t i = 0; i < kh_; ++i)
            for (std::size_t j = 0; j < kw_; ++j) {
                const double* row = col + ((c * kh_ + i) * kw_ + j) * P;
                for (std::size_t oy = 0; oy < ho; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + i) - pt;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    for (std::size_t ox = 0; ox < wo; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + j) - pl;
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                        dx[(c * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)] +=
                            row[oy * wo + ox];
                    }
                }
            }
}

Tensor Conv2d::forward(const Tensor& x, LayerCache* cache) const {
    const Shape os = output_shape(x.shape());
    const std::size_t B = os[0], h = x.dim(2), w = x.dim(3);
    const auto K = static_cast<Eigen::Index>(in_ch_ * kh_ * kw_);
    const auto P = static_cast<Eigen::Index>(os[2] * os[3]);
    const auto O = static_cast<Eigen::Index>(out_ch_);
    Tensor y(os);
    RowMat col(K, P);
    CMapM W(params_[0].data(), O, K);
    Eigen::Map<const Eigen::VectorXd> b(params_[1].data(), O);
    for (std::size_t n = 0; n < B; ++n) {
        im2col(x.data() + n * in_ch_ * h * w, h, w, col.data());
        MapM Y(y.data() + n * out_ch_ * static_cast<std::size_t>(P), O, P);
        Y.noalias() = W * col;
        Y.colwise() += b;
    }
    if (cache) cache->t = {x};
    return y;
}

Tensor Conv2d::backward(const Tensor& g, const LayerCache& cache, std::span<Tensor> grads) const {
    const Tensor& x = cache.t.at(0);
    const std::size_t B = x.dim(0), h = x.dim(2), w = x.dim(3);
    const auto K = static_cast<Eigen::Index>(in_ch_ * kh_ * kw_);
    const auto P = static_cast<Eigen::Index>(g.dim(2) * g.dim(3));
    const auto O = static_cast<Eigen::Index>(out_ch_);
    CMapM W(params_[0].data(), O, K);
    MapM dW(grads[0].data(), O, K);
    Eigen::Map<Eigen::VectorXd> db(grads[1].data(), O);
    Tensor dx(x.shape());
    RowMat col(K, P), dcol(K, P);
    for (std::size_t n = 0; n < B; ++n) {
        im2col(x.data() + n * in_ch_ * h * w, h, w, col.data());
        CMapM G(g.data() + n * out_ch_ * static_cast<std::size_t>(P), O, P);
        dW.noalias() += G * col.transpose();
        db += G.rowwise().sum();
        dcol.noalias() = W.transpose() * G;
        col2im(dcol.data(), h, w, dx.data() + n * in_ch_ * h * w);
    }
    return dx;
}

void Conv2d::init(std::mt19937_64& rng) {
    glorot(params_[0], in_ch_ * kh_ * kw_, out_ch_ * kh_ * kw_, rng);
    params_[1].fill(0.0);
}

// ---------------------------------------------------------------- maxpool

MaxPool::MaxPool(std::size_t pool_h, std::size_t pool_w) : ph_(pool_h), pw_(pool_w) {
    if (pool_h == 0 || pool_w == 0) throw ValidationError("maxpool: pool size must be >= 1");
}

json MaxPool::hyper() const { return {{"pool_h", ph_}, {"pool_w", pw_}}; }

Shape MaxPool::output_shape(const Shape& in) const {
    if (in.size() != 4 || in[2] < ph_ || in[3] < pw_)
        throw ValidationError(shape_error("maxpool", "[B, C, H >= " + std::to_string(ph_) + ", W >= " +
                                                         std::to_string(pw_) + "]", in));
    return {in[0], in[1], in[2] / ph_, in[3] / pw_};
}

Tensor MaxPool::forward(const Tensor& x, LayerCache* cache) const {
    const Shape os = output_shape(x.shape());
    const std::size_t planes = os[0] * os[1], h = x.dim(2), w = x.dim(3), ho = os[2], wo = os[3];
    Tensor y(os);
    std::vector<std::uint32_t> arg(y.size());
    for (std::size_t p = 0; p < planes; ++p) {
        const double* src = x.data() + p * h * w;
        for (std::size_t oy = 0; oy < ho; ++oy)
            for (std::size_t ox = 0; ox < wo; ++ox) {
                std::size_t best = (oy * ph_) * w + ox * pw_;
                for (std::size_t i = 0; i < ph_; ++i)
                    for (std::size_t j = 0; j < pw_; ++j) {
                        const std::size_t k = (oy * ph_ + i) * w + ox * pw_ + j;
                        if (src[k] > src[best]) best = k;
                    }
                const std::size_t o = (p * ho + oy) * wo + ox;
                y[o] = src[best];
                arg[o] = static_cast<std::uint32_t>(p * h * w + best);
            }
    }
    if (cache) {
        cache->in_shape = x.shape();
        cache->idx = std::move(arg);
    }
    return y;
}

Tensor MaxPool::backward(const Tensor& g, const LayerCache& cache, std::span<Tensor>) const {
    Tensor dx(cache.in_shape);
    for (std::size_t o = 0; o < g.size(); ++o) dx[cache.idx[o]] += g[o];
    return dx;
}

std::uint64_t MaxPool::kink_signature(const LayerCache& cache) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint32_t v : cache.idx) {
        h ^= v;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---------------------------------------------------------------- lstm

Lstm::Lstm(std::size_t in, std::size_t hidden, bool return_sequences)
    : in_(in), hidden_(hidden), return_sequences_(return_sequences) {
    if (!in || !hidden) throw ValidationError("lstm: sizes must be >= 1");
    params_ = {Tensor({4 * hidden, in}), Tensor({4 * hidden, hidden}), Tensor({4 * hidden})};
}

json Lstm::hyper() const {
    return {{"in", in_}, {"hidden", hidden_}, {"return_sequences", return_sequences_}};
}

Shape Lstm::output_shape(const Shape& in) const {
    if (in.size() != 3 || in[2] != in_ || in[1] == 0)
        throw ValidationError(shape_error("lstm", "[B, T >= 1, " + std::to_string(in_) + "]", in));
    if (return_sequences_) return {in[0], in[1], hidden_};
    return {in[0], hidden_};
}

// Cache layout: t[0] input, t[1] gates [T, B, 4H] (post-activation),
// t[2] cell states [T+1, B, H], t[3] hidden states [T+1, B, H], t[4] tanh(c) [T, B, H].
Tensor Lstm::forward(const Tensor& x, LayerCache* cache) const {
    const Shape os = output_shape(x.shape());
    const std::size_t B = x.dim(0), T = x.dim(1), H = hidden_;
    const auto eB = static_cast<Eigen::Index>(B), eH = static_cast<Eigen::Index>(H),
               e4H = static_cast<Eigen::Index>(4 * H), eI = static_cast<Eigen::Index>(in_);
    CMapM Wx(params_[0].data(), e4H, eI);
    CMapM Wh(params_[1].data(), e4H, eH);
    CMapV b(params_[2].data(), e4H);

    RowMat zx(static_cast<Eigen::Index>(B * T), e4H);
    zx.noalias() = CMapM(x.data(), static_cast<Eigen::Index>(B * T), eI) * Wx.transpose();

    Tensor gates({T, B, 4 * H}), cs({T + 1, B, H}), hs({T + 1, B, H}), tc({T, B, H});
    RowMat z(eB, e4H);
    for (std::size_t t = 0; t < T; ++t) {
        CStrided zxt(zx.data() + t * 4 * H, eB, e4H, Eigen::OuterStride<>(static_cast<Eigen::Index>(T * 4 * H)));
        CMapM hprev(hs.data() + t * B * H, eB, eH);
        z.noalias() = hprev * Wh.transpose();
        z += zxt;
        z.rowwise() += b;
        double* gt = gates.data() + t * B * 4 * H;
        const double* cprev = cs.data() + t * B * H;
        double* cnow = cs.data() + (t + 1) * B * H;
        double* hnow = hs.data() + (t + 1) * B * H;
        double* tct = tc.data() + t * B * H;
        for (std::size_t n = 0; n < B; ++n) {
            const double* zr = z.data() + n * 4 * H;
            double* gr = gt + n * 4 * H;
            for (std::size_t k = 0; k < H; ++k) {
                const double ig = sigmoid(zr[k]);
                const double fg = sigmoid(zr[H + k]);
                const double gg = std::tanh(zr[2 * H + k]);
                const double og = sigmoid(zr[3 * H + k]);
                gr[k] = ig;
                gr[H + k] = fg;
                gr[2 * H + k] = gg;
                gr[3 * H + k] = og;
                const double c = fg * cprev[n * H + k] + ig * gg;
                cnow[n * H + k] = c;
                const double th = std::tanh(c);
                tct[n * H + k] = th;
                hnow[n * H + k] = og * th;
            }
        }
    }

    Tensor y(os);
    if (return_sequences_) {
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t n = 0; n < B; ++n)
                std::copy_n(hs.data() + ((t + 1) * B + n) * H, H, y.data() + (n * T + t) * H);
    } else {
        std::copy_n(hs.data() + T * B * H, B * H, y.data());
    }
    if (cache) cache->t = {x, std::move(gates), std::move(cs), std::move(hs), std::move(tc)};
    return y;
}

Tensor Lstm::backward(const Tensor& g, const LayerCache& cache, std::span<Tensor> grads) const {
    const Tensor& x = cache.t.at(0);
    const Tensor& gates = cache.t.at(1);
    const Tensor& cs = cache.t.at(2);
    const Tensor& hs = cache.t.at(3);
    const Tensor& tc = cache.t.at(4);
    const std::size_t B = x.dim(0), T = x.dim(1), H = hidden_;
    const auto eB = static_cast<Eigen::Index>(B), eH = static_cast<Eigen::Index>(H),
               e4H = static_cast<Eigen::Index>(4 * H), eI = static_cast<Eigen::Index>(in_);
    CMapM Wx(params_[0].data(), e4H, eI);
    CMapM Wh(params_[1].data(), e4H, eH);
    MapM dWx(grads[0].data(), e4H, eI);
    MapM dWh(grads[1].data(), e4H, eH);
    MapV db(grads[2].data(), e4H);

    RowMat dz_all(static_cast<Eigen::Index>(B * T), e4H);
    RowMat dh_next = RowMat::Zero(eB, eH), dc_next = RowMat::Zero(eB, eH);
    RowMat dz(eB, e4H);
    for (std::size_t tt = T; tt-- > 0;) {
        const double* gt = gates.data() + tt * B * 4 * H;
        const double* cprev = cs.data() + tt * B * H;
        const double* tct = tc.data() + tt * B * H;
        for (std::size_t n = 0; n < B; ++n) {
            const double* gr = gt + n * 4 * H;
            double* dzr = dz.data() + n * 4 * H;
            for (std::size_t k = 0; k < H; ++k) {
                double dh = dh_next(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
                if (return_sequences_) dh += g[(n * T + tt) * H + k];
                else if (tt == T - 1) dh += g[n * H + k];
                const double ig = gr[k], fg = gr[H + k], gg = gr[2 * H + k], og = gr[3 * H + k];
                const double th = tct[n * H + k];
                const double dc = dh * og * (1.0 - th * th) +
                                  dc_next(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
                dzr[k] = dc * gg * ig * (1.0 - ig);
                dzr[H + k] = dc * cprev[n * H + k] * fg * (1.0 - fg);
                dzr[2 * H + k] = dc * ig * (1.0 - gg * gg);
                dzr[3 * H + k] = dh * th * og * (1.0 - og);
                dc_next(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) = dc * fg;
            }
        }
        CMapM hprev(hs.data() + tt * B * H, eB, eH);
        dWh.noalias() += dz.transpose() * hprev;
        dh_next.noalias() = dz * Wh;
        Strided(dz_all.data() + tt * 4 * H, eB, e4H, Eigen::OuterStride<>(static_cast<Eigen::Index>(T * 4 * H))) = dz;
    }
    CMapM X(x.data(), static_cast<Eigen::Index>(B * T), eI);
    dWx.noalias() += dz_all.transpose() * X;
    db += dz_all.colwise().sum();
    Tensor dx(x.shape());
    MapM(dx.data(), static_cast<Eigen::Index>(B * T), eI).noalias() = dz_all * Wx;
    return dx;
}

void Lstm::init(std::mt19937_64& rng) {
    glorot(params_[0], in_, 4 * hidden_, rng);
    glorot(params_[1], hidden_, 4 * hidden_, rng);
    params_[2].fill(0.0);
    for (std::size_t k = 0; k < hidden_; ++k) params_[2][hidden_ + k] = 1.0;
}

// ---------------------------------------------------------------- activation

json Activation::hyper() const {
    switch (act_) {
    case ActivationKind::relu: return {{"fn", "relu"}};
    case ActivationKind::sigmoid: return {{"fn", "sigmoid"}};
    case ActivationKind::tanh: return {{"fn", "tanh"}};
    }
    return {};
}

Tensor Activation::forward(const Tensor& x, LayerCache* cache) const {
    Tensor y(x.shape());
    const std::size_t n = x.size();
    switch (act_) {
    case ActivationKind::relu:
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
        if (cache) cache->t = {x};
        break;
    case ActivationKind::sigmoid:
        for (std::size_t i = 0; i < n; ++i) y[i] = sigmoid(x[i]);
        if (cache) cache->t = {y};
        break;
    case ActivationKind::tanh:
        for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
        if (cache) cache->t = {y};
        break;
    }
    return y;
}

Tensor Activation::backward(const Tensor& g, const LayerCache& cache, std::span<Tensor>) const {
    const Tensor& c = cache.t.at(0);
    Tensor dx(c.shape());
    const std::size_t n = c.size();
    switch (act_) {
    case ActivationKind::relu:
        for (std::size_t i = 0; i < n; ++i) dx[i] = c[i] > 0.0 ? g[i] : 0.0;
        break;
    case ActivationKind::sigmoid:
        for (std::size_t i = 0; i < n; ++i) dx[i] = g[i] * c[i] * (1.0 - c[i]);
        break;
    case ActivationKind::tanh:
        for (std::size_t i = 0; i < n; ++i) dx[i] = g[i] * (1.0 - c[i] * c[i]);
        break;
    }
    return dx;
}

std::uint64_t Activation::kink_signature(const LayerCache& cache) const {
    if (act_ != ActivationKind::relu) return 0;
    const Tensor& x = cache.t.at(0);
    std::vector<bool> bits(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) bits[i] = x[i] > 0.0;
    return hash_bits(bits);
}

// ---------------------------------------------------------------- linear compression

LinearCompression::LinearCompression(std::size_t n_beams, std::size_t m, double in_min_db,
                                     double in_max_db, double floor_db)
    : n_(n_beams), m_(m), lo_(in_min_db), hi_(in_max_db), floor_(floor_db) {
    if (!n_beams || !m) throw ValidationError("linear_compression: sizes must be >= 1");
    if (!(in_max_db > in_min_db)) throw ValidationError("linear_compression: need in_max_db > in_min_db");
    params_ = {Tensor({m, n_beams, 2})};
}

json LinearCompression::hyper() const {
    return {{"n_beams", n_}, {"m", m_}, {"in_min_db", lo_}, {"in_max_db", hi_}, {"floor_db", floor_},
            {"trainable", trainable_}};
}

Shape LinearCompression::output_shape(const Shape& in) const {
    if (in.size() < 2 || in.back() != 2 * n_)
        throw ValidationError(shape_error("linear_compression", "[..., " + std::to_string(2 * n_) + "]", in));
    Shape out = in;
    out.back() = m_;
    return out;
}

void LinearCompression::set_matrix(const CompressionMatrix& m) {
    if (m.rows() != m_ || m.cols() != n_)
        throw ValidationError("linear_compression: matrix is " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + ", layer expects " + std::to_string(m_) + "x" +
                              std::to_string(n_));
    for (std::size_t r = 0; r < m_; ++r)
        for (std::size_t c = 0; c < n_; ++c) {
            params_[0][(r * n_ + c) * 2] = m.at(r, c).real();
            params_[0][(r * n_ + c) * 2 + 1] = m.at(r, c).imag();
        }
}

CompressionMatrix LinearCompression::matrix() const {
    CompressionMatrix out(m_, n_, trainable_);
    for (std::size_t r = 0; r < m_; ++r)
        for (std::size_t c = 0; c < n_; ++c)
            out.at(r, c) = {params_[0][(r * n_ + c) * 2], params_[0][(r * n_ + c) * 2 + 1]};
    return out;
}

// Cache: t[0] input, t[1] y as [rows, m, 2], t[2] power [rows, m]; idx = clamp mask.
Tensor LinearCompression::forward(const Tensor& x, LayerCache* cache) const {
    const Shape os = output_shape(x.shape());
    const std::size_t rows = x.size() / (2 * n_);
    Tensor y(os);
    Tensor yc({rows, m_, 2}), pw({rows, m_});
    std::vector<std::uint32_t> clamped(rows * m_, 0);
    const double* M = params_[0].data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* h = x.data() + r * 2 * n_;
        for (std::size_t i = 0; i < m_; ++i) {
            const cplx v = [&] {
                cplx acc{0.0, 0.0};
                for (std::size_t j = 0; j < n_; ++j)
                    acc += cplx{M[(i * n_ + j) * 2], M[(i * n_ + j) * 2 + 1]} * cplx{h[2 * j], h[2 * j + 1]};
                return acc;
            }();
            const double p = std::norm(v);
            const double db = power_to_db(p, floor_);
            const std::size_t o = r * m_ + i;
            yc[o * 2] = v.real();
            yc[o * 2 + 1] = v.imag();
            pw[o] = p;
            clamped[o] = !(p > 0.0) || 10.0 * std::log10(p) < floor_;
            y[o] = minmax_scale(db, lo_, hi_);
        }
    }
    if (cache) {
        cache->t = {x, std::move(yc), std::move(pw)};
        cache->idx = std::move(clamped);
    }
    return y;
}

Tensor LinearCompression::backward(const Tensor& g, const LayerCache& cache, std::span<Tensor> grads) const {
    const Tensor& x = cache.t.at(0);
    const Tensor& yc = cache.t.at(1);
    const Tensor& pw = cache.t.at(2);
    const std::size_t rows = x.size() / (2 * n_);
    const double* M = params_[0].data();
    double* dM = grads[0].data();
    Tensor dx(x.shape());
    const double k = 10.0 / (std::numbers::ln10 * (hi_ - lo_));
    for (std::size_t r = 0; r < rows; ++r) {
        const double* h = x.data() + r * 2 * n_;
        double* dh = dx.data() + r * 2 * n_;
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t o = r * m_ + i;
            if (cache.idx[o]) continue;
            const double dp = g[o] * k / pw[o];
            const double gre = dp * 2.0 * yc[o * 2], gim = dp * 2.0 * yc[o * 2 + 1];
            for (std::size_t j = 0; j < n_; ++j) {
                const double mr = M[(i * n_ + j) * 2], mi = M[(i * n_ + j) * 2 + 1];
                const double hr = h[2 * j], hi = h[2 * j + 1];
                if (trainable_) {
                    dM[(i * n_ + j) * 2] += gre * hr + gim * hi;
                    dM[(i * n_ + j) * 2 + 1] += -gre * hi + gim * hr;
                }
                dh[2 * j] += gre * mr + gim * mi;
                dh[2 * j + 1] += -gre * mi + gim * mr;
            }
        }
    }
    return dx;
}

std::uint64_t LinearCompression::kink_signature(const LayerCache& cache) const {
    std::vector<bool> bits(cache.idx.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = cache.idx[i] != 0;
    return hash_bits(bits);
}

// ---------------------------------------------------------------- reshape

Reshape::Reshape(std::vector<std::int64_t> target) : target_(std::move(target)) {
    if (target_.empty()) throw ValidationError("reshape: empty target");
    int wild = 0;
    for (auto d : target_) {
        if (d == -1) ++wild;
        else if (d <= 0) throw ValidationError("reshape: dimensions must be positive or -1");
    }
    if (wild > 1) throw ValidationError("reshape: at most one -1 dimension");
}

json Reshape::hyper() const { return {{"shape", target_}}; }

Shape Reshape::output_shape(const Shape& in) const {
    const std::size_t total = shape_size(in);
    std::size_t known = 1;
    for (auto d : target_)
        if (d > 0) known *= static_cast<std::size_t>(d);
    Shape out;
    for (auto d : target_) {
        if (d > 0) out.push_back(static_cast<std::size_t>(d));
        else {
            if (known == 0 || total % known) throw ValidationError(shape_error("reshape", "compatible size", in));
            out.push_back(total / known);
        }
    }
    if (shape_size(out) != total) throw ValidationError(shape_error("reshape", "compatible size", in));
    return out;
}

Tensor Reshape::forward(const Tensor& x, LayerCache* cache) const {
    Shape os = output_shape(x.shape());
    if (cache) cache->in_shape = x.shape();
    return x.reshaped(std::move(os));
}

Tensor Reshape::backward(const Tensor& g, const LayerCache& cache, std::span<Tensor>) const {
    return g.reshaped(cache.in_shape);
}

// ---------------------------------------------------------------- factory

std::unique_ptr<Layer> make_layer(LayerKind kind, const json& h) {
    try {
        switch (kind) {
        case LayerKind::dense: return std::make_unique<Dense>(h.at("in").get<std::size_t>(), h.at("out").get<std::size_t>());
        case LayerKind::conv2d:
            return std::make_unique<Conv2d>(h.at("in_channels").get<std::size_t>(),
                                            h.at("out_channels").get<std::size_t>(),
                                            h.at("kernel_h").get<std::size_t>(), h.at("kernel_w").get<std::size_t>(),
                                            h.at("padding").get<std::string>() == "valid" ? Padding::valid
                                                                                         : Padding::same);
        case LayerKind::maxpool:
            if (h.contains("pool")) return std::make_unique<MaxPool>(h.at("pool").get<std::size_t>());
            return std::make_unique<MaxPool>(h.at("pool_h").get<std::size_t>(), h.at("pool_w").get<std::size_t>());
        case LayerKind::lstm:
            return std::make_unique<Lstm>(h.at("in").get<std::size_t>(), h.at("hidden").get<std::size_t>(),
                                          h.at("return_sequences").get<bool>());
        case LayerKind::activation: {
            const auto fn = h.at("fn").get<std::string>();
            if (fn == "relu") return std::make_unique<Activation>(ActivationKind::relu);
            if (fn == "sigmoid") return std::make_unique<Activation>(ActivationKind::sigmoid);
            if (fn == "tanh") return std::make_unique<Activation>(ActivationKind::tanh);
            throw ValidationError("unknown activation '" + fn + "'");
        }
        case LayerKind::linear_compression: {
            auto l = std::make_unique<LinearCompression>(
                h.at("n_beams").get<std::size_t>(), h.at("m").get<std::size_t>(), h.at("in_min_db").get<double>(),
                h.at("in_max_db").get<double>(), h.value("floor_db", kRsrpFloorDbm));
            l->set_trainable(h.value("trainable", true));
            return l;
        }
        case LayerKind::reshape: return std::make_unique<Reshape>(h.at("shape").get<std::vector<std::int64_t>>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("layer descriptor for ") + to_string(kind) + ": " + e.what());
    }
    throw ValidationError("unknown layer kind");
}

} // namespace railbeam::nn
