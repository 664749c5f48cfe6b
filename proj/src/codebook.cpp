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


#include "codebook.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace railbeam {

namespace {

/// Spatial frequency of the k-th of n oversampled DFT beams, wrapped to [-0.5, 0.5).
double dft_frequency(std::size_t k, std::size_t n) {
    double u = static_cast<double>(k) / static_cast<double>(n);
    if (u >= 0.5) u -= 1.0;
    return u;
}

std::vector<cplx> dft_vector(std::size_t length, double u) {
    std::vector<cplx> v(length);
    const double norm = 1.0 / std::sqrt(static_cast<double>(length));
    for (std::size_t i = 0; i < length; ++i)
        v[i] = std::polar(norm, 2.0 * std::numbers::pi * u * static_cast<double>(i));
    return v;
}

} // namespace

std::span<const cplx> Codebook::beam(std::size_t b) const {
    if (b >= size()) throw ValidationError("beam index out of range");
    return {beams_.data() + b * element_count(), element_count()};
}

void Codebook::accumulate_projection(const DirectionSines& dir, cplx scale,
                                     std::span<cplx> out) const {
    if (out.size() != size()) throw ValidationError("projection buffer size mismatch");
    const auto ah = axis_response(rows_, spacing_wl_, dir.horizontal);
    const auto av = axis_response(cols_, spacing_wl_, dir.vertical);
    std::vector<cplx> hp(n_h_), vp(n_v_);
    for (std::size_t k = 0; k < n_h_; ++k)
        hp[k] = inner({h_factors_.data() + k * rows_, rows_}, ah);
    for (std::size_t k = 0; k < n_v_; ++k)
        vp[k] = inner({v_factors_.data() + k * cols_, cols_}, av);
    for (std::size_t kh = 0; kh < n_h_; ++kh) {
        const cplx a = scale * hp[kh];
        for (std::size_t kv = 0; kv < n_v_; ++kv) out[kh * n_v_ + kv] += a * vp[kv];
    }
}

nlohmann::json Codebook::labels_json() const {
    nlohmann::json beams = nlohmann::json::array();
    for (std::size_t b = 0; b < size(); ++b) {
        const BeamLabel& l = labels_[b];
        beams.push_back({{"index", b},
                         {"azimuth_deg", l.azimuth_deg},
                         {"elevation_deg", l.elevation_deg},
                         {"visible", l.visible}});
    }
    return {{"rows", rows_},
            {"cols", cols_},
            {"oversampling", oversampling_},
            {"spacing_wl", spacing_wl_},
            {"beam_count", size()},
            {"beams", beams}};
}

Codebook dft_codebook(std::size_t rows, std::size_t cols, std::size_t oversampling,
                      double spacing_wl) {
    if (rows == 0 || cols == 0 || oversampling == 0)
        throw ValidationError("codebook dimensions and oversampling must be >= 1");
    if (!(spacing_wl > 0.0)) throw ValidationError("element spacing must be > 0");
    Codebook cb;
    cb.rows_ = rows;
    cb.cols_ = cols;
    cb.oversampling_ = oversampling;
    cb.spacing_wl_ = spacing_wl;
    // A single-element axis has no spatial frequency to oversample.
    cb.n_h_ = rows > 1 ? rows * oversampling : 1;
    cb.n_v_ = cols > 1 ? cols * oversampling : 1;

    std::vector<double> uh(cb.n_h_), uv(cb.n_v_);
    for (std::size_t k = 0; k < cb.n_h_; ++k) {
        uh[k] = dft_frequency(k, cb.n_h_);
        const auto v = dft_vector(rows, uh[k]);
        cb.h_factors_.insert(cb.h_factors_.end(), v.begin(), v.end());
    }
    for (std::size_t k = 0; k < cb.n_v_; ++k) {
        uv[k] = dft_frequency(k, cb.n_v_);
        const auto v = dft_vector(cols, uv[k]);
        cb.v_factors_.insert(cb.v_factors_.end(), v.begin(), v.end());
    }

    cb.beams_.resize(cb.size() * rows * cols);
    cb.labels_.resize(cb.size());
    for (std::size_t kh = 0; kh < cb.n_h_; ++kh) {
        for (std::size_t kv = 0; kv < cb.n_v_; ++kv) {
            const std::size_t b = kh * cb.n_v_ + kv;
            cplx* w = cb.beams_.data() + b * rows * cols;
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    w[r * cols + c] = cb.h_factors_[kh * rows + r] * cb.v_factors_[kv * cols + c];

            // Steering direction: spacing * sine == spatial frequency on both axes.
            BeamLabel& label = cb.labels_[b];
            const double sv = uv[kv] / spacing_wl;
            if (std::abs(sv) > 1.0) {
                label.visible = false;
                label.elevation_deg = sv > 0 ? 90.0 : -90.0;
                continue;
            }
            const double el = std::asin(sv);
            label.elevation_deg = rad2deg(el);
            const double ce = std::cos(el);
            const double sh = uh[kh] / spacing_wl;
            if (ce < 1e-12 || std::abs(sh) > ce) {
                label.visible = false;
                label.azimuth_deg = sh >= 0 ? 90.0 : -90.0;
                continue;
            }
            label.azimuth_deg = rad2deg(std::asin(sh / ce));
        }
    }
    return cb;
}

cplx inner(std::span<const cplx> w, std::span<const cplx> a) {
    if (w.size() != a.size()) throw ValidationError("inner product length mismatch");
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < w.size(); ++i) acc += std::conj(w[i]) * a[i];
    return acc;
}

std::string Ratio::str() const { return std::to_string(num) + "/" + std::to_string(den); }

Ratio Ratio::parse(const std::string& text) {
    try {
        if (const auto slash = text.find('/'); slash != std::string::npos) {
            Ratio r{std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1))};
            if (r.den <= 0 || r.num < 0) throw ValidationError("bad ratio '" + text + "'");
            const auto g = std::gcd(r.num, r.den);
            if (g > 0) {
                r.num /= g;
                r.den /= g;
            }
            return r;
        }
        const double v = std::stod(text);
        for (std::int64_t den = 1; den <= 4096; ++den) {
            const double num = v * static_cast<double>(den);
            if (std::abs(num - std::round(num)) < 1e-9) {
                Ratio r{static_cast<std::int64_t>(std::llround(num)), den};
                const auto g = std::gcd(r.num, r.den);
                if (g > 0) {
                    r.num /= g;
                    r.den /= g;
                }
                return r;
            }
        }
    } catch (const std::logic_error&) {
    }
    throw ValidationError("cannot parse ratio '" + text + "'");
}

std::string to_string(SetBKind kind) {
    switch (kind) {
    case SetBKind::subset_of_a: return "subset_of_a";
    case SetBKind::wide_beam: return "wide_beam";
    case SetBKind::full: return "full";
    case SetBKind::compressed: return "compressed";
    }
    return "?";
}

SetBKind set_b_kind_from_string(const std::string& s) {
    if (s == "subset_of_a") return SetBKind::subset_of_a;
    if (s == "wide_beam") return SetBKind::wide_beam;
    if (s == "full") return SetBKind::full;
    if (s == "compressed") return SetBKind::compressed;
    throw ValidationError("unknown Set B kind '" + s + "'");
}

SelectionPattern selection_pattern_from_string(const std::string& s) {
    if (s == "equidistant") return SelectionPattern::equidistant;
    if (s == "random") return SelectionPattern::random;
    throw ValidationError("unknown selection pattern '" + s + "'");
}

Ratio SetB::ratio() const {
    Ratio r{static_cast<std::int64_t>(measurement_count), static_cast<std::int64_t>(set_a_size)};
    const auto g = std::gcd(r.num, r.den);
    if (g > 0) {
        r.num /= g;
        r.den /= g;
    }
    return r;
}

namespace {

std::size_t measurement_count_for(std::size_t set_a_size, Ratio ratio) {
    if (set_a_size == 0) throw ValidationError("Set A is empty");
    if (ratio.num <= 0 || ratio.num > ratio.den)
        throw ValidationError("ratio must lie in (0, 1], got " + ratio.str());
    const auto scaled = static_cast<std::int64_t>(set_a_size) * ratio.num;
    if (scaled % ratio.den != 0)
        throw ValidationError("ratio " + ratio.str() + " of " + std::to_string(set_a_size) +
                              " beams is not an integral count");
    return static_cast<std::size_t>(scaled / ratio.den);
}

} // namespace

SetB select_set_b(std::size_t set_a_size, SelectionPattern pattern, Ratio ratio,
                  std::uint64_t seed) {
    const std::size_t m = measurement_count_for(set_a_size, ratio);
    SetB s;
    s.set_a_size = set_a_size;
    s.measurement_count = m;
    s.kind = (m == set_a_size) ? SetBKind::full : SetBKind::subset_of_a;
    if (m == set_a_size || pattern == SelectionPattern::equidistant) {
        s.indices.resize(m);
        for (std::size_t i = 0; i < m; ++i) s.indices[i] = i * set_a_size / m;
    } else {
        std::vector<std::size_t> all(set_a_size);
        std::iota(all.begin(), all.end(), 0);
        std::mt19937_64 rng(seed);
        std::shuffle(all.begin(), all.end(), rng);
        s.indices.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m));
        std::sort(s.indices.begin(), s.indices.end());
    }
    return s;
}

SetB compressed_set_b(std::size_t set_a_size, Ratio ratio) {
    SetB s;
    s.kind = SetBKind::compressed;
    s.set_a_size = set_a_size;
    s.measurement_count = measurement_count_for(set_a_size, ratio);
    return s;
}

SetB wide_beam_set_b(const Codebook& cb) {
    SetB s;
    s.kind = SetBKind::wide_beam;
    s.set_a_size = cb.size();
    const std::size_t wh = cb.horizontal_beams() >= 2 ? cb.horizontal_beams() / 2 : 1;
    const std::size_t wv = cb.vertical_beams() >= 2 ? cb.vertical_beams() / 2 : 1;
    s.measurement_count = wh * wv;
    return s;
}

} // namespace railbeam
