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
#include <span>
#include <string>
#include <vector>

#include "antenna.hpp"
#include "common.hpp"
#include "json.hpp"

namespace railbeam {

struct BeamLabel {
    double azimuth_deg = 0.0;
    double elevation_deg = 0.0;
    bool visible = true; ///< false when the beam points outside real space
};

/// Narrow-beam DFT codebook (Set A) for one sector. Beam b = kh*n_v + kv
/// is the Kronecker product of the kh-th horizontal and the kv-th vertical
/// oversampled DFT vector.
class Codebook {
public:
    std::size_t size() const { return n_h_ * n_v_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t oversampling() const { return oversampling_; }
    double spacing_wl() const { return spacing_wl_; }
    std::size_t horizontal_beams() const { return n_h_; }
    std::size_t vertical_beams() const { return n_v_; }
    std::size_t element_count() const { return rows_ * cols_; }

    std::span<const cplx> beam(std::size_t b) const;
    const BeamLabel& label(std::size_t b) const { return labels_.at(b); }

    /// out[b] += scale * <w_b, a(dir)> for every beam, using the separable
    /// structure instead of full-length inner products.
    void accumulate_projection(const DirectionSines& dir, cplx scale, std::span<cplx> out) const;

    nlohmann::json labels_json() const;

private:
    friend Codebook dft_codebook(std::size_t, std::size_t, std::size_t, double);

    std::size_t rows_ = 0, cols_ = 0, oversampling_ = 1;
    std::size_t n_h_ = 0, n_v_ = 0;
    double spacing_wl_ = 0.5;
    std::vector<cplx> beams_;    // size() x element_count(), row-major
    std::vector<cplx> h_factors_; // n_h x rows
    std::vector<cplx> v_factors_; // n_v x cols
    std::vector<BeamLabel> labels_;
};

Codebook dft_codebook(std::size_t rows, std::size_t cols, std::size_t oversampling,
                      double spacing_wl = 0.5);

/// Plain inner product <w, a> = sum conj(w) * a.
cplx inner(std::span<const cplx> w, std::span<const cplx> a);

struct Ratio {
    std::int64_t num = 1;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;
    /// Accepts "a/b" or a decimal.
    static Ratio parse(const std::string& text);
};

enum class SetBKind { subset_of_a, wide_beam, full, compressed };
enum class SelectionPattern { equidistant, random };

std::string to_string(SetBKind kind);
SetBKind set_b_kind_from_string(const std::string& s);
SelectionPattern selection_pattern_from_string(const std::string& s);

/// What the UE measures out of Set A.
struct SetB {
    SetBKind kind = SetBKind::full;
    std::vector<std::size_t> indices; ///< subset_of_a and full: measured beams, sorted
    std::size_t set_a_size = 0;
    std::size_t measurement_count = 0;

    /// Number of measurements over |Set A|.
    Ratio ratio() const;
};

SetB select_set_b(std::size_t set_a_size, SelectionPattern pattern, Ratio ratio,
                  std::uint64_t seed);

/// m = ratio * |Set A| linear measurements through a compression matrix.
SetB compressed_set_b(std::size_t set_a_size, Ratio ratio);

/// 2x2-aggregated wide beams over the narrow-beam grid.
SetB wide_beam_set_b(const Codebook& cb);

} // namespace railbeam
