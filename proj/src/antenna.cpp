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


#include "antenna.hpp"

#include <algorithm>
#include <cmath>

namespace railbeam {

DirectionSines direction_sines(double azimuth_deg, double elevation_deg) {
    const double az = deg2rad(wrap_deg(azimuth_deg));
    const double el = deg2rad(elevation_deg);
    return {std::sin(az) * std::cos(el), std::sin(el)};
}

std::vector<cplx> axis_response(std::size_t count, double spacing_wl, double direction_sine) {
    std::vector<cplx> v(count);
    const double k = 2.0 * std::numbers::pi * spacing_wl * direction_sine;
    for (std::size_t n = 0; n < count; ++n) v[n] = std::polar(1.0, k * static_cast<double>(n));
    return v;
}

std::vector<cplx> array_response(std::size_t rows, std::size_t cols, double spacing_wl,
                                 double azimuth_deg, double elevation_deg) {
    const DirectionSines s = direction_sines(azimuth_deg, elevation_deg);
    const auto h = axis_response(rows, spacing_wl, s.horizontal);
    const auto v = axis_response(cols, spacing_wl, s.vertical);
    std::vector<cplx> a(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) a[r * cols + c] = h[r] * v[c];
    return a;
}

double element_gain_db(double azimuth_deg, double elevation_deg) {
    const double az = wrap_deg(azimuth_deg);
    const double horizontal = -std::min(12.0 * (az / 65.0) * (az / 65.0), 30.0);
    const double vertical = -std::min(12.0 * (elevation_deg / 65.0) * (elevation_deg / 65.0), 30.0);
    return 8.0 - std::min(-(horizontal + vertical), 30.0);
}

} // namespace railbeam
