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

#include "common.hpp"

namespace railbeam {

/// UPA steering vector. Element (r, c) sits at index r*cols + c; `rows`
/// spans the horizontal axis and `cols` the vertical one. Angles are local
/// to the array boresight; entry (0,0) is always 1.
std::vector<cplx> array_response(std::size_t rows, std::size_t cols, double spacing_wl,
                                 double azimuth_deg, double elevation_deg);

/// Phase progression along one axis: exp(j*2*pi*spacing*n*s), n in [0, count).
std::vector<cplx> axis_response(std::size_t count, double spacing_wl, double direction_sine);

/// Horizontal and vertical direction sines seen by the array.
struct DirectionSines {
    double horizontal; ///< sin(az) * cos(el)
    double vertical;   ///< sin(el)
};
DirectionSines direction_sines(double azimuth_deg, double elevation_deg);

/// Directional element gain in dBi (8 dBi peak, 65 degree half-power
/// beamwidth, 30 dB front-to-back), angles local to the boresight.
double element_gain_db(double azimuth_deg, double elevation_deg);

} // namespace railbeam
