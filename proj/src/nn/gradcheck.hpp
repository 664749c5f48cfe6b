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
#include <string>

#include "nn/model.hpp"

namespace railbeam::nn {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0; ///< coordinates where a perturbation crosses a kink
    std::string worst;       ///< "param k[i]: analytic a numeric n"
};

/// Finite-difference check of the MSE-loss gradient of every parameter
/// coordinate (or a seeded sample of `max_coords_per_tensor` per tensor).
/// The numeric derivative is Ridders' extrapolation of central differences
/// starting from step `epsilon`. Relative error is |a - n| / max(|a|, |n|,
/// 1e4 r), r being the central-difference round-off at the chosen step
/// (machine epsilon times the probed loss over the step). Coordinates whose
/// probes change a kink signature are skipped.
GradCheckResult grad_check(Sequential& model, const Tensor& input, const Tensor& target, double epsilon,
                           std::size_t max_coords_per_tensor = 0, std::uint64_t seed = 1);

} // namespace railbeam::nn
