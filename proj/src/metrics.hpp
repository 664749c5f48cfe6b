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
#include <span>
#include <vector>

#include "json.hpp"
#include "nn/tensor.hpp"

namespace railbeam {

/// Fraction of samples whose predicted index is in the argmax set of the
/// truth row. `truth` is [n, B] row-major.
double top1_accuracy(std::span<const std::size_t> predictions, std::span<const double> truth, std::size_t n_beams);
double top1_accuracy(const std::vector<std::size_t>& predictions, const std::vector<std::vector<double>>& truth);

/// Σ(pred−true)² / Σ(true−mean(true))².
double nmse(std::span<const double> pred, std::span<const double> truth);

struct DifferenceSummary {
    double mean = 0.0, p50 = 0.0, p90 = 0.0, max = 0.0;
    std::size_t count = 0;
    nlohmann::json to_json() const;
};

/// |pred − truth| per entry, summarised as mean and CDF points.
DifferenceSummary rsrp_difference(std::span<const double> pred, std::span<const double> truth);

} // namespace railbeam
