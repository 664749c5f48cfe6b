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


#include "metrics.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace railbeam {

double top1_accuracy(std::span<const std::size_t> predictions, std::span<const double> truth, std::size_t n_beams) {
    if (n_beams == 0 || truth.size() != predictions.size() * n_beams)
        throw ValidationError("top1_accuracy: " + std::to_string(predictions.size()) + " predictions vs " +
                              std::to_string(n_beams ? truth.size() / n_beams : 0) + " truth rows");
    if (predictions.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto row = truth.subspan(i * n_beams, n_beams);
        const double best = *std::max_element(row.begin(), row.end());
        if (predictions[i] < n_beams && row[predictions[i]] == best) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double top1_accuracy(const std::vector<std::size_t>& predictions, const std::vector<std::vector<double>>& truth) {
    if (predictions.size() != truth.size())
        throw ValidationError("top1_accuracy: " + std::to_string(predictions.size()) + " predictions vs " +
                              std::to_string(truth.size()) + " truth rows");
    if (truth.empty()) return 0.0;
    const std::size_t B = truth.front().size();
    std::vector<double> flat;
    for (const auto& r : truth) {
        if (r.size() != B) throw ValidationError("top1_accuracy: ragged truth rows");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return top1_accuracy(predictions, flat, B);
}

double nmse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || truth.empty()) throw ValidationError("nmse: sizes differ or empty");
    double mean = 0.0;
    for (double t : truth) mean += t;
    mean /= static_cast<double>(truth.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        num += (pred[i] - truth[i]) * (pred[i] - truth[i]);
        den += (truth[i] - mean) * (truth[i] - mean);
    }
    if (!(den > 0.0)) throw ValidationError("nmse: truth has zero variance");
    return num / den;
}

nlohmann::json DifferenceSummary::to_json() const {
    return {{"mean_db", mean}, {"p50_db", p50}, {"p90_db", p90}, {"max_db", max}, {"count", count}};
}

DifferenceSummary rsrp_difference(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || truth.empty()) throw ValidationError("rsrp_difference: sizes differ or empty");
    std::vector<double> d(truth.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(pred[i] - truth[i]);
    DifferenceSummary s;
    s.count = d.size();
    for (double v : d) s.mean += v;
    s.mean /= static_cast<double>(d.size());
    std::sort(d.begin(), d.end());
    auto q = [&](double p) { return d[std::min(d.size() - 1, static_cast<std::size_t>(p * static_cast<double>(d.size())))]; };
    s.p50 = q(0.5);
    s.p90 = q(0.9);
    s.max = d.back();
    return s;
}

} // namespace railbeam
