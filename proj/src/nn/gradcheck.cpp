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


#include <cstdio>
#include <limits>
#include "nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "common.hpp"

namespace railbeam::nn {

namespace {

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

GradCheckResult grad_check(Sequential& model, const Tensor& input, const Tensor& target, double epsilon,
                           std::size_t max_coords_per_tensor, std::uint64_t seed) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
        throw ValidationError("grad_check: epsilon must lie in [1e-7, 1e-3]");
    const std::vector<Tensor*> params = model.params();

    ForwardCache cache;
    const Tensor pred = model.forward(input, cache);
    const LossValue base = mse(pred, target);
    const std::uint64_t sig0 = model.kink_signature(cache);
    const Gradients analytic = model.backward(cache, base.grad);

    auto probe = [&](double& theta, double value, std::uint64_t& sig) {
        theta = value;
        ForwardCache c;
        const double l = mse(model.forward(input, c), target).value;
        sig = model.kink_signature(c);
        return l;
    };

    GradCheckResult r;
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        std::vector<std::size_t> coords(p.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (max_coords_per_tensor && coords.size() > max_coords_per_tensor) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(max_coords_per_tensor);
            std::sort(coords.begin(), coords.end());
        }
        for (std::size_t i : coords) {
            const double orig = p[i];
            bool kink = false;
            double loss_scale = 0.0;
            auto central = [&](double h) {
                std::uint64_t sp = 0, sm = 0;
                const double lp = probe(p[i], orig + h, sp);
                const double lm = probe(p[i], orig - h, sm);
                kink = kink || sp != sig0 || sm != sig0;
                loss_scale = std::max({loss_scale, std::abs(lp), std::abs(lm)});
                return (lp - lm) / (2.0 * h);
            };
            // Ridders' extrapolation of central differences over shrinking
            // steps; keeps the estimate whose own error bound is smallest.
            constexpr std::size_t kTab = 8;
            constexpr double kCon = 1.4, kCon2 = kCon * kCon, kSafe = 2.0;
            double tab[kTab][kTab];
            double h = epsilon, h_ans = epsilon, num = 0.0, best = std::numeric_limits<double>::max();
            tab[0][0] = num = central(h);
            for (std::size_t col = 1; col < kTab && !kink; ++col) {
                h /= kCon;
                tab[0][col] = central(h);
                double fac = kCon2;
                for (std::size_t row = 1; row <= col; ++row) {
                    tab[row][col] = (tab[row - 1][col] * fac - tab[row - 1][col - 1]) / (fac - 1.0);
                    fac *= kCon2;
                    const double e = std::max(std::abs(tab[row][col] - tab[row - 1][col]),
                                              std::abs(tab[row][col] - tab[row - 1][col - 1]));
                    if (e <= best) {
                        best = e;
                        num = tab[row][col];
                        h_ans = h;
                    }
                }
                if (std::abs(tab[col][col] - tab[col - 1][col - 1]) >= kSafe * best) break;
            }
            p[i] = orig;
            if (kink) {
                ++r.skipped;
                continue;
            }
            const double a = analytic[k][i];
            // Round-off of a central difference at the chosen step; gradients
            // below 1e4 times it are compared on that scale instead of their own.
            const double resolution = std::numeric_limits<double>::epsilon() * loss_scale / h_ans;
            const double err = std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e4 * resolution, 1e-12});
            ++r.checked;
            if (err > r.max_rel_error || r.worst.empty()) {
                if (err >= r.max_rel_error) {
                    r.max_rel_error = err;
                    r.worst = "param " + std::to_string(k) + "[" + std::to_string(i) +
                              "]: analytic " + fmt_g(a) + " numeric " + fmt_g(num);
                }
            }
        }
    }
    model.touch();
    return r;
}

} // namespace railbeam::nn
