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

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace railbeam {

inline constexpr const char* kVersion = "0.1.0";

using cplx = std::complex<double>;

/// Out-of-range cells and empty path sets are encoded at this level; all math clamps here.
inline constexpr double kRsrpFloorDbm = -160.0;

/// Process exit codes shared by the CLI and the C API.
enum class ErrorCode : int { ok = 0, validation = 1, invariant = 2, runtime = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(ErrorCode::validation, what) {}
};

struct InvariantError : Error {
    explicit InvariantError(const std::string& what) : Error(ErrorCode::invariant, what) {}
};

struct RuntimeError : Error {
    explicit RuntimeError(const std::string& what) : Error(ErrorCode::runtime, what) {}
};

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double kmh_to_mps(double kmh) { return kmh / 3.6; }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Power (mW or any linear unit) to dB, clamped at `floor`.
inline double power_to_db(double p, double floor = kRsrpFloorDbm) {
    if (!(p > 0.0)) return floor;
    const double db = 10.0 * std::log10(p);
    return db < floor ? floor : db;
}

/// Wraps an angle in degrees to [-180, 180).
inline double wrap_deg(double deg) {
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0) w += 360.0;
    return w - 180.0;
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v);

/// Derives an independent stream seed from a base seed and a salt (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

} // namespace railbeam
