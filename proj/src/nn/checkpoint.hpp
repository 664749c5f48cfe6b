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

#include <string>
#include <vector>

#include "json.hpp"
#include "nn/model.hpp"

namespace railbeam::nn {

/// Binary layout, all integers and floats little-endian:
///   "RBCK" u32 version u32 meta_len meta_json u32 n_networks
///   per network: u32 n_layers
///     per layer: u32 desc_len desc_json u32 n_params
///       per param: u32 rank u64 dims[rank] f64 data[prod(dims)]
///   u64 FNV-1a of every preceding byte
/// A JSON sidecar `<path>.json` repeats meta, layer descriptors and checksum.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::vector<Sequential> networks;
    nlohmann::json meta;
};

void save_checkpoint(const std::string& path, const std::vector<const Sequential*>& networks,
                     const nlohmann::json& meta);

/// Throws InvariantError naming the path on checksum or format mismatch.
Checkpoint load_checkpoint(const std::string& path);

} // namespace railbeam::nn
