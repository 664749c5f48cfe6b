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


#include "nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "common.hpp"

namespace railbeam::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

template <class T>
void put(std::string& buf, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf.append(b, sizeof(T));
}

void put_str(std::string& buf, const std::string& s) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(s.size()));
    buf += s;
}

class Reader {
public:
    Reader(const std::string& data, std::size_t end, const std::string& path)
        : data_(data), end_(end), path_(path) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string get_str() {
        const auto n = get<std::uint32_t>();
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void read_doubles(double* out, std::size_t n) {
        need(n * sizeof(double));
        std::memcpy(out, data_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
    }
    bool done() const { return pos_ == end_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > end_) throw InvariantError("checkpoint " + path_ + " is truncated");
    }
    const std::string& data_;
    std::size_t end_;
    std::string path_;
    std::size_t pos_ = 0;
};

} // namespace

void save_checkpoint(const std::string& path, const std::vector<const Sequential*>& networks,
                     const nlohmann::json& meta) {
    std::string buf = "RBCK";
    put<std::uint32_t>(buf, kCheckpointVersion);
    put_str(buf, meta.dump());
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(networks.size()));
    nlohmann::json descs = nlohmann::json::array();
    for (const Sequential* net : networks) {
        put<std::uint32_t>(buf, static_cast<std::uint32_t>(net->size()));
        for (std::size_t l = 0; l < net->size(); ++l) {
            const Layer& layer = net->layer(l);
            const nlohmann::json d = {{"kind", to_string(layer.kind())}, {"hyper", layer.hyper()}};
            put_str(buf, d.dump());
            put<std::uint32_t>(buf, static_cast<std::uint32_t>(layer.params().size()));
            for (const Tensor& p : layer.params()) {
                put<std::uint32_t>(buf, static_cast<std::uint32_t>(p.rank()));
                for (std::size_t d2 : p.shape()) put<std::uint64_t>(buf, d2);
                buf.append(reinterpret_cast<const char*>(p.data()), p.size() * sizeof(double));
            }
        }
        descs.push_back(net->describe());
    }
    const std::uint64_t sum = fnv1a64(buf);
    put<std::uint64_t>(buf, sum);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write checkpoint " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw RuntimeError("failed writing checkpoint " + path);

    const nlohmann::json side = {{"format", "RBCK"},
                                 {"format_version", kCheckpointVersion},
                                 {"checksum_fnv1a64", hex64(sum)},
                                 {"meta", meta},
                                 {"networks", descs}};
    std::ofstream sc(path + ".json", std::ios::trunc);
    if (!sc) throw RuntimeError("cannot write checkpoint sidecar " + path + ".json");
    sc << side.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("checkpoint not found: " + path);
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < 4 + 4 + 8 || data.compare(0, 4, "RBCK") != 0)
        throw InvariantError("checkpoint " + path + " has a bad magic number");
    const std::size_t body = data.size() - 8;
    std::uint64_t stored;
    std::memcpy(&stored, data.data() + body, 8);
    if (fnv1a64(std::string_view(data.data(), body)) != stored)
        throw InvariantError("checkpoint checksum mismatch: " + path);

    Reader r(data, body, path);
    r.get<std::uint32_t>(); // magic
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw InvariantError("checkpoint " + path + " has unsupported version " + std::to_string(version));
    Checkpoint ck;
    try {
        ck.meta = nlohmann::json::parse(r.get_str());
        const auto n_nets = r.get<std::uint32_t>();
        for (std::uint32_t n = 0; n < n_nets; ++n) {
            Sequential net;
            const auto n_layers = r.get<std::uint32_t>();
            for (std::uint32_t l = 0; l < n_layers; ++l) {
                const auto d = nlohmann::json::parse(r.get_str());
                auto layer = make_layer(layer_kind_from_string(d.at("kind").get<std::string>()), d.at("hyper"));
                const auto n_params = r.get<std::uint32_t>();
                if (n_params != layer->params().size())
                    throw InvariantError("checkpoint " + path + ": parameter count mismatch in layer " +
                                         std::to_string(l));
                for (Tensor& p : layer->params()) {
                    const auto rank = r.get<std::uint32_t>();
                    Shape s(rank);
                    for (auto& d2 : s) d2 = r.get<std::uint64_t>();
                    if (s != p.shape())
                        throw InvariantError("checkpoint " + path + ": shape " + shape_str(s) + " vs " +
                                             shape_str(p.shape()) + " in layer " + std::to_string(l));
                    r.read_doubles(p.data(), p.size());
                }
                net.add(std::move(layer));
            }
            ck.networks.push_back(std::move(net));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvariantError("checkpoint " + path + ": bad descriptor: " + e.what());
    }
    if (!r.done()) throw InvariantError("checkpoint " + path + " has trailing bytes");
    return ck;
}

} // namespace railbeam::nn
