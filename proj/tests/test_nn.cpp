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


#include <filesystem>
#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "nn/checkpoint.hpp"
#include "nn/gradcheck.hpp"
#include "nn/model.hpp"
#include "nn/optim.hpp"

using namespace railbeam;
using namespace railbeam::nn;

namespace {

Tensor random_tensor(Shape s, std::mt19937_64& rng, double a = 1.0) {
    Tensor t(std::move(s));
    std::uniform_real_distribution<double> u(-a, a);
    for (double& v : t.values()) v = u(rng);
    return t;
}

Tensor random_unit(Shape s, std::mt19937_64& rng) {
    Tensor t(std::move(s));
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (double& v : t.values()) v = u(rng);
    return t;
}

double check(Sequential& m, const Tensor& x, std::mt19937_64& rng, double eps = 1e-4) {
    const Tensor target = random_unit(m.output_shape(x.shape()), rng);
    const auto r = grad_check(m, x, target, eps);
    INFO(r.worst);
    CHECK(r.checked > 0);
    return r.max_rel_error;
}

} // namespace

TEST_SUITE("nn") {

TEST_CASE("empty model is the identity") {
    Sequential m;
    std::mt19937_64 rng(1);
    const Tensor x = random_tensor({3, 4}, rng);
    CHECK(m.forward(x) == x);
}

TEST_CASE("identity dense layer passes input through") {
    Sequential m;
    auto& d = m.emplace<Dense>(3, 3);
    for (std::size_t i = 0; i < 3; ++i) d.weight()[i * 3 + i] = 1.0;
    std::mt19937_64 rng(2);
    const Tensor x = random_tensor({5, 3}, rng);
    CHECK(m.forward(x) == x);
}

TEST_CASE("valid 3x3 ones kernel on 5x5 ones gives 3x3 of nines") {
    Sequential m;
    auto& c = m.emplace<Conv2d>(1, 1, 3, 3, Padding::valid);
    c.weight().fill(1.0);
    const Tensor y = m.forward(Tensor({1, 1, 5, 5}, 1.0));
    REQUIRE(y.shape() == Shape{1, 1, 3, 3});
    for (double v : y.values()) CHECK(v == 9.0);
}

TEST_CASE("shape mismatch names the layer index") {
    Sequential m;
    m.emplace<Dense>(4, 3);
    m.emplace<Dense>(5, 2);
    try {
        m.forward(Tensor({2, 4}));
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
}

TEST_CASE("zero loss gradient yields zero parameter gradients") {
    Sequential m;
    m.emplace<Lstm>(3, 4, false);
    m.emplace<Dense>(4, 2);
    m.init(3);
    std::mt19937_64 rng(3);
    ForwardCache c;
    const Tensor y = m.forward(random_tensor({2, 3, 3}, rng), c);
    for (const Tensor& g : m.backward(c, Tensor(y.shape())))
        for (double v : g.values()) CHECK(v == 0.0);
}

TEST_CASE("dense MSE gradient matches the closed form") {
    Sequential m;
    auto& d = m.emplace<Dense>(3, 2);
    m.init(4);
    std::mt19937_64 rng(4);
    const Tensor x = random_tensor({6, 3}, rng), t = random_tensor({6, 2}, rng);
    ForwardCache c;
    const Tensor p = m.forward(x, c);
    const auto loss = mse(p, t);
    const Gradients g = m.backward(c, loss.grad);
    const double n = 12.0;
    for (std::size_t o = 0; o < 2; ++o) {
        for (std::size_t i = 0; i < 3; ++i) {
            double expect = 0.0;
            for (std::size_t b = 0; b < 6; ++b) expect += x[b * 3 + i] * (p[b * 2 + o] - t[b * 2 + o]) * 2.0 / n;
            CHECK(g[0][o * 3 + i] == doctest::Approx(expect).epsilon(1e-12));
        }
        double eb = 0.0;
        for (std::size_t b = 0; b < 6; ++b) eb += (p[b * 2 + o] - t[b * 2 + o]) * 2.0 / n;
        CHECK(g[1][o] == doctest::Approx(eb).epsilon(1e-12));
    }
    (void)d;
}

TEST_CASE("stale forward cache is rejected") {
    Sequential m;
    m.emplace<Dense>(2, 2);
    m.init(5);
    ForwardCache c;
    const Tensor y = m.forward(Tensor({1, 2}, 0.5), c);
    m.params();
    CHECK_THROWS_AS(m.backward(c, y), RuntimeError);
    Sequential other = m;
    CHECK_THROWS_AS(other.backward(c, y), RuntimeError);
}

TEST_CASE("linear model with quadratic loss checks to roundoff") {
    Sequential m;
    m.emplace<Dense>(4, 3);
    m.init(6);
    std::mt19937_64 rng(6);
    CHECK(check(m, random_tensor({5, 4}, rng), rng) < 1e-8);
}

TEST_CASE("lstm with 2 cells over 3 timesteps") {
    Sequential m;
    m.emplace<Lstm>(2, 2, false);
    m.init(7);
    std::mt19937_64 rng(7);
    CHECK(check(m, random_tensor({4, 3, 2}, rng), rng) < 1e-4);
}

TEST_CASE("every layer kind passes the gradient oracle over 20 seeds") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        CAPTURE(seed);
        std::mt19937_64 rng(seed * 7919);
        {
            Sequential m;
            m.emplace<Dense>(5, 4);
            m.emplace<Activation>(ActivationKind::tanh);
            m.init(seed);
            CHECK(check(m, random_tensor({3, 5}, rng), rng) < 1e-4);
        }
        {
            Sequential m;
            m.emplace<Conv2d>(2, 3, 3, 3, Padding::same);
            m.emplace<Activation>(ActivationKind::sigmoid);
            m.init(seed);
            CHECK(check(m, random_tensor({2, 2, 4, 5}, rng), rng) < 1e-4);
        }
        {
            Sequential m;
            m.emplace<Conv2d>(1, 2, 2, 2, Padding::valid);
            m.emplace<MaxPool>(2);
            m.emplace<Reshape>(std::vector<std::int64_t>{-1, 4});
            m.emplace<Dense>(4, 2);
            m.init(seed);
            CHECK(check(m, random_tensor({2, 1, 5, 5}, rng), rng) < 1e-4);
        }
        {
            Sequential m;
            m.emplace<Lstm>(3, 4, true);
            m.emplace<Lstm>(4, 3, false);
            m.init(seed);
            CHECK(check(m, random_tensor({2, 4, 3}, rng), rng) < 1e-4);
        }
        {
            Sequential m;
            m.emplace<Dense>(4, 6);
            m.emplace<Activation>(ActivationKind::relu);
            m.emplace<Dense>(6, 2);
            m.init(seed);
            CHECK(check(m, random_tensor({4, 4}, rng), rng) < 1e-4);
        }
        {
            Sequential m;
            auto& lc = m.emplace<LinearCompression>(8, 3, -120.0, -60.0);
            lc.set_matrix(CompressionMatrix::random(3, 8, seed));
            m.emplace<Dense>(3, 2);
            m.init(seed);
            lc.set_matrix(CompressionMatrix::random(3, 8, seed));
            Tensor h = random_tensor({3, 2, 16}, rng, 1e-4);
            Sequential head;
            CHECK(check(m, h.reshaped({6, 16}), rng) < 1e-4);
        }
    }
}

TEST_CASE("maxpool at a tie point skips the tied coordinates") {
    Sequential m;
    auto& c = m.emplace<Conv2d>(1, 1, 1, 1, Padding::valid);
    m.emplace<MaxPool>(2);
    c.weight()[0] = 1.0;
    const Tensor x({1, 1, 2, 2}, 1.0);
    const auto r = grad_check(m, x, Tensor({1, 1, 1, 1}, 0.3), 1e-6);
    CHECK(r.max_rel_error < 1e-6);
    CHECK_THROWS_AS(grad_check(m, x, Tensor({1, 1, 1, 1}), 1e-2), ValidationError);
}

TEST_CASE("lstm over one step equals one cell application") {
    Sequential m;
    auto& l = m.emplace<Lstm>(3, 2, false);
    m.init(9);
    std::mt19937_64 rng(9);
    const Tensor x = random_tensor({1, 1, 3}, rng);
    const Tensor y = m.forward(x);
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    for (std::size_t k = 0; k < 2; ++k) {
        double z[4];
        for (std::size_t gate = 0; gate < 4; ++gate) {
            const std::size_t row = gate * 2 + k;
            z[gate] = l.bias()[row];
            for (std::size_t i = 0; i < 3; ++i) z[gate] += l.input_weight()[row * 3 + i] * x[i];
        }
        const double c = sig(z[0]) * std::tanh(z[2]);
        CHECK(y[k] == doctest::Approx(sig(z[3]) * std::tanh(c)).epsilon(1e-14));
    }
}

TEST_CASE("adam leaves parameters alone under zero gradient") {
    Sequential m;
    m.emplace<Dense>(3, 2);
    m.init(10);
    const Sequential before = m;
    Adam opt;
    for (int i = 0; i < 5; ++i) opt.step(m.params(), m.zero_gradients());
    auto a = m.params();
    auto b = before.params();
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(*a[k] == *b[k]);
}

TEST_CASE("adam step under a constant gradient tends to the learning rate") {
    Tensor p({1}, 0.0);
    Gradients g{Tensor({1}, 0.37)};
    Adam opt(AdamConfig{1e-3});
    double prev = 0.0, step = 0.0;
    for (int i = 0; i < 2000; ++i) {
        opt.step({&p}, g);
        step = prev - p[0];
        prev = p[0];
    }
    // Bias-corrected moments: m_hat = g, v_hat = g^2, so the step is lr*g/(|g|+eps).
    CHECK(step == doctest::Approx(1e-3 * 0.37 / (0.37 + 1e-8)).epsilon(1e-9));
}

TEST_CASE("plateau schedule halves after patience rounds and respects the floor") {
    PlateauSchedule s(1e-3, 1e-8, 0.5, 10);
    s.observe(1.0);
    for (int i = 0; i < 9; ++i) CHECK_FALSE(s.observe(2.0));
    CHECK(s.lr() == 1e-3);
    CHECK(s.observe(2.0));
    CHECK(s.lr() == doctest::Approx(5e-4));
    for (int i = 0; i < 1000; ++i) s.observe(2.0);
    CHECK(s.lr() == 1e-8);
    CHECK(s.at_floor());
}

TEST_CASE("checkpoint round trip and corruption detection") {
    Sequential m;
    m.emplace<Conv2d>(1, 2, 3, 3, Padding::same);
    m.emplace<Activation>(ActivationKind::relu);
    m.emplace<Reshape>(std::vector<std::int64_t>{-1, 18});
    m.emplace<Dense>(18, 4);
    m.init(11);
    const std::string path = (std::filesystem::temp_directory_path() / "railbeam_test_nn_checkpoint.rbck").string();
    save_checkpoint(path, {&m}, {{"name", "probe"}});
    const Checkpoint ck = load_checkpoint(path);
    REQUIRE(ck.networks.size() == 1);
    CHECK(ck.meta.at("name") == "probe");
    std::mt19937_64 rng(11);
    const Tensor x = random_tensor({2, 1, 3, 3}, rng);
    CHECK(ck.networks[0].forward(x) == m.forward(x));

    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(40);
        char c = 0x5a;
        f.write(&c, 1);
    }
    try {
        load_checkpoint(path);
        FAIL("expected checksum failure");
    } catch (const InvariantError& e) {
        CHECK(std::string(e.what()).find(path) != std::string::npos);
    }
}

}
