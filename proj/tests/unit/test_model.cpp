#include "doctest.h"

#include <sstream>

#include "fedprov/data.hpp"
#include "fedprov/error.hpp"
#include "fedprov/model.hpp"
#include "fedprov/params.hpp"
#include "fedprov/serialize.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

using namespace fedprov;

TEST_CASE("flatten follows declared row-major order") {
    LayeredParams p({LayerSpec{0, LayerKind::fully_connected, {2, 2}}});
    const double v[] = {1, 2, 3, 4};
    std::copy(v, v + 4, p.values().begin());
    CHECK(flatten(p) == std::vector<double>{1, 2, 3, 4});
    CHECK(flatten(LayeredParams{}).empty());
}

TEST_CASE("flatten and unflatten round-trip") {
    const auto arch = fixture::tiny_cnn();
    auto p = init_params(arch, 9);
    const auto back = unflatten(p.specs(), flatten(p));
    CHECK(back == p);
    CHECK_THROWS_AS(unflatten(p.specs(), std::vector<double>(3, 0.0)), Error);
}

TEST_CASE("parameter arithmetic rejects mismatched structure") {
    auto a = fixture::flat_params({1, 2});
    auto b = fixture::flat_params({1, 2, 3});
    CHECK_THROWS_AS(a += b, Error);
    try {
        a += b;
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::incompatible);
    }
}

TEST_CASE("zero-weight network gives zero scores") {
    const auto arch = Architecture::dnn(6, 4, 3);
    auto p = LayeredParams::zeros_like(init_params(arch, 1));
    std::mt19937_64 rng(1);
    const auto b = fixture::random_batch(arch, 5, rng);
    const RowMatrix out = forward(arch, p, b.x);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identity classifier passes the input through") {
    const auto arch = Architecture::linear(4, 4);
    auto p = LayeredParams::zeros_like(init_params(arch, 1));
    auto w = p.layer(0);
    for (std::size_t i = 0; i < 4; ++i) w[i * 4 + i] = 1.0;
    RowMatrix x(2, 4);
    x << 1, -2, 3, 0.5, 4, 5, -6, 7;
    const RowMatrix out = forward(arch, p, x);
    CHECK((out - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("SimpleNet forward matches a naive-loop pass") {
    const auto arch = Architecture::simple_net({1, 16, 16}, 10, 4, 6, 12);
    const auto p = init_params(arch, 42);
    std::mt19937_64 rng(7);
    const auto b = fixture::random_batch(arch, 3, rng);
    const RowMatrix out = forward(arch, p, b.x);
    for (Eigen::Index r = 0; r < b.x.rows(); ++r) {
        std::vector<double> in(b.x.row(r).data(), b.x.row(r).data() + b.x.cols());
        const auto ref = oracle::forward_one(arch, p, in);
        for (std::size_t c = 0; c < ref.size(); ++c) CHECK(out(r, static_cast<Eigen::Index>(c)) == doctest::Approx(ref[c]).epsilon(1e-9));
    }
}

TEST_CASE("analytic gradients agree with finite differences on every layer") {
    const Architecture archs[] = {fixture::tiny_cnn(), Architecture::dnn(7, 5, 3), Architecture::linear(5, 4)};
    for (const auto& arch : archs)
        for (auto loss : {Loss::cross_entropy, Loss::squared})
            for (const auto& g : fixture::gradient_check(arch, loss, 11)) {
                INFO(g.layer);
                CHECK(g.rel_err <= 1e-3);
            }
}

TEST_CASE("train_local with zero epochs returns a zero update") {
    const auto arch = Architecture::dnn(4, 3, 2);
    const auto g = init_params(arch, 2);
    Dataset d = generate_synthetic(2, 5, 4, 1.0, 3);
    TrainConfig tc;
    tc.epochs = 0;
    const auto u = train_local(arch, g, d, tc);
    CHECK(u.norm() == 0.0);
}

TEST_CASE("one squared-loss step on a linear model equals -lr times the hand gradient") {
    const auto arch = Architecture::linear(3, 2);
    auto g = init_params(arch, 5);
    Dataset d;
    d.classes = 2;
    d.samples.resize(1, 3);
    d.samples << 0.5, -1.0, 2.0;
    d.labels = {1};
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = 1;
    tc.learning_rate = 0.1;
    tc.loss = Loss::squared;
    const auto u = train_local(arch, g, d, tc);
    const auto W = g.layer(0), b = g.layer(1);
    for (std::size_t o = 0; o < 2; ++o) {
        double out = b[o];
        for (std::size_t i = 0; i < 3; ++i) out += W[o * 3 + i] * d.samples(0, static_cast<Eigen::Index>(i));
        const double err = out - (o == 1 ? 1.0 : 0.0);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(u.layer(0)[o * 3 + i] == doctest::Approx(-0.1 * err * d.samples(0, static_cast<Eigen::Index>(i))).epsilon(1e-9));
        CHECK(u.layer(1)[o] == doctest::Approx(-0.1 * err).epsilon(1e-9));
    }
}

TEST_CASE("train_local is bit-identical under a fixed seed") {
    const auto arch = fixture::tiny_cnn(4);
    const auto g = init_params(arch, 1);
    const Dataset d = generate_synthetic(4, 6, arch.input_dim(), 1.0, 8);
    TrainConfig tc;
    tc.seed = 77;
    tc.batch_size = 5;
    const auto first = train_local(arch, g, d, tc);
    CHECK(first == train_local(arch, g, d, tc));
    tc.seed = 78;
    CHECK_FALSE(first == train_local(arch, g, d, tc));
}

TEST_CASE("train_local rejects an empty shard and a wrong input width") {
    const auto arch = Architecture::dnn(4, 3, 2);
    const auto g = init_params(arch, 2);
    Dataset empty;
    empty.classes = 2;
    empty.samples.resize(0, 4);
    CHECK_THROWS_AS(train_local(arch, g, empty, {}), Error);
    const Dataset wide = generate_synthetic(2, 3, 5, 1.0, 1);
    CHECK_THROWS_AS(train_local(arch, g, wide, {}), Error);
}

TEST_CASE("binary parameter format round-trips and rejects garbage") {
    const auto p = init_params(fixture::tiny_cnn(), 3);
    std::stringstream s;
    write_params(s, p);
    CHECK(read_params(s) == p);
    std::stringstream bad("not a params file");
    CHECK_THROWS_AS(read_params(bad), Error);
}
