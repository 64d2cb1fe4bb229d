#include "doctest.h"

#include <set>

#include "fedprov/attacks.hpp"
#include "fedprov/error.hpp"

#include "../support/fixtures.hpp"

using namespace fedprov;

TEST_CASE("add_noise with zero sigma is the identity") {
    Rng rng(1);
    const auto u = fixture::flat_params({1, -2, 3});
    CHECK(add_noise(u, 0.0, rng) == u);
    const auto noisy = add_noise(u, 0.3, rng);
    CHECK_FALSE(noisy == u);
}

TEST_CASE("add_noise perturbation has the configured spread") {
    Rng rng(5);
    const auto u = LayeredParams::zeros_like(fixture::flat_params(std::vector<double>(20000, 0.0)));
    const auto n = add_noise(u, 0.3, rng);
    double s = 0, ss = 0;
    for (double v : n.values()) {
        s += v;
        ss += v * v;
    }
    const double mean = s / 20000, sd = std::sqrt(ss / 20000 - mean * mean);
    CHECK(std::abs(mean) < 0.01);
    CHECK(sd == doctest::Approx(0.3).epsilon(0.03));
}

TEST_CASE("sign_flip negates every coordinate") {
    const auto out = sign_flip(fixture::flat_params({1, -2, 0}));
    CHECK(out.values()[0] == -1.0);
    CHECK(out.values()[1] == 2.0);
    CHECK(out.values()[2] == 0.0);
}

TEST_CASE("mra scales by the configured factor") {
    const auto u = fixture::flat_params({1, 2});
    CHECK(mra_scale(u, 1.0) == u);
    const auto s = mra_scale(u, 10.0);
    CHECK(s.values()[0] == 10.0);
    CHECK(s.values()[1] == 20.0);
    std::mt19937_64 rng(2);
    const auto r = fixture::random_like(init_params(fixture::tiny_cnn(), 1), rng);
    CHECK(mra_scale(r, 7.5).norm() == doctest::Approx(7.5 * r.norm()).epsilon(1e-12));
}

TEST_CASE("dirty-label variants") {
    Rng rng(3);
    SUBCASE("zero fraction leaves the shard alone") {
        const Dataset d = generate_synthetic(10, 5, 2, 1.0, 1);
        CHECK(dirty_label(d, DirtyLabelVariant::rnd_rnd, 0.0, rng).labels == d.labels);
    }
    SUBCASE("Fix-Fix ignores categories outside the source set") {
        Dataset d = generate_synthetic(10, 5, 2, 1.0, 1);
        std::fill(d.labels.begin(), d.labels.end(), 7);
        CHECK(dirty_label(d, DirtyLabelVariant::fix_fix, 1.0, rng).labels == d.labels);
    }
    SUBCASE("Rnd-Fix relabels exactly half to the target") {
        Dataset d = generate_synthetic(10, 10, 2, 1.0, 1);
        for (auto& y : d.labels)
            if (y == 3) y = 4;   // no sample starts at the target
        const auto out = dirty_label(d, DirtyLabelVariant::rnd_fix, 0.5, rng);
        CHECK(std::count(out.labels.begin(), out.labels.end(), 3) == 50);
        Rng again(3);
        Rng fresh(3);
        CHECK(dirty_label(d, DirtyLabelVariant::rnd_fix, 0.5, again).labels ==
              dirty_label(d, DirtyLabelVariant::rnd_fix, 0.5, fresh).labels);
    }
    SUBCASE("random targets never keep the true label") {
        const Dataset d = generate_synthetic(10, 10, 2, 1.0, 1);
        const auto out = dirty_label(d, DirtyLabelVariant::rnd_rnd, 1.0, rng);
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(out.labels[i] != d.labels[i]);
    }
}

TEST_CASE("mb_attack degenerate cases") {
    const auto u = fixture::flat_params({1, 2, 3});
    const std::vector<LayeredParams> same{u, u};
    const auto r = mb_attack(same, MbVariant::unit, {}, 10.0);
    CHECK(r.update == u);
    CHECK(r.gamma == 0.0);

    const std::vector<LayeredParams> drafts{fixture::flat_params({1, 0, 2}), fixture::flat_params({3, 2, 0})};
    const auto never = mb_attack(drafts, MbVariant::sign, [](const LayeredParams&) { return false; });
    CHECK(never.gamma == 0.0);
    CHECK(never.update == coordinate_mean(drafts));

    const std::vector<LayeredParams> one{u};
    try {
        mb_attack(one, MbVariant::unit, {});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::insufficient_colluders);
    }
}

TEST_CASE("mb_attack halves gamma until the min-max check passes") {
    std::mt19937_64 rng(4);
    const auto like = fixture::flat_params(std::vector<double>(12, 0.0));
    std::vector<LayeredParams> drafts;
    for (int i = 0; i < 5; ++i) drafts.push_back(fixture::random_like(like, rng));
    const auto accept = minmax_acceptance(drafts);
    const auto r = mb_attack(drafts, MbVariant::unit, accept, 10.0);
    CHECK(accept(r.update));
    if (r.gamma > 0) CHECK_FALSE(accept(coordinate_mean(drafts) - (2 * r.gamma) * mb_direction(drafts, MbVariant::unit)));
}

TEST_CASE("embed_trigger stamps exactly the patch") {
    const InputShape shape{1, 4, 4};
    TriggerDescriptor t;
    t.row = 0;
    t.col = 0;
    t.height = 2;
    t.width = 2;
    t.values = {1.0};
    std::mt19937_64 rng(1);
    Batch b;
    b.x = RowMatrix::Random(3, 16);
    b.y = {2, 2, 2};
    Batch same = b;
    embed_trigger(same, t, shape, 0, 0.0);
    CHECK(same.x == b.x);
    CHECK(same.y == b.y);

    Batch hit = b;
    embed_trigger(hit, t, shape, 0, 0.5);
    for (Eigen::Index r = 0; r < 3; ++r)
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 4; ++x) {
                const auto j = static_cast<Eigen::Index>(y * 4 + x);
                const bool stamped = r < 2 && y < 2 && x < 2;
                CHECK(hit.x(r, j) == (stamped ? 1.0 : b.x(r, j)));
            }
    CHECK(hit.y == std::vector<int>{0, 0, 2});
}

TEST_CASE("triggers that do not fit are rejected") {
    TriggerDescriptor t;
    t.row = 3;
    t.height = 3;
    try {
        t.validate(InputShape{1, 4, 4});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::out_of_bounds);
    }
    TriggerDescriptor noise;
    noise.kind = TriggerKind::noise;
    noise.perturbation.assign(16, 0.1);
    noise.amplitude = 0.0;
    CHECK_THROWS_AS(noise.validate(InputShape{1, 4, 4}), Error);
}

TEST_CASE("noise trigger adds and clips") {
    TriggerDescriptor t;
    t.kind = TriggerKind::noise;
    t.perturbation = {1, -1, 0.5, 0};
    t.amplitude = 2;
    t.clip_min = -1;
    t.clip_max = 1.5;
    std::vector<double> x{0, 0, 0, 0.2};
    stamp_trigger(x, t, InputShape{1, 2, 2});
    CHECK(x == std::vector<double>{1.5, -1, 1, 0.2});
}

TEST_CASE("dba_split partitions the patch") {
    TriggerDescriptor t;
    t.row = 1;
    t.col = 2;
    t.height = 2;
    t.width = 4;
    CHECK(dba_split(t, 1).size() == 1);
    const auto parts = dba_split(t, 2);
    REQUIRE(parts.size() == 2);
    std::set<std::pair<std::size_t, std::size_t>> cover;
    std::size_t cells = 0;
    for (const auto& p : parts) {
        CHECK(p.height == 2);
        CHECK(p.width == 2);
        for (std::size_t r = 0; r < p.height; ++r)
            for (std::size_t c = 0; c < p.width; ++c) {
                cover.insert({p.row + r, p.col + c});
                ++cells;
            }
    }
    CHECK(cells == 8);
    CHECK(cover.size() == 8);
    for (std::size_t r = 1; r < 3; ++r)
        for (std::size_t c = 2; c < 6; ++c) CHECK(cover.count({r, c}) == 1);
}

TEST_CASE("stamping every DBA part equals stamping the whole trigger") {
    const InputShape shape{2, 6, 6};
    TriggerDescriptor t;
    t.row = 1;
    t.col = 1;
    t.height = 3;
    t.width = 4;
    t.values.clear();
    for (int i = 0; i < 12; ++i) t.values.push_back(1.0 + 0.1 * i);   // one value per cell
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    std::vector<double> base(shape.size());
    for (auto& v : base) v = g(rng);
    auto whole = base, pieces = base;
    stamp_trigger(whole, t, shape);
    for (const auto& p : dba_split(t, 3)) stamp_trigger(pieces, p, shape);
    CHECK(whole == pieces);
}

TEST_CASE("blind training with the full clean weight is plain training") {
    const auto arch = fixture::tiny_cnn();
    const auto g = init_params(arch, 4);
    const Dataset d = generate_synthetic(3, 6, arch.input_dim(), 1.0, 2);
    TriggerDescriptor t;
    TrainConfig tc;
    tc.seed = 10;
    tc.batch_size = 4;
    BlindConfig bc;
    bc.clean_weight = 1.0;
    CHECK(blind_train(arch, g, d, t, 0, tc, bc) == train_local(arch, g, d, tc));
}

TEST_CASE("blind step with a fixed half weight blends the two hand gradients") {
    const auto arch = Architecture::linear(3, 2);
    const auto model = init_params(arch, 6);
    TriggerDescriptor t;
    t.height = 1;
    t.width = 1;
    t.values = {5.0};
    Batch b;
    b.x.resize(1, 3);
    b.x << 0.5, -1.0, 2.0;
    b.y = {1};
    BlindConfig bc;
    bc.clean_weight = 0.5;
    const auto step = blind_step(arch, Loss::squared, t, 0, bc);
    LayeredParams grad;
    Rng rng(1);
    step(model, b, grad, rng);

    const auto W = model.layer(0), bias = model.layer(1);
    auto hand = [&](const double* x, int y, std::size_t o, std::size_t i) {
        double out = bias[o];
        for (std::size_t k = 0; k < 3; ++k) out += W[o * 3 + k] * x[k];
        const double err = out - (static_cast<int>(o) == y ? 1.0 : 0.0);
        return i < 3 ? err * x[i] : err;
    };
    const double clean[3] = {0.5, -1.0, 2.0}, trojan[3] = {5.0, -1.0, 2.0};
    for (std::size_t o = 0; o < 2; ++o) {
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(grad.layer(0)[o * 3 + i] ==
                  doctest::Approx(0.5 * hand(clean, 1, o, i) + 0.5 * hand(trojan, 0, o, i)).epsilon(1e-9));
        CHECK(grad.layer(1)[o] == doctest::Approx(0.5 * hand(clean, 1, o, 3) + 0.5 * hand(trojan, 0, o, 3)).epsilon(1e-9));
    }
}

TEST_CASE("fra_replace takes conv layers from the backdoor update only") {
    std::mt19937_64 rng(3);
    const auto like = init_params(fixture::tiny_cnn(), 1);
    const auto bd = fixture::random_like(like, rng), normal = fixture::random_like(like, rng);
    CHECK(fra_replace(normal, normal) == normal);
    const auto out = fra_replace(bd, normal);
    for (std::size_t l = 0; l < like.layer_count(); ++l) {
        const auto& src = like.spec(l).kind == LayerKind::conv ? bd : normal;
        CHECK(std::equal(out.layer(l).begin(), out.layer(l).end(), src.layer(l).begin()));
    }
}

TEST_CASE("conv_only masks every non-conv gradient") {
    const auto arch = fixture::tiny_cnn();
    const auto model = init_params(arch, 3);
    std::mt19937_64 rng(1);
    const auto b = fixture::random_batch(arch, 4, rng);
    StepGradient inner = [&](const LayeredParams& m, const Batch& batch, LayeredParams& g, Rng&) {
        return loss_and_gradient(arch, m, batch, Loss::cross_entropy, g);
    };
    LayeredParams full, masked;
    Rng r(1);
    inner(model, b, full, r);
    conv_only(inner)(model, b, masked, r);
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        const bool conv = model.spec(l).kind == LayerKind::conv;
        for (std::size_t i = 0; i < masked.layer(l).size(); ++i)
            CHECK(masked.layer(l)[i] == (conv ? full.layer(l)[i] : 0.0));
    }
}

TEST_CASE("attack spec validation") {
    AttackSpec a;
    a.type = AttackType::mra;
    a.mra_scale = 1.0;
    CHECK_THROWS_AS(a.validate(), Error);
    a.type = AttackType::dba;
    a.mra_scale = 10.0;
    a.dba_parts = 1;
    CHECK_THROWS_AS(a.validate(), Error);
    a.dba_parts = 4;
    a.poisoned_fraction = 0.0;
    CHECK_THROWS_AS(a.validate(), Error);
    a.poisoned_fraction = 0.2;
    CHECK_NOTHROW(a.validate());
    CHECK(attack_type_from_string("sign_flip") == AttackType::sign_flip);
    CHECK_THROWS_AS(attack_type_from_string("nope"), Error);
}

TEST_CASE("trigger json round-trip") {
    TriggerDescriptor t;
    t.row = 2;
    t.col = 1;
    t.values = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    const auto back = trigger_from_json(trigger_to_json(t));
    CHECK(back.row == 2);
    CHECK(back.col == 1);
    CHECK(back.values == t.values);
}

TEST_CASE("trojan set drops target samples and stamps the rest") {
    const auto arch = fixture::tiny_cnn();
    const Dataset d = generate_synthetic(3, 4, arch.input_dim(), 1.0, 2);
    TriggerDescriptor t;
    const Dataset tr = make_trojan_set(d, t, arch.input, 0);
    CHECK(tr.size() == 8);
    for (auto y : tr.labels) CHECK(y == 0);
    CHECK(tr.samples(0, 0) == 1.0);
}
