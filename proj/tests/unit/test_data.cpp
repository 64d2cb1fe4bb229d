#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fedprov/data.hpp"
#include "fedprov/error.hpp"
#include "fedprov/metrics.hpp"
#include "fedprov/model.hpp"

using namespace fedprov;

TEST_CASE("zero spread collapses every category onto its mean") {
    const Dataset d = generate_synthetic(3, 4, 5, 0.0, 12);
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.size(); ++j)
            if (d.labels[i] == d.labels[j])
                CHECK((d.samples.row(static_cast<Eigen::Index>(i)) - d.samples.row(static_cast<Eigen::Index>(j))).norm() == 0.0);
}

TEST_CASE("one sample per category with two categories") {
    const Dataset d = generate_synthetic(2, 1, 3, 1.0, 1);
    CHECK(d.size() == 2);
    CHECK(std::set<int>(d.labels.begin(), d.labels.end()) == std::set<int>{0, 1});
    CHECK_THROWS_AS(generate_synthetic(1, 3, 3, 1.0, 1), Error);
}

TEST_CASE("generation is deterministic under the seed") {
    const Dataset a = generate_synthetic(4, 5, 6, 1.0, 99), b = generate_synthetic(4, 5, 6, 1.0, 99);
    CHECK(a.samples == b.samples);
    CHECK(a.labels == b.labels);
}

TEST_CASE("a linear classifier separates tight clusters") {
    const Dataset d = generate_synthetic(10, 30, 20, 0.1, 4);
    const auto arch = Architecture::linear(20, 10);
    auto model = init_params(arch, 3);
    TrainConfig tc;
    tc.learning_rate = 0.1;
    tc.epochs = 30;
    tc.batch_size = 16;
    model += train_local(arch, model, d, tc);
    CHECK(evaluate(arch, model, d).acc >= 0.95);
}

TEST_CASE("iid partition with one client returns the whole dataset") {
    const Dataset d = generate_synthetic(3, 5, 2, 1.0, 7);
    PartitionPlan plan;
    plan.clients = 1;
    const auto shards = partition(d, plan);
    REQUIRE(shards.size() == 1);
    CHECK(shards[0].indices.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(shards[0].indices[i] == i);
}

TEST_CASE("partition is exact and disjoint in both modes") {
    const Dataset d = generate_synthetic(5, 40, 2, 1.0, 7);
    for (auto mode : {PartitionMode::iid, PartitionMode::dirichlet})
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            PartitionPlan plan{mode, 0.5, 12, seed};
            const auto shards = partition(d, plan);
            std::vector<int> seen(d.size(), 0);
            for (const auto& s : shards) {
                CHECK_FALSE(s.indices.empty());
                CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));
                for (auto i : s.indices) ++seen[i];
            }
            CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        }
}

TEST_CASE("more clients than samples is infeasible") {
    const Dataset d = generate_synthetic(2, 2, 2, 1.0, 1);
    PartitionPlan plan;
    plan.clients = 5;
    try {
        partition(d, plan);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::infeasible_partition);
    }
}

namespace {
// mean over clients of the variance of that client's label distribution
double label_spread(const Dataset& d, const std::vector<Shard>& shards) {
    const auto hist = label_histograms(d, shards);
    double total = 0;
    for (const auto& h : hist) {
        double n = 0;
        for (auto c : h) n += static_cast<double>(c);
        const double mean = 1.0 / static_cast<double>(h.size());
        double var = 0;
        for (auto c : h) var += (c / n - mean) * (c / n - mean);
        total += var / static_cast<double>(h.size());
    }
    return total / static_cast<double>(hist.size());
}
}  // namespace

TEST_CASE("very large concentration approaches a balanced split") {
    const Dataset d = generate_synthetic(10, 100, 2, 1.0, 5);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto shards = partition(d, PartitionPlan{PartitionMode::dirichlet, 1e6, 10, seed});
        for (const auto& h : label_histograms(d, shards)) {
            double n = 0;
            for (auto c : h) n += static_cast<double>(c);
            for (auto c : h) CHECK(std::abs(c / n - 0.1) <= 0.02);
        }
    }
}

TEST_CASE("Dirichlet 0.5 is more skewed than iid over 100 seeds") {
    const Dataset d = generate_synthetic(10, 100, 2, 1.0, 5);
    double iid = 0, dir = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        iid += label_spread(d, partition(d, PartitionPlan{PartitionMode::iid, 0.5, 10, seed}));
        dir += label_spread(d, partition(d, PartitionPlan{PartitionMode::dirichlet, 0.5, 10, seed}));
    }
    CHECK(dir > iid);
}

TEST_CASE("partition plan validation") {
    PartitionPlan p{PartitionMode::dirichlet, 0.0, 3, 1};
    CHECK_THROWS_AS(p.validate(), Error);
    p.concentration = 0.1;
    p.clients = 0;
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("shard manifest round-trips") {
    const std::vector<Shard> shards{{0, {1, 4, 5}}, {1, {0, 2}}, {2, {3}}};
    std::stringstream s;
    write_shard_manifest(s, shards);
    const auto back = read_shard_manifest(s);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].client == shards[i].client);
        CHECK(back[i].indices == shards[i].indices);
    }
    std::stringstream bad("{\"client\": 0, \"indices\": [1,\n");
    CHECK_THROWS_AS(read_shard_manifest(bad), Error);
}

TEST_CASE("IDX reader scales bytes and checks magic numbers") {
    const auto dir = std::filesystem::temp_directory_path() / "fedprov_idx_test";
    std::filesystem::create_directories(dir);
    auto be32 = [](std::ofstream& f, std::uint32_t v) {
        const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                    static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
        f.write(reinterpret_cast<const char*>(b), 4);
    };
    {
        std::ofstream img(dir / "img", std::ios::binary), lab(dir / "lab", std::ios::binary);
        be32(img, 0x803);
        be32(img, 2);
        be32(img, 1);
        be32(img, 2);
        const unsigned char px[4] = {0, 255, 51, 102};
        img.write(reinterpret_cast<const char*>(px), 4);
        be32(lab, 0x801);
        be32(lab, 2);
        const unsigned char y[2] = {3, 1};
        lab.write(reinterpret_cast<const char*>(y), 2);
    }
    const Dataset d = load_idx((dir / "img").string(), (dir / "lab").string(), 10);
    REQUIRE(d.size() == 2);
    CHECK(d.dim() == 2);
    CHECK(d.samples(0, 1) == doctest::Approx(1.0));
    CHECK(d.samples(1, 0) == doctest::Approx(0.2));
    CHECK(d.labels == std::vector<int>{3, 1});
    CHECK_THROWS_AS(load_idx((dir / "lab").string(), (dir / "lab").string(), 10), Error);
    CHECK_THROWS_AS(load_idx((dir / "missing").string(), (dir / "lab").string(), 10), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("subset and validation") {
    const Dataset d = generate_synthetic(3, 2, 2, 1.0, 1);
    const std::vector<std::size_t> idx{5, 0};
    const Dataset s = d.subset(idx);
    CHECK(s.labels == std::vector<int>{d.labels[5], d.labels[0]});
    const std::vector<std::size_t> bad{6};
    CHECK_THROWS_AS(d.subset(bad), Error);
    Dataset broken = d;
    broken.labels[0] = 7;
    CHECK_THROWS_AS(broken.validate(), Error);
}
