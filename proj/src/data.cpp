#include "fedprov/data.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"

#include "fedprov/error.hpp"
#include "fedprov/rng.hpp"

namespace fedprov {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.classes = classes;
    out.samples.resize(static_cast<Eigen::Index>(indices.size()), samples.cols());
    out.labels.resize(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= size()) throw Error(ErrorKind::out_of_bounds, "subset index out of range");
        out.samples.row(static_cast<Eigen::Index>(r)) = samples.row(static_cast<Eigen::Index>(indices[r]));
        out.labels[r] = labels[indices[r]];
    }
    return out;
}

void Dataset::validate() const {
    if (static_cast<std::size_t>(samples.rows()) != labels.size())
        throw Error(ErrorKind::invalid_argument, "dataset: sample and label counts differ");
    for (int y : labels)
        if (y < 0 || y >= classes) throw Error(ErrorKind::invalid_argument, "dataset: label out of range");
}

Dataset generate_synthetic(int classes, std::size_t per_class, std::size_t dim, double spread, std::uint64_t seed) {
    if (classes < 2) throw Error(ErrorKind::invalid_argument, "generate_synthetic: need at least 2 categories");
    Rng rng(derive_seed(seed, {stream::data}));
    std::normal_distribution<double> normal(0.0, 1.0);
    RowMatrix means(classes, static_cast<Eigen::Index>(dim));
    for (Eigen::Index c = 0; c < means.rows(); ++c)
        for (Eigen::Index j = 0; j < means.cols(); ++j) means(c, j) = normal(rng);

    Dataset out;
    out.classes = classes;
    out.samples.resize(static_cast<Eigen::Index>(per_class * static_cast<std::size_t>(classes)),
                       static_cast<Eigen::Index>(dim));
    out.labels.reserve(per_class * static_cast<std::size_t>(classes));
    Eigen::Index row = 0;
    for (int c = 0; c < classes; ++c)
        for (std::size_t s = 0; s < per_class; ++s, ++row) {
            for (Eigen::Index j = 0; j < means.cols(); ++j) {
                const double noise = normal(rng);
                out.samples(row, j) = means(c, j) + spread * noise;
            }
            out.labels.push_back(c);
        }
    return out;
}

TrainTest generate_synthetic_split(int classes, std::size_t per_class_train, std::size_t per_class_test,
                                   std::size_t dim, double spread, std::uint64_t seed) {
    const std::size_t per_class = per_class_train + per_class_test;
    Dataset all = generate_synthetic(classes, per_class, dim, spread, seed);
    std::vector<std::size_t> train_idx, test_idx;
    for (int c = 0; c < classes; ++c)
        for (std::size_t s = 0; s < per_class; ++s)
            (s < per_class_train ? train_idx : test_idx).push_back(static_cast<std::size_t>(c) * per_class + s);
    return {all.subset(train_idx), all.subset(test_idx)};
}

void PartitionPlan::validate() const {
    if (clients == 0) throw Error(ErrorKind::invalid_argument, "partition: need at least one client");
    if (mode == PartitionMode::dirichlet && !(concentration > 0.0))
        throw Error(ErrorKind::invalid_argument, "partition: Dirichlet concentration must be positive");
}

std::vector<Shard> partition(const Dataset& data, const PartitionPlan& plan) {
    plan.validate();
    const std::size_t n = data.size();
    const std::size_t clients = plan.clients;
    if (clients > n)
        throw Error(ErrorKind::infeasible_partition, "partition: " + std::to_string(clients) + " clients but only " +
                                                         std::to_string(n) + " samples");
    Rng rng(derive_seed(plan.seed, {stream::partition}));
    std::vector<Shard> shards(clients);
    for (std::size_t c = 0; c < clients; ++c) shards[c].client = c;

    if (plan.mode == PartitionMode::iid) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t c = 0; c < clients; ++c) {
            const std::size_t lo = c * n / clients, hi = (c + 1) * n / clients;
            shards[c].indices.assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                     order.begin() + static_cast<std::ptrdiff_t>(hi));
        }
    } else {
        std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.classes));
        for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
        std::gamma_distribution<double> gamma(plan.concentration, 1.0);
        std::vector<double> props(clients);
        for (auto& members : by_class) {
            std::shuffle(members.begin(), members.end(), rng);
            double total = 0.0;
            for (auto& p : props) {
                p = gamma(rng);
                total += p;
            }
            if (!(total > 0.0)) {  // every draw underflowed; fall back to uniform
                std::fill(props.begin(), props.end(), 1.0);
                total = static_cast<double>(clients);
            }
            double cum = 0.0;
            std::size_t lo = 0;
            for (std::size_t c = 0; c < clients; ++c) {
                cum += props[c] / total;
                std::size_t hi = c + 1 == clients
                                     ? members.size()
                                     : std::min(members.size(), static_cast<std::size_t>(
                                                                    std::llround(cum * static_cast<double>(members.size()))));
                hi = std::max(hi, lo);
                shards[c].indices.insert(shards[c].indices.end(), members.begin() + static_cast<std::ptrdiff_t>(lo),
                                         members.begin() + static_cast<std::ptrdiff_t>(hi));
                lo = hi;
            }
        }
        // every client needs at least one sample
        for (auto& shard : shards) {
            if (!shard.indices.empty()) continue;
            auto largest = std::max_element(shards.begin(), shards.end(), [](const Shard& a, const Shard& b) {
                return a.indices.size() < b.indices.size();
            });
            shard.indices.push_back(largest->indices.back());
            largest->indices.pop_back();
        }
    }
    for (auto& shard : shards) std::sort(shard.indices.begin(), shard.indices.end());
    return shards;
}

std::vector<std::vector<std::size_t>> label_histograms(const Dataset& data, const std::vector<Shard>& shards) {
    std::vector<std::vector<std::size_t>> out(shards.size(), std::vector<std::size_t>(static_cast<std::size_t>(data.classes), 0));
    for (std::size_t c = 0; c < shards.size(); ++c)
        for (auto i : shards[c].indices) ++out[c][static_cast<std::size_t>(data.labels.at(i))];
    return out;
}

namespace {
std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorKind::parse, path + ": truncated IDX header");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}
}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, int classes) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw Error(ErrorKind::io, "cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw Error(ErrorKind::io, "cannot open " + labels_path);
    if (read_be32(img, images_path) != 0x00000803) throw Error(ErrorKind::parse, images_path + ": bad IDX image magic");
    if (read_be32(lab, labels_path) != 0x00000801) throw Error(ErrorKind::parse, labels_path + ": bad IDX label magic");
    const std::uint32_t count = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);
    if (read_be32(lab, labels_path) != count) throw Error(ErrorKind::parse, "IDX image and label counts differ");

    Dataset out;
    out.classes = classes;
    out.samples.resize(count, static_cast<Eigen::Index>(rows) * cols);
    out.labels.resize(count);
    std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
            throw Error(ErrorKind::parse, images_path + ": truncated pixel data");
        for (std::size_t j = 0; j < buf.size(); ++j) out.samples(i, static_cast<Eigen::Index>(j)) = buf[j] / 255.0;
        char y;
        if (!lab.get(y)) throw Error(ErrorKind::parse, labels_path + ": truncated label data");
        out.labels[i] = static_cast<unsigned char>(y);
    }
    out.validate();
    return out;
}

void write_shard_manifest(std::ostream& out, const std::vector<Shard>& shards) {
    for (const auto& s : shards) {
        nlohmann::json j{{"client", s.client}, {"indices", s.indices}};
        out << j.dump() << '\n';
    }
}

std::vector<Shard> read_shard_manifest(std::istream& in) {
    std::vector<Shard> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            Shard s;
            s.client = j.at("client").get<std::size_t>();
            s.indices = j.at("indices").get<std::vector<std::size_t>>();
            out.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::parse, "shard manifest line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace fedprov
