#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fedprov/model.hpp"

namespace fedprov {

struct Dataset {
    RowMatrix samples;         // one row per sample
    std::vector<int> labels;   // in [0, classes)
    int classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(samples.cols()); }

    Dataset subset(std::span<const std::size_t> indices) const;
    /// Throws if labels fall outside [0, classes) or shapes disagree.
    void validate() const;
};

/// Gaussian clusters, one per category, with seeded means drawn from N(0, 1)
/// per feature and isotropic noise of standard deviation `spread`. Samples
/// are grouped by category in generation order.
Dataset generate_synthetic(int classes, std::size_t per_class, std::size_t dim, double spread,
                           std::uint64_t seed);

/// Splits a dataset generated with `per_class_train + per_class_test` per
/// category into train and test parts that share the same cluster means.
struct TrainTest {
    Dataset train;
    Dataset test;
};
TrainTest generate_synthetic_split(int classes, std::size_t per_class_train, std::size_t per_class_test,
                                   std::size_t dim, double spread, std::uint64_t seed);

enum class PartitionMode { iid, dirichlet };

struct PartitionPlan {
    PartitionMode mode = PartitionMode::iid;
    double concentration = 0.5;   // Dirichlet d
    std::size_t clients = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Shard {
    std::size_t client = 0;
    std::vector<std::size_t> indices;   // ascending
};

/// Disjoint shards covering the dataset, one per client.
std::vector<Shard> partition(const Dataset& data, const PartitionPlan& plan);

/// Per-client label histogram (rows = clients, cols = categories).
std::vector<std::vector<std::size_t>> label_histograms(const Dataset& data, const std::vector<Shard>& shards);

/// IDX images (magic 0x00000803) and labels (0x00000801), big-endian. Pixel
/// bytes are scaled to [0, 1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path, int classes = 10);

/// JSON-lines: {"client": id, "indices": [...]} per line.
void write_shard_manifest(std::ostream& out, const std::vector<Shard>& shards);
std::vector<Shard> read_shard_manifest(std::istream& in);

}  // namespace fedprov
