#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "fedprov/attacks.hpp"
#include "fedprov/baselines.hpp"
#include "fedprov/data.hpp"
#include "fedprov/detection.hpp"
#include "fedprov/model.hpp"
#include "fedprov/robust.hpp"

namespace fedprov {

struct ModelConfig {
    std::string arch = "simple_net";   // simple_net | dnn | linear
    std::size_t channels = 1, height = 16, width = 16;
    std::size_t conv1 = 8, conv2 = 16, hidden = 32;

    Architecture architecture(int classes) const;
};

struct DataConfig {
    std::string source = "synthetic";   // synthetic | idx
    int classes = 10;
    std::size_t per_class_train = 100;
    std::size_t per_class_test = 50;
    double spread = 1.0;
    PartitionMode partition = PartitionMode::iid;
    double concentration = 0.5;
    std::string train_images, train_labels, test_images, test_labels;
};

struct DetectionConfig {
    std::string defense = "none";   // none | mkrum | median | dnc | fltracer | oracle
    MadConfig mad;
    double tau = -0.9;
    SlopeMode slope = SlopeMode::regression;
    std::size_t reference_window = 3;
    std::string fit_mode = "sliding";   // sliding | once
    std::size_t fit_window = 6;
    bool drift = false;
    /// Rounds during which domain models are only accumulated and unfitted
    /// candidates are not confirmed.
    std::size_t bootstrap_rounds = 0;
    std::optional<std::size_t> assumed_malicious;   // default ceil(P_m * n)
    KrumCount krum_count = KrumCount::adjusted;
    DncConfig dnc;
    double magnitude_ratio = 5.0;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::size_t rounds = 30;
    std::size_t clients = 20;
    std::size_t per_round = 10;
    double malicious_fraction = 0.0;
    std::size_t attack_start = 0;
    ModelConfig model;
    DataConfig data;
    TrainConfig train;
    TrainConfig malicious_train{0.005, 4, 64, 0, Loss::cross_entropy};
    AttackSpec attack;
    DetectionConfig detection;
    bool dump_updates = true;
    bool clean_baseline = false;   // also run attack-free, defense-free for CAD
    std::size_t retain_rounds = 8;

    void validate() const;
};

/// Fully-populated JSON view; the key set is the accepted schema.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// Rejects unknown keys and mistyped values with the dotted path in the message.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Parse errors carry line/column diagnostics.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Sets one dotted-path field, e.g. "detection.defense".
void set_config_value(ExperimentConfig& cfg, const std::string& path, const nlohmann::json& value);

}  // namespace fedprov
