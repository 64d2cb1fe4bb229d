#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"

#include "fedprov/kernels.hpp"
#include "fedprov/model.hpp"
#include "fedprov/params.hpp"
#include "fedprov/robust.hpp"

namespace fedprov {

/// Decoupled features of one client's update within one round.
struct FeatureSet {
    std::vector<std::int8_t> signv;
    std::vector<std::uint32_t> sortv;
    std::vector<double> classv;
    std::vector<std::vector<double>> cam;   // one anomaly vector per conv layer
    std::vector<double> featv;              // per fully-connected layer scores, conv-free models

    bool operator==(const FeatureSet&) const = default;
};

std::vector<std::int8_t> extract_signv(std::span<const double> u);

/// Ranks per coordinate, ascending value, ties by client id. Result is [client][coordinate].
RankTable extract_sortv(const std::vector<std::vector<double>>& us);
RankTable extract_sortv(std::span<const LayeredParams> updates);

/// Classifier weights followed by classifier biases.
std::vector<double> extract_classv(const LayeredParams& update);

/// Normalised Mahalanobis scores of n >= 3 kernel vectors (rows).
std::vector<double> score_conv_kernel(const RowMatrix& kernels);

/// CAM for every client; `extras` are scored in each kernel population's space.
CamResult extract_cam(std::span<const LayeredParams> updates, std::span<const LayeredParams> extras = {});

/// [client][fc layer] MAD score of the 1-component projection of each
/// fully-connected (non-classifier) layer.
std::vector<std::vector<double>> extract_featv(std::span<const LayeredParams> updates, const MadConfig& mad = {});

/// All features for a round. CAM when the model has conv layers, featv otherwise.
std::vector<FeatureSet> extract_features(std::span<const LayeredParams> updates);

// Serialization.
nlohmann::json feature_set_to_json(const FeatureSet& f);
FeatureSet feature_set_from_json(const nlohmann::json& j);
void write_feature_set(std::ostream& out, const FeatureSet& f);
FeatureSet read_feature_set(std::istream& in);

}  // namespace fedprov
