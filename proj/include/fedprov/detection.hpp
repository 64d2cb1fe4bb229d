#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedprov/model.hpp"
#include "fedprov/robust.hpp"

namespace fedprov {

struct LocalResult {
    std::vector<std::size_t> flagged;
    std::vector<double> scores;   // MAD score per client
};

/// 1-component PCA projection of the rows followed by MAD flagging.
LocalResult local_anomaly_detect(const RowMatrix& vectors, const MadConfig& mad = {});

/// Cosine similarity of the mean-centred vectors. Two constant vectors give 1;
/// a constant vector against a non-constant one gives 0.
double tsim(std::span<const double> a, std::span<const double> b);

/// Signed mean of a - b.
double ddist(std::span<const double> a, std::span<const double> b);

enum class SlopeMode { regression, endpoint };
double slope(std::span<const double> values, SlopeMode mode);

struct TaskReport {
    std::vector<std::vector<double>> alpha;   // [client][layer]
    std::vector<std::size_t> determined;
    std::vector<std::size_t> candidates;
    double tau = -0.9;
};

/// cams is [client][layer][entries]. Needs n >= 3 and at least 2 layers.
TaskReport task_detect(const std::vector<std::vector<std::vector<double>>>& cams, double tau = -0.9,
                       SlopeMode mode = SlopeMode::regression);

/// Delta = D - D_hat for one participant of the round.
struct DomainEvidence {
    std::size_t client = 0;
    bool fitted = false;
    std::vector<double> delta;
};

struct DomainReport {
    std::vector<std::size_t> determined;   // incoming determined set plus confirmed candidates
    std::vector<std::size_t> confirmed;    // candidates confirmed here
    std::map<std::size_t, double> delta_slope;
    std::map<std::size_t, double> delta_mean;
};

/// MAD populations are all fitted participants in `evidence`. Candidates
/// without a fitted model are confirmed directly.
DomainReport domain_detect(const std::vector<DomainEvidence>& evidence, const std::vector<std::size_t>& candidates,
                           const std::vector<std::size_t>& determined, const MadConfig& mad = {},
                           SlopeMode mode = SlopeMode::regression);

struct FeatureFlags {
    bool signv = false, sortv = false, classv = false, task = false, domain = false;
    bool any() const { return signv || sortv || classv || task || domain; }
    bool operator==(const FeatureFlags&) const = default;
};

struct Verdict {
    std::size_t client = 0;
    std::size_t round = 0;
    FeatureFlags flags;
    std::map<std::string, double> scores;
    bool confirmed = false;
};

nlohmann::json verdict_to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

}  // namespace fedprov
