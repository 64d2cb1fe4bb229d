#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedprov/attacks.hpp"
#include "fedprov/detection.hpp"

namespace fedprov {

enum class Objective { untargeted, backdoor };
enum class TracedType { sign_flipping, adaptive_untargeted_or_noise_or_mra, dirty_label, backdoor };

const char* to_string(Objective o);
const char* to_string(TracedType t);
TracedType traced_type_from_string(const std::string& s);

/// Traced type expected for a simulated attack.
std::optional<TracedType> expected_trace(AttackType t);

/// Everything trace() looks at for one client.
struct ClientEvidence {
    std::size_t client = 0;
    FeatureFlags flags;
    std::vector<double> alpha;               // task similarity per conv layer, may be empty
    std::vector<std::size_t> conv_layers;    // parameter-layer index of each alpha entry
    double norm_ratio = 1.0;                 // |theta| / median |theta| of the round
    std::map<std::string, double> scores;
};

struct ProvenanceRecord {
    std::size_t client = 0;
    std::size_t round = 0;
    Objective objective = Objective::untargeted;
    TracedType type = TracedType::adaptive_untargeted_or_noise_or_mra;
    std::vector<std::string> locations;
    std::vector<std::size_t> suspect_layers;
    bool likely_mra = false;
    std::map<std::string, double> evidence;
};

struct TraceConfig {
    double magnitude_ratio = 5.0;
};

/// A client is malicious when any feature fired.
std::vector<std::size_t> joint_decision(const std::vector<ClientEvidence>& clients);

/// One record per malicious client.
std::vector<ProvenanceRecord> trace(const std::vector<ClientEvidence>& clients, std::size_t round,
                                    const TraceConfig& cfg = {});

struct TracingAccuracy {
    std::map<TracedType, double> per_type;   // keyed by ground-truth type; absent when no sample
    std::optional<double> overall;
    std::size_t correct = 0, total = 0;
};

/// Records of truly malicious clients only; `truth` maps client to its attack.
TracingAccuracy tracing_accuracy(const std::vector<ProvenanceRecord>& records,
                                 const std::map<std::size_t, AttackType>& truth);

nlohmann::json record_to_json(const ProvenanceRecord& r);
ProvenanceRecord record_from_json(const nlohmann::json& j);

/// Human-readable per-client summary, grouped by traced type.
void write_provenance_summary(std::ostream& out, const std::vector<ProvenanceRecord>& records);

}  // namespace fedprov
