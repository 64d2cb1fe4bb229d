#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "fedprov/config.hpp"
#include "fedprov/data.hpp"
#include "fedprov/defense.hpp"
#include "fedprov/metrics.hpp"
#include "fedprov/model.hpp"
#include "fedprov/params.hpp"
#include "fedprov/provenance.hpp"

namespace fedprov {

/// n distinct ids drawn uniformly without replacement, ascending.
std::vector<std::size_t> select_clients(std::size_t clients, std::size_t n, std::size_t round, std::uint64_t seed);

/// G + eta * sum(accepted).
LayeredParams aggregate(const LayeredParams& global, std::span<const LayeredParams> accepted, double eta);

/// First ceil(fraction * clients) ids of a seeded shuffle, ascending.
std::vector<std::size_t> malicious_ids(std::size_t clients, double fraction, std::uint64_t seed);

struct RoundRecord {
    std::size_t t = 0;
    std::vector<std::size_t> selected;
    std::vector<bool> malicious;             // attacked this round
    std::vector<LayeredParams> updates;
    LayeredParams global_before, global_after;
    double eta = 0.0;
    std::vector<bool> accepted;
    bool robust_aggregate = false;           // global_after came from the defense, not FedAvg
    std::vector<Verdict> verdicts;
    std::vector<ProvenanceRecord> provenance;
    CategoryAccuracy accuracy;
    std::optional<double> asr;
};

/// Round data without tensors; kept for the whole run.
struct RoundSummary {
    std::size_t t = 0;
    std::vector<std::size_t> selected;
    std::vector<bool> malicious;
    std::vector<bool> accepted;
    std::vector<Verdict> verdicts;
    std::vector<ProvenanceRecord> provenance;
    CategoryAccuracy accuracy;
    std::optional<double> asr;
    DetectionCounts counts;
};

nlohmann::json round_log_json(const RoundSummary& s);

class Simulation {
public:
    explicit Simulation(ExperimentConfig cfg);

    bool done() const { return round_ >= cfg_.rounds; }
    const RoundRecord& step();

    const ExperimentConfig& config() const { return cfg_; }
    const Architecture& arch() const { return arch_; }
    const LayeredParams& global() const { return global_; }
    const std::deque<RoundRecord>& history() const { return history_; }
    const std::vector<RoundSummary>& summaries() const { return summaries_; }
    const std::vector<std::size_t>& compromised() const { return compromised_; }
    const Dataset& test_set() const { return split_.test; }
    const Dataset& trojan_set() const { return trojan_; }
    bool has_trojan() const { return trojan_.size() > 0; }
    std::size_t assumed_malicious() const { return assumed_m_; }

private:
    bool attacking(std::size_t t) const;
    LayeredParams benign_update(std::size_t id, std::size_t t, const TrainConfig& base) const;
    LayeredParams backdoor_update(std::size_t id, std::size_t t, AttackType kind, bool feature_only = false) const;
    LayeredParams attacked_update(std::size_t id, std::size_t t) const;
    void apply_mb(std::vector<LayeredParams>& updates, const std::vector<std::size_t>& selected,
                  const std::vector<bool>& malicious, std::size_t t) const;

    ExperimentConfig cfg_;
    Architecture arch_;
    TrainTest split_;
    Dataset trojan_;
    std::vector<Dataset> client_data_;
    std::vector<std::size_t> compromised_;
    std::vector<bool> is_compromised_;
    std::size_t assumed_m_ = 0;
    std::unique_ptr<Defense> defense_;
    LayeredParams global_;
    LayeredParams prev_update_;
    std::size_t round_ = 0;
    std::deque<RoundRecord> history_;
    std::vector<RoundSummary> summaries_;
};

}  // namespace fedprov
