#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedprov/config.hpp"
#include "fedprov/detection.hpp"
#include "fedprov/domain.hpp"
#include "fedprov/params.hpp"
#include "fedprov/provenance.hpp"

namespace fedprov {

struct DefenseInput {
    std::size_t round = 0;
    const std::vector<std::size_t>& ids;
    const std::vector<LayeredParams>& updates;
    const LayeredParams& prev_global_update;   // G^t - G^{t-1}, zeros in the first round
    const std::vector<bool>& truth;            // read only by the oracle
    std::uint64_t seed = 0;
};

struct DefenseOutput {
    std::vector<bool> accepted;
    std::vector<Verdict> verdicts;
    std::vector<ProvenanceRecord> records;
    std::optional<LayeredParams> aggregate;   // replaces the FedAvg step when set
};

class Defense {
public:
    virtual ~Defense() = default;
    virtual DefenseOutput run(const DefenseInput& in) = 0;
};

/// `assumed_malicious` is the m used by Multi-Krum and DnC.
std::unique_ptr<Defense> make_defense(const DetectionConfig& cfg, std::size_t assumed_malicious);

/// Feature-decoupled detection with per-client domain models.
class FlTracer : public Defense {
public:
    explicit FlTracer(DetectionConfig cfg) : cfg_(std::move(cfg)) {}
    DefenseOutput run(const DefenseInput& in) override;
    const std::map<std::size_t, DomainModel>& models() const { return models_; }

private:
    void refit(DomainModel& m) const;

    DetectionConfig cfg_;
    std::map<std::size_t, DomainModel> models_;
};

}  // namespace fedprov
