#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "json.hpp"

namespace fedprov {

/// One round of a client's domain state: its distance to its reference (D),
/// the global update's distance (D(G)) and the other clients' (D(Theta)).
struct DomainObservation {
    std::vector<double> d, dg, dtheta;
    bool operator==(const DomainObservation&) const = default;
};

/// Diagonal per-layer state model:
///   D^t  = F1 D^{t-1} + F2 D(G)^{t-1} + H*Omega + W
///   D(G)^t - D(G)^{t-1} = Omega + P D(Theta)^t
struct DomainParams {
    std::vector<double> f1, f2, omega, h, w, p;
    bool fitted = false;
    bool operator==(const DomainParams&) const = default;
};

struct DomainModel {
    DomainParams params;
    std::vector<std::vector<double>> reference;                  // CAM^r, per layer
    std::deque<std::vector<std::vector<double>>> ref_window;     // last benign CAMs
    std::vector<DomainObservation> history;                      // benign observations, oldest first
    bool operator==(const DomainModel&) const = default;
};

inline constexpr double kDefaultRidge = 1e-6;

/// Ridge least squares on consecutive history entries. Needs >= 3 entries,
/// otherwise returns an unfitted model.
DomainParams fit_domain_model(std::span<const DomainObservation> history, std::size_t layers,
                              double ridge = kDefaultRidge);

/// Throws ErrorKind::not_fitted on an unfitted model.
std::vector<double> predict_domain(const DomainParams& model, std::span<const double> d_prev,
                                   std::span<const double> dg_prev);

/// Refits Omega from the latest history with every other parameter frozen.
void refit_omega(DomainParams& model, std::span<const DomainObservation> history);

/// Per-layer ddist of a CAM against a reference.
std::vector<double> domain_distance(const std::vector<std::vector<double>>& cam,
                                    const std::vector<std::vector<double>>& reference);

/// Benign verdicts push the CAM into the rolling reference window (size `window`);
/// malicious verdicts leave the model untouched.
void update_reference(DomainModel& model, const std::vector<std::vector<double>>& cam, bool benign,
                      std::size_t window = 3);

nlohmann::json domain_model_to_json(const DomainModel& m);
DomainModel domain_model_from_json(const nlohmann::json& j);

}  // namespace fedprov
