#pragma once

// Noiseless diagonal linear domain system used by the Kalman round-trip checks:
//   D^t = F1 D^{t-1} + F2 D(G)^{t-1},  D(G)^t = D(G)^{t-1} + P D(Theta)^t
// with D(Theta) drawn at random so D and D(G) are not collinear.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fedprov/domain.hpp"

namespace fixture {

struct DomainSystem {
    std::vector<double> f1, f2, p;
    std::vector<fedprov::DomainObservation> states;
};

inline DomainSystem simulate_domain(std::size_t k, std::size_t rounds, std::uint64_t seed, double f1 = 0.5,
                                    double f2 = 0.1) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.5, 1.5);
    DomainSystem s;
    s.f1.assign(k, f1);
    s.f2.assign(k, f2);
    for (std::size_t l = 0; l < k; ++l) s.p.push_back(u(rng));
    fedprov::DomainObservation o;
    for (std::size_t l = 0; l < k; ++l) {
        o.d.push_back(g(rng));
        o.dg.push_back(g(rng));
        o.dtheta.push_back(g(rng));
    }
    s.states.push_back(o);
    for (std::size_t t = 1; t < rounds; ++t) {
        const auto& prev = s.states.back();
        fedprov::DomainObservation cur;
        for (std::size_t l = 0; l < k; ++l) {
            const double dtheta = g(rng);
            cur.d.push_back(s.f1[l] * prev.d[l] + s.f2[l] * prev.dg[l]);
            cur.dg.push_back(prev.dg[l] + s.p[l] * dtheta);
            cur.dtheta.push_back(dtheta);
        }
        s.states.push_back(cur);
    }
    return s;
}

// Largest relative error |pred - D| / |D| over held-out one-step predictions after fitting on `fit` rounds.
inline double heldout_error(const DomainSystem& s, std::size_t fit, std::size_t held) {
    const std::span<const fedprov::DomainObservation> window(s.states.data(), fit);
    const auto model = fedprov::fit_domain_model(window, s.f1.size());
    double worst = 0.0;
    for (std::size_t t = fit; t < fit + held; ++t) {
        const auto pred = fedprov::predict_domain(model, s.states[t - 1].d, s.states[t - 1].dg);
        double num = 0, den = 0;
        for (std::size_t l = 0; l < pred.size(); ++l) {
            const double truth = s.states[t].d[l];
            num += (pred[l] - truth) * (pred[l] - truth);
            den += truth * truth;
        }
        worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-300));
    }
    return worst;
}

}  // namespace fixture
