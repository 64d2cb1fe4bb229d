#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fedprov/data.hpp"
#include "fedprov/model.hpp"
#include "fedprov/params.hpp"

namespace fixture {

inline void fill_gaussian(fedprov::LayeredParams& p, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    for (auto& v : p.values()) v = g(rng);
}

inline fedprov::LayeredParams random_like(const fedprov::LayeredParams& like, std::mt19937_64& rng, double scale = 1.0) {
    auto p = fedprov::LayeredParams::zeros_like(like);
    fill_gaussian(p, rng, scale);
    return p;
}

inline fedprov::LayeredParams flat_params(const std::vector<double>& v) {
    fedprov::LayeredParams p({fedprov::LayerSpec{0, fedprov::LayerKind::fully_connected, {v.size()}}});
    std::copy(v.begin(), v.end(), p.values().begin());
    return p;
}

inline fedprov::Architecture tiny_cnn(std::size_t classes = 3) {
    return fedprov::Architecture::simple_net({1, 10, 10}, classes, 2, 3, 5);
}

inline fedprov::Batch random_batch(const fedprov::Architecture& arch, std::size_t rows, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    fedprov::Batch b;
    b.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(arch.input_dim()));
    for (Eigen::Index r = 0; r < b.x.rows(); ++r)
        for (Eigen::Index c = 0; c < b.x.cols(); ++c) b.x(r, c) = g(rng);
    for (std::size_t r = 0; r < rows; ++r) b.y.push_back(static_cast<int>(rng() % arch.classes));
    return b;
}

struct GradCheck {
    std::string layer;
    double rel_err = 0.0;
};

// Central differences on every parameter; relative error per layer is
// |g - fd| / max(|g|, |fd|) over that layer's coordinates.
inline std::vector<GradCheck> gradient_check(const fedprov::Architecture& arch, fedprov::Loss loss, std::uint64_t seed,
                                             double eps = 1e-4) {
    std::mt19937_64 rng(seed);
    auto model = fedprov::init_params(arch, seed);
    const auto batch = random_batch(arch, 4, rng);
    fedprov::LayeredParams grad;
    fedprov::loss_and_gradient(arch, model, batch, loss, grad);
    fedprov::LayeredParams scratch;
    std::vector<GradCheck> out;
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        double diff = 0.0, ng = 0.0, nf = 0.0;
        auto w = model.layer(l);
        const auto g = grad.layer(l);
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double keep = w[i];
            w[i] = keep + eps;
            const double up = fedprov::loss_and_gradient(arch, model, batch, loss, scratch);
            w[i] = keep - eps;
            const double down = fedprov::loss_and_gradient(arch, model, batch, loss, scratch);
            w[i] = keep;
            const double fd = (up - down) / (2 * eps);
            diff += (fd - g[i]) * (fd - g[i]);
            ng += g[i] * g[i];
            nf += fd * fd;
        }
        // a layer with no gradient at all (dead units) is compared absolutely
        const double scale = std::max(ng, nf);
        const double denom = scale < 1e-20 ? 1.0 : std::sqrt(scale);
        out.push_back({std::string(fedprov::to_string(model.spec(l).kind)) + "#" + std::to_string(l), std::sqrt(diff) / denom});
    }
    return out;
}

}  // namespace fixture
