#include "fedprov/features.hpp"

#include <algorithm>
#include <numeric>

#include "fedprov/error.hpp"
#include "fedprov/pca.hpp"

namespace fedprov {

std::vector<std::int8_t> extract_signv(std::span<const double> u) {
    std::vector<std::int8_t> out(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) out[j] = static_cast<std::int8_t>((u[j] > 0.0) - (u[j] < 0.0));
    return out;
}

RankTable extract_sortv(const std::vector<std::vector<double>>& us) {
    if (us.empty()) return {};
    const std::size_t len = us[0].size();
    for (const auto& u : us)
        if (u.size() != len) throw Error(ErrorKind::incompatible, "extract_sortv: update lengths differ");
    RankTable out(us.size(), std::vector<std::uint32_t>(len, 0));
    std::vector<std::uint32_t> order(us.size());
    for (std::size_t j = 0; j < len; ++j) {
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return us[a][j] < us[b][j]; });
        for (std::size_t r = 0; r < order.size(); ++r) out[order[r]][j] = static_cast<std::uint32_t>(r);
    }
    return out;
}

RankTable extract_sortv(std::span<const LayeredParams> updates) { return parallel::rank_coordinates(updates); }

std::vector<double> extract_classv(const LayeredParams& update) {
    const auto w = update.find(LayerKind::classifier_weight);
    const auto b = update.find(LayerKind::classifier_bias);
    if (w == update.layer_count() || b == update.layer_count())
        throw Error(ErrorKind::invalid_argument, "extract_classv: model has no classifier layers");
    std::vector<double> out(update.layer(w).begin(), update.layer(w).end());
    out.insert(out.end(), update.layer(b).begin(), update.layer(b).end());
    return out;
}

std::vector<double> score_conv_kernel(const RowMatrix& kernels) {
    return score_kernel_population(kernels, RowMatrix(0, kernels.cols())).population;
}

CamResult extract_cam(std::span<const LayeredParams> updates, std::span<const LayeredParams> extras) {
    return parallel::conv_anomaly(updates, extras);
}

std::vector<std::vector<double>> extract_featv(std::span<const LayeredParams> updates, const MadConfig& mad) {
    if (updates.size() < 3) throw Error(ErrorKind::insufficient_population, "featv needs at least 3 clients");
    for (const auto& u : updates) u.require_compatible(updates[0], "extract_featv");
    const auto layers = updates[0].layers_of(LayerKind::fully_connected);
    std::vector<std::vector<double>> out(updates.size(), std::vector<double>(layers.size(), 0.0));
    for (std::size_t s = 0; s < layers.size(); ++s) {
        const std::size_t l = layers[s];
        const auto width = static_cast<Eigen::Index>(updates[0].spec(l).size());
        RowMatrix pts(static_cast<Eigen::Index>(updates.size()), width);
        for (std::size_t i = 0; i < updates.size(); ++i) {
            auto v = updates[i].layer(l);
            std::copy(v.begin(), v.end(), pts.row(static_cast<Eigen::Index>(i)).data());
        }
        const PcaResult p = pca(pts, 1);
        if (p.scores.cols() == 0) continue;
        std::vector<double> z(updates.size());
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = p.scores(static_cast<Eigen::Index>(i), 0);
        const auto rho = mad_scores(z, mad);
        for (std::size_t i = 0; i < z.size(); ++i) out[i][s] = rho[i];
    }
    return out;
}

std::vector<FeatureSet> extract_features(std::span<const LayeredParams> updates) {
    std::vector<FeatureSet> out(updates.size());
    if (updates.empty()) return out;
    const RankTable ranks = extract_sortv(updates);
    for (std::size_t i = 0; i < updates.size(); ++i) {
        out[i].signv = extract_signv(updates[i].values());
        out[i].sortv = ranks[i];
        out[i].classv = extract_classv(updates[i]);
    }
    if (updates.size() < 3) return out;
    if (!updates[0].layers_of(LayerKind::conv).empty()) {
        CamResult cam = extract_cam(updates);
        for (std::size_t i = 0; i < updates.size(); ++i) out[i].cam = std::move(cam.clients[i]);
    } else {
        auto fv = extract_featv(updates);
        for (std::size_t i = 0; i < updates.size(); ++i) out[i].featv = std::move(fv[i]);
    }
    return out;
}

}  // namespace fedprov
