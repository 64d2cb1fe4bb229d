#pragma once

// Per-iteration bodies shared by the parallel and reference kernels.

#include <algorithm>
#include <numeric>

#include "fedprov/error.hpp"
#include "fedprov/kernels.hpp"

namespace fedprov::detail {

inline void check_population(std::span<const LayeredParams> updates, const char* who) {
    for (const auto& u : updates) u.require_compatible(updates[0], who);
}

inline RankTable allocate_ranks(std::span<const LayeredParams> updates) {
    if (updates.empty()) return {};
    check_population(updates, "rank_coordinates");
    return RankTable(updates.size(), std::vector<std::uint32_t>(updates[0].total_len(), 0));
}

inline void rank_coordinate(std::span<const LayeredParams> updates, std::size_t j, std::vector<std::uint32_t>& order,
                            RankTable& out) {
    const std::size_t n = updates.size();
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    // insertion sort: stable, so ties keep ascending client id
    for (std::size_t a = 1; a < n; ++a) {
        const std::uint32_t id = order[a];
        const double v = updates[id].values()[j];
        std::size_t b = a;
        while (b > 0 && updates[order[b - 1]].values()[j] > v) {
            order[b] = order[b - 1];
            --b;
        }
        order[b] = id;
    }
    for (std::size_t r = 0; r < n; ++r) out[order[r]][j] = static_cast<std::uint32_t>(r);
}

struct ConvJob {
    std::size_t layer_slot;   // position among conv layers
    std::size_t layer;        // index in LayeredParams
    std::size_t out_ch, in_ch;
};

inline std::vector<ConvJob> conv_jobs(const LayeredParams& like) {
    std::vector<ConvJob> jobs;
    const auto convs = like.layers_of(LayerKind::conv);
    for (std::size_t s = 0; s < convs.size(); ++s) {
        const auto& shape = like.spec(convs[s]).shape;
        for (std::size_t o = 0; o < shape[0]; ++o)
            for (std::size_t c = 0; c < shape[1]; ++c) jobs.push_back({s, convs[s], o, c});
    }
    return jobs;
}

inline CamResult allocate_cam(std::span<const LayeredParams> updates, std::span<const LayeredParams> extras) {
    if (updates.size() < 3)
        throw Error(ErrorKind::insufficient_population, "CAM extraction needs at least 3 clients");
    check_population(updates, "conv_anomaly");
    for (const auto& e : extras) e.require_compatible(updates[0], "conv_anomaly extras");
    const auto convs = updates[0].layers_of(LayerKind::conv);
    if (convs.empty()) throw Error(ErrorKind::invalid_argument, "CAM extraction needs at least one conv layer");
    std::vector<std::vector<double>> shape;
    for (auto l : convs) {
        const auto& s = updates[0].spec(l).shape;
        shape.emplace_back(s[0] * s[1], 0.0);
    }
    CamResult out;
    out.clients.assign(updates.size(), shape);
    out.extras.assign(extras.size(), shape);
    return out;
}

inline void run_conv_job(std::span<const LayeredParams> updates, std::span<const LayeredParams> extras, const ConvJob& job,
                         CamResult& out) {
    const auto& shape = updates[0].spec(job.layer).shape;
    const std::size_t ksize = shape[2] * shape[3];
    const std::size_t offset = (job.out_ch * shape[1] + job.in_ch) * ksize;
    RowMatrix pop(static_cast<Eigen::Index>(updates.size()), static_cast<Eigen::Index>(ksize));
    for (std::size_t i = 0; i < updates.size(); ++i) {
        auto w = updates[i].layer(job.layer);
        for (std::size_t q = 0; q < ksize; ++q) pop(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) = w[offset + q];
    }
    RowMatrix ext(static_cast<Eigen::Index>(extras.size()), static_cast<Eigen::Index>(ksize));
    for (std::size_t i = 0; i < extras.size(); ++i) {
        auto w = extras[i].layer(job.layer);
        for (std::size_t q = 0; q < ksize; ++q) ext(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) = w[offset + q];
    }
    const KernelScores s = score_kernel_population(pop, ext);
    const std::size_t slot = job.out_ch * shape[1] + job.in_ch;
    for (std::size_t i = 0; i < updates.size(); ++i) out.clients[i][job.layer_slot][slot] = s.population[i];
    for (std::size_t i = 0; i < extras.size(); ++i) out.extras[i][job.layer_slot][slot] = s.extras[i];
}

}  // namespace fedprov::detail
