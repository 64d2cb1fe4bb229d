#include "fedprov/kernels.hpp"
#include "../kernel_jobs.hpp"

namespace fedprov::reference {

RankTable rank_coordinates(std::span<const LayeredParams> updates) {
    RankTable out = detail::allocate_ranks(updates);
    if (updates.empty()) return out;
    std::vector<std::uint32_t> order;
    for (std::size_t j = 0; j < updates[0].total_len(); ++j) detail::rank_coordinate(updates, j, order, out);
    return out;
}

CamResult conv_anomaly(std::span<const LayeredParams> updates, std::span<const LayeredParams> extras) {
    CamResult out = detail::allocate_cam(updates, extras);
    for (const auto& job : detail::conv_jobs(updates[0])) detail::run_conv_job(updates, extras, job, out);
    return out;
}

}  // namespace fedprov::reference
