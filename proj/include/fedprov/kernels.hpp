#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedprov/model.hpp"
#include "fedprov/params.hpp"

// Data-parallel hot loops. The fedprov::parallel versions use OpenMP; the
// fedprov::reference versions are straight serial loops kept as test oracles
// and benchmark baselines. Both write each output slot from exactly one
// iteration, so results are bit-identical regardless of thread count.

namespace fedprov {

using RankTable = std::vector<std::vector<std::uint32_t>>;   // [client][coordinate]

/// Per-layer anomaly vectors: [client][layer][out_channel * in_channel + in].
using CamTable = std::vector<std::vector<std::vector<double>>>;

struct CamResult {
    CamTable clients;
    CamTable extras;   // extra vectors scored against the client population
};

namespace parallel {

/// Ranks clients per coordinate by ascending value, ties by client id.
RankTable rank_coordinates(std::span<const LayeredParams> updates);

/// Kernel-population anomaly scores for every conv layer. `extras` are scored
/// in each kernel population's fitted space, normalised by the same maximum.
CamResult conv_anomaly(std::span<const LayeredParams> updates, std::span<const LayeredParams> extras);

/// Trains several independent jobs; job i writes result i only.
template <typename Job>
void for_each_index(std::size_t count, const Job& job) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) job(static_cast<std::size_t>(i));
}

}  // namespace parallel

namespace reference {

RankTable rank_coordinates(std::span<const LayeredParams> updates);
CamResult conv_anomaly(std::span<const LayeredParams> updates, std::span<const LayeredParams> extras);

template <typename Job>
void for_each_index(std::size_t count, const Job& job) {
    for (std::size_t i = 0; i < count; ++i) job(i);
}

}  // namespace reference

/// Scores one kernel population (rows = clients) with 2-component PCA and
/// Mahalanobis distance, normalised by the population maximum. Extra rows
/// are scored in the same space.
struct KernelScores {
    std::vector<double> population;
    std::vector<double> extras;
};
KernelScores score_kernel_population(const RowMatrix& kernels, const RowMatrix& extras);

/// Applies the thread cap from FEDPROV_THREADS when set; returns the cap in effect.
int configure_threads_from_env();

}  // namespace fedprov
