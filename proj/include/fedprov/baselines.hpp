#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedprov/params.hpp"

namespace fedprov {

enum class KrumCount { classic, adjusted };   // n - 2m - 2 or n - m - 2 accepted

/// Ids selected by iterated Krum scoring, in selection order.
std::vector<std::size_t> multi_krum(std::span<const LayeredParams> updates, std::size_t m,
                                    KrumCount count = KrumCount::adjusted);

/// Coordinate-wise lower median.
LayeredParams median_aggregate(std::span<const LayeredParams> updates);

struct DncConfig {
    double subsample = 0.1;
    std::size_t iterations = 5;
    double c = 1.0;
};

/// Ascending ids flagged in any iteration.
std::vector<std::size_t> dnc_detect(std::span<const LayeredParams> updates, std::size_t m, const DncConfig& cfg,
                                    std::uint64_t seed);

}  // namespace fedprov
