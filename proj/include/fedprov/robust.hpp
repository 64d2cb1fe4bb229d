#pragma once

#include <span>
#include <vector>

namespace fedprov {

/// Score assigned to points off an exact-consensus median (zero MAD).
inline constexpr double kMadSentinel = 1e300;

struct MadConfig {
    double b = 1.4826;
    double lambda = 2.5;

    void validate() const;
};

/// Lower median for even counts.
double lower_median(std::span<const double> values);

/// |z_i - med(z)| / (b * med_j |z_j - med(z)|). When the denominator is zero,
/// points at the median score 0 and every other point scores kMadSentinel.
std::vector<double> mad_scores(std::span<const double> z, const MadConfig& cfg = {});

/// Indices with score > lambda.
std::vector<std::size_t> mad_flags(std::span<const double> z, const MadConfig& cfg = {});

/// Least-squares slope of values against positions 1..k (0 for k < 2).
double regression_slope(std::span<const double> values);
/// (last - first) / (k - 1).
double endpoint_slope(std::span<const double> values);

}  // namespace fedprov
