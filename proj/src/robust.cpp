#include "fedprov/robust.hpp"

#include <algorithm>
#include <cmath>

#include "fedprov/error.hpp"

namespace fedprov {

namespace {
// Midpoint median for the detection statistics.
double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (n % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}
}  // namespace

void MadConfig::validate() const {
    if (!(b > 0.0) || !(lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "MAD b and lambda must be positive");
}

double lower_median(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::insufficient_population, "median of empty set");
    std::vector<double> v(values.begin(), values.end());
    const std::size_t k = (v.size() - 1) / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

std::vector<double> mad_scores(std::span<const double> z, const MadConfig& cfg) {
    if (z.empty()) throw Error(ErrorKind::insufficient_population, "mad_scores: empty input");
    const double med = median_of({z.begin(), z.end()});
    std::vector<double> dev(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) dev[i] = std::abs(z[i] - med);
    const double xi = cfg.b * median_of(dev);
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (xi > 0.0)
            out[i] = dev[i] / xi;
        else
            out[i] = dev[i] == 0.0 ? 0.0 : kMadSentinel;
    }
    return out;
}

std::vector<std::size_t> mad_flags(std::span<const double> z, const MadConfig& cfg) {
    const auto s = mad_scores(z, cfg);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] > cfg.lambda) out.push_back(i);
    return out;
}

double regression_slope(std::span<const double> values) {
    const std::size_t k = values.size();
    if (k < 2) return 0.0;
    const double xbar = (static_cast<double>(k) + 1.0) / 2.0;
    double ybar = 0.0;
    for (double v : values) ybar += v;
    ybar /= static_cast<double>(k);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double dx = static_cast<double>(i + 1) - xbar;
        sxy += dx * (values[i] - ybar);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

double endpoint_slope(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    return (values.back() - values.front()) / static_cast<double>(values.size() - 1);
}

}  // namespace fedprov
