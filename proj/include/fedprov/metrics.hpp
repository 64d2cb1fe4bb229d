#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedprov/data.hpp"
#include "fedprov/model.hpp"

namespace fedprov {

struct CategoryAccuracy {
    double acc = 0.0;
    std::vector<std::optional<double>> per_class;   // absent for categories with no test samples
    double wca = 0.0;
    double bca = 0.0;
};

double accuracy(std::span<const int> predicted, std::span<const int> truth);
CategoryAccuracy category_accuracy(std::span<const int> predicted, std::span<const int> truth, int classes);
CategoryAccuracy evaluate(const Architecture& arch, const LayeredParams& model, const Dataset& test);

/// Population standard deviation; needs at least 2 points.
double stability(std::span<const double> series);

/// Share of trojan samples predicted as `target`.
double asr(const Architecture& arch, const LayeredParams& model, const Dataset& trojan, int target);

/// First index with value >= threshold; nullopt when the horizon is exceeded.
std::optional<std::size_t> bir(std::span<const double> asr_series, double threshold = 0.9);
/// First index with value <= threshold.
std::optional<std::size_t> brr(std::span<const double> asr_series, double threshold = 0.1);

struct DetectionCounts {
    std::size_t tp = 0, fn = 0, fp = 0, tn = 0;

    std::optional<double> tpr() const;
    std::optional<double> fpr() const;
    DetectionCounts& operator+=(const DetectionCounts& o);
};

/// Counts over one round's participants.
DetectionCounts count_detections(std::span<const bool> flagged, std::span<const bool> malicious);

double cad(double clean_baseline, double current);

/// One CSV header line plus one row; absent values print as NA.
using MetricsRow = std::vector<std::pair<std::string, std::optional<double>>>;
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

}  // namespace fedprov
