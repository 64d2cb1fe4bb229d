#include "fedprov/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "fedprov/error.hpp"

namespace fedprov {

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw Error(ErrorKind::incompatible, "accuracy: length mismatch");
    if (truth.empty()) throw Error(ErrorKind::empty_data, "accuracy: empty test set");
    std::size_t ok = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) ok += predicted[i] == truth[i];
    return static_cast<double>(ok) / static_cast<double>(truth.size());
}

CategoryAccuracy category_accuracy(std::span<const int> predicted, std::span<const int> truth, int classes) {
    CategoryAccuracy out;
    out.acc = accuracy(predicted, truth);
    std::vector<std::size_t> total(static_cast<std::size_t>(classes), 0), ok(total);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= classes) throw Error(ErrorKind::out_of_bounds, "category_accuracy: label out of range");
        ++total[static_cast<std::size_t>(truth[i])];
        ok[static_cast<std::size_t>(truth[i])] += predicted[i] == truth[i];
    }
    out.per_class.resize(total.size());
    bool first = true;
    for (std::size_t c = 0; c < total.size(); ++c) {
        if (total[c] == 0) continue;
        const double ca = static_cast<double>(ok[c]) / static_cast<double>(total[c]);
        out.per_class[c] = ca;
        out.wca = first ? ca : std::min(out.wca, ca);
        out.bca = first ? ca : std::max(out.bca, ca);
        first = false;
    }
    return out;
}

CategoryAccuracy evaluate(const Architecture& arch, const LayeredParams& model, const Dataset& test) {
    const auto pred = predict(arch, model, test.samples);
    return category_accuracy(pred, test.labels, test.classes);
}

double stability(std::span<const double> series) {
    if (series.size() < 2) throw Error(ErrorKind::insufficient_population, "stability needs at least 2 points");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(series.size());
    double ss = 0.0;
    for (double v : series) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(series.size()));
}

double asr(const Architecture& arch, const LayeredParams& model, const Dataset& trojan, int target) {
    if (trojan.size() == 0) throw Error(ErrorKind::empty_data, "asr: empty trojan set");
    const auto pred = predict(arch, model, trojan.samples);
    std::size_t hit = 0;
    for (int p : pred) hit += p == target;
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

std::optional<std::size_t> bir(std::span<const double> s, double threshold) {
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] >= threshold) return i;
    return std::nullopt;
}

std::optional<std::size_t> brr(std::span<const double> s, double threshold) {
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] <= threshold) return i;
    return std::nullopt;
}

std::optional<double> DetectionCounts::tpr() const {
    if (tp + fn == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

std::optional<double> DetectionCounts::fpr() const {
    if (fp + tn == 0) return std::nullopt;
    return static_cast<double>(fp) / static_cast<double>(fp + tn);
}

DetectionCounts& DetectionCounts::operator+=(const DetectionCounts& o) {
    tp += o.tp;
    fn += o.fn;
    fp += o.fp;
    tn += o.tn;
    return *this;
}

DetectionCounts count_detections(std::span<const bool> flagged, std::span<const bool> malicious) {
    if (flagged.size() != malicious.size()) throw Error(ErrorKind::incompatible, "count_detections: length mismatch");
    DetectionCounts c;
    for (std::size_t i = 0; i < flagged.size(); ++i) {
        if (malicious[i])
            (flagged[i] ? c.tp : c.fn)++;
        else
            (flagged[i] ? c.fp : c.tn)++;
    }
    return c;
}

double cad(double clean_baseline, double current) { return clean_baseline - current; }

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    if (rows.empty()) return;
    for (std::size_t c = 0; c < rows[0].size(); ++c) out << (c ? "," : "") << rows[0][c].first;
    out << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c ? "," : "");
            if (row[c].second)
                out << *row[c].second;
            else
                out << "NA";
        }
        out << '\n';
    }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
    std::vector<MetricsRow> rows;
    std::string line;
    if (!std::getline(in, line)) return rows;
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        MetricsRow row;
        for (const auto& name : header) {
            if (!std::getline(ss, cell, ',')) throw Error(ErrorKind::parse, "metrics csv: short row");
            if (cell == "NA")
                row.emplace_back(name, std::nullopt);
            else
                row.emplace_back(name, std::stod(cell));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace fedprov
