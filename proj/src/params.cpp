#include "fedprov/params.hpp"

#include <cmath>
#include <numeric>

#include "fedprov/error.hpp"

namespace fedprov {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::incompatible: return "incompatible";
        case ErrorKind::empty_data: return "empty_data";
        case ErrorKind::infeasible_partition: return "infeasible_partition";
        case ErrorKind::insufficient_population: return "insufficient_population";
        case ErrorKind::insufficient_colluders: return "insufficient_colluders";
        case ErrorKind::out_of_bounds: return "out_of_bounds";
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::not_fitted: return "not_fitted";
        case ErrorKind::parse: return "parse";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv: return "conv";
        case LayerKind::fully_connected: return "fully_connected";
        case LayerKind::bias: return "bias";
        case LayerKind::classifier_weight: return "classifier_weight";
        case LayerKind::classifier_bias: return "classifier_bias";
    }
    return "unknown";
}

std::size_t LayerSpec::size() const {
    if (shape.empty()) return 0;
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

LayeredParams::LayeredParams(std::vector<LayerSpec> specs) : specs_(std::move(specs)) {
    std::size_t total = 0;
    offsets_.reserve(specs_.size());
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        auto& s = specs_[i];
        if (s.index != i)
            throw Error(ErrorKind::invalid_argument, "layer index " + std::to_string(s.index) +
                                                          " declared at position " + std::to_string(i));
        if (s.size() == 0)
            throw Error(ErrorKind::invalid_argument, "layer " + std::to_string(i) + " has empty shape");
        if (s.kind == LayerKind::conv && s.shape.size() != 4)
            throw Error(ErrorKind::invalid_argument, "conv layer " + std::to_string(i) + " must have 4 dims");
        offsets_.push_back(total);
        total += s.size();
    }
    values_.assign(total, 0.0);
}

LayeredParams LayeredParams::zeros_like(const LayeredParams& like) {
    LayeredParams out;
    out.specs_ = like.specs_;
    out.offsets_ = like.offsets_;
    out.values_.assign(like.values_.size(), 0.0);
    return out;
}

std::span<double> LayeredParams::layer(std::size_t layer) {
    return std::span<double>(values_).subspan(offsets_.at(layer), specs_[layer].size());
}

std::span<const double> LayeredParams::layer(std::size_t layer) const {
    return std::span<const double>(values_).subspan(offsets_.at(layer), specs_[layer].size());
}

std::size_t LayeredParams::find(LayerKind kind) const {
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (specs_[i].kind == kind) return i;
    return specs_.size();
}

std::vector<std::size_t> LayeredParams::layers_of(LayerKind kind) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (specs_[i].kind == kind) out.push_back(i);
    return out;
}

void LayeredParams::require_compatible(const LayeredParams& other, const std::string& context) const {
    if (!compatible(other))
        throw Error(ErrorKind::incompatible, context + ": parameter structures differ");
}

LayeredParams& LayeredParams::operator+=(const LayeredParams& other) {
    require_compatible(other, "operator+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

LayeredParams& LayeredParams::operator-=(const LayeredParams& other) {
    require_compatible(other, "operator-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

LayeredParams& LayeredParams::operator*=(double scale) {
    for (auto& v : values_) v *= scale;
    return *this;
}

double LayeredParams::norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
}

LayeredParams operator+(LayeredParams lhs, const LayeredParams& rhs) { return lhs += rhs; }
LayeredParams operator-(LayeredParams lhs, const LayeredParams& rhs) { return lhs -= rhs; }
LayeredParams operator*(double scale, LayeredParams p) { return p *= scale; }

std::vector<double> flatten(const LayeredParams& p) {
    auto v = p.values();
    return {v.begin(), v.end()};
}

LayeredParams unflatten(const std::vector<LayerSpec>& specs, std::span<const double> flat) {
    LayeredParams out(specs);
    if (flat.size() != out.total_len())
        throw Error(ErrorKind::incompatible, "unflatten: expected " + std::to_string(out.total_len()) +
                                                 " values, got " + std::to_string(flat.size()));
    std::copy(flat.begin(), flat.end(), out.values().begin());
    return out;
}

}  // namespace fedprov
