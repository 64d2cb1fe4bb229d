#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedprov {

enum class LayerKind : std::uint8_t {
    conv = 0,
    fully_connected = 1,
    bias = 2,
    classifier_weight = 3,
    classifier_bias = 4,
};

const char* to_string(LayerKind kind);

/// Shape metadata for one parameter tensor. Conv kernels are stored as
/// out_channels x in_channels x kernel_h x kernel_w; fully-connected weights
/// as out x in. Both are row-major in the flat buffer.
struct LayerSpec {
    std::size_t index = 0;
    LayerKind kind = LayerKind::fully_connected;
    std::vector<std::size_t> shape;

    std::size_t size() const;
    bool operator==(const LayerSpec&) const = default;
};

/// Model or update parameters, organised by layer over one contiguous buffer.
/// Layer order is the declared order; that order is also the flattening
/// order used by every feature extractor.
class LayeredParams {
public:
    LayeredParams() = default;
    explicit LayeredParams(std::vector<LayerSpec> specs);

    /// Zero-filled parameters with the same structure as `like`.
    static LayeredParams zeros_like(const LayeredParams& like);

    std::size_t layer_count() const { return specs_.size(); }
    std::size_t total_len() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    const std::vector<LayerSpec>& specs() const { return specs_; }
    const LayerSpec& spec(std::size_t layer) const { return specs_.at(layer); }

    std::span<double> layer(std::size_t layer);
    std::span<const double> layer(std::size_t layer) const;
    std::size_t offset(std::size_t layer) const { return offsets_.at(layer); }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    /// First layer of the given kind, or layer_count() if absent.
    std::size_t find(LayerKind kind) const;
    std::vector<std::size_t> layers_of(LayerKind kind) const;

    bool compatible(const LayeredParams& other) const { return specs_ == other.specs_; }
    /// Throws ErrorKind::incompatible with `context` in the message.
    void require_compatible(const LayeredParams& other, const std::string& context) const;

    LayeredParams& operator+=(const LayeredParams& other);
    LayeredParams& operator-=(const LayeredParams& other);
    LayeredParams& operator*=(double scale);

    double norm() const;

    bool operator==(const LayeredParams& other) const = default;

private:
    std::vector<LayerSpec> specs_;
    std::vector<std::size_t> offsets_;
    std::vector<double> values_;
};

LayeredParams operator+(LayeredParams lhs, const LayeredParams& rhs);
LayeredParams operator-(LayeredParams lhs, const LayeredParams& rhs);
LayeredParams operator*(double scale, LayeredParams p);

std::vector<double> flatten(const LayeredParams& p);
/// Inverse of flatten for a known structure.
LayeredParams unflatten(const std::vector<LayerSpec>& specs, std::span<const double> flat);

}  // namespace fedprov
