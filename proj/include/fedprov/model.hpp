#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "fedprov/params.hpp"
#include "fedprov/rng.hpp"

namespace fedprov {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset;

struct InputShape {
    std::size_t channels = 1;
    std::size_t height = 1;
    std::size_t width = 1;

    std::size_t size() const { return channels * height * width; }
    bool operator==(const InputShape&) const = default;
};

/// Valid 2-D convolution (stride 1), ReLU, then 2x2 max-pool (stride 2, floor).
struct ConvBlock {
    std::size_t out_channels = 0;
    std::size_t kernel = 3;
    bool operator==(const ConvBlock&) const = default;
};

/// Feed-forward architecture: conv blocks, ReLU hidden fully-connected layers,
/// then a linear classifier. Every weight tensor is followed by its bias.
struct Architecture {
    InputShape input;
    std::vector<ConvBlock> convs;
    std::vector<std::size_t> hidden;
    std::size_t classes = 0;

    std::vector<LayerSpec> layer_specs() const;
    std::size_t input_dim() const { return input.size(); }
    /// Width of the flattened conv output feeding the first dense layer.
    std::size_t dense_input_dim() const;

    /// 2 conv blocks + 1 hidden FC + classifier.
    static Architecture simple_net(InputShape in, std::size_t classes, std::size_t c1 = 8,
                                   std::size_t c2 = 16, std::size_t hidden_width = 32);
    /// 2-FC MLP: one hidden layer + classifier.
    static Architecture dnn(std::size_t in, std::size_t hidden_width, std::size_t classes);
    /// Classifier only.
    static Architecture linear(std::size_t in, std::size_t classes);

    bool operator==(const Architecture&) const = default;
};

enum class Loss { cross_entropy, squared };

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t epochs = 2;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    Loss loss = Loss::cross_entropy;
};

struct Batch {
    RowMatrix x;
    std::vector<int> y;
    std::size_t size() const { return y.size(); }
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
LayeredParams init_params(const Architecture& arch, std::uint64_t seed);

/// One row of category scores (logits) per input row.
RowMatrix forward(const Architecture& arch, const LayeredParams& model, const RowMatrix& batch);

/// Mean loss over the batch; gradient written into `grad` (overwritten).
double loss_and_gradient(const Architecture& arch, const LayeredParams& model, const Batch& batch,
                         Loss loss, LayeredParams& grad);

/// Computes the descent direction for one minibatch. Returns the loss.
using StepGradient = std::function<double(const LayeredParams& model, const Batch& batch,
                                          LayeredParams& grad, Rng& rng)>;

/// Minibatch SGD from `global` over `data`; returns the update
/// trained - global. `step` defaults to plain loss_and_gradient.
LayeredParams train_local(const Architecture& arch, const LayeredParams& global, const Dataset& data,
                          const TrainConfig& cfg, const StepGradient& step = {});

std::vector<int> predict(const Architecture& arch, const LayeredParams& model, const RowMatrix& batch);

}  // namespace fedprov
