#include "fedprov/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fedprov/data.hpp"
#include "fedprov/error.hpp"

namespace fedprov {

namespace {

struct ConvGeometry {
    std::size_t cin, h, w, cout, k, oh, ow, ph, pw;
};

std::vector<ConvGeometry> conv_geometry(const Architecture& arch) {
    std::vector<ConvGeometry> out;
    std::size_t c = arch.input.channels, h = arch.input.height, w = arch.input.width;
    for (const auto& block : arch.convs) {
        if (block.kernel == 0 || block.kernel > h || block.kernel > w || block.out_channels == 0)
            throw Error(ErrorKind::invalid_argument, "conv block does not fit its input");
        ConvGeometry g{c, h, w, block.out_channels, block.kernel, h - block.kernel + 1, w - block.kernel + 1, 0, 0};
        g.ph = g.oh / 2;
        g.pw = g.ow / 2;
        if (g.ph == 0 || g.pw == 0) throw Error(ErrorKind::invalid_argument, "conv output too small to pool");
        out.push_back(g);
        c = g.cout;
        h = g.ph;
        w = g.pw;
    }
    return out;
}

// Per-sample activations and the backward pass over one parameter set.
class Network {
public:
    Network(const Architecture& arch, const LayeredParams& params)
        : arch_(arch), params_(params), geo_(conv_geometry(arch)) {
        conv_in_.resize(geo_.size());
        conv_pre_.resize(geo_.size());
        conv_argmax_.resize(geo_.size());
        for (std::size_t i = 0; i < geo_.size(); ++i) {
            const auto& g = geo_[i];
            conv_in_[i].resize(g.cin * g.h * g.w);
            conv_pre_[i].resize(g.cout * g.oh * g.ow);
            conv_argmax_[i].resize(g.cout * g.ph * g.pw);
        }
        std::size_t width = arch.dense_input_dim();
        std::vector<std::size_t> widths{width};
        for (auto hdn : arch.hidden) widths.push_back(hdn);
        widths.push_back(arch.classes);
        dense_in_.resize(widths.size() - 1);
        dense_pre_.resize(widths.size() - 1);
        for (std::size_t j = 0; j + 1 < widths.size(); ++j) {
            dense_in_[j].resize(widths[j]);
            dense_pre_[j].resize(widths[j + 1]);
        }
    }

    const std::vector<double>& forward(const double* x) {
        const std::size_t nconv = geo_.size();
        const double* input = x;
        for (std::size_t li = 0; li < nconv; ++li) {
            const auto& g = geo_[li];
            auto& in = conv_in_[li];
            std::copy(input, input + in.size(), in.begin());
            auto W = params_.layer(2 * li);
            auto b = params_.layer(2 * li + 1);
            auto& pre = conv_pre_[li];
            for (std::size_t o = 0; o < g.cout; ++o)
                for (std::size_t i = 0; i < g.oh; ++i)
                    for (std::size_t j = 0; j < g.ow; ++j) {
                        double s = b[o];
                        for (std::size_t c = 0; c < g.cin; ++c)
                            for (std::size_t ky = 0; ky < g.k; ++ky) {
                                const double* wrow = &W[((o * g.cin + c) * g.k + ky) * g.k];
                                const double* xrow = &in[(c * g.h + i + ky) * g.w + j];
                                for (std::size_t kx = 0; kx < g.k; ++kx) s += wrow[kx] * xrow[kx];
                            }
                        pre[(o * g.oh + i) * g.ow + j] = s;
                    }
            // pooled output feeds the next stage
            double* pooled = li + 1 < nconv ? conv_in_[li + 1].data() : dense_in_[0].data();
            auto& am = conv_argmax_[li];
            for (std::size_t o = 0; o < g.cout; ++o)
                for (std::size_t pi = 0; pi < g.ph; ++pi)
                    for (std::size_t pj = 0; pj < g.pw; ++pj) {
                        std::size_t best = (o * g.oh + 2 * pi) * g.ow + 2 * pj;
                        for (std::size_t di = 0; di < 2; ++di)
                            for (std::size_t dj = 0; dj < 2; ++dj) {
                                std::size_t idx = (o * g.oh + 2 * pi + di) * g.ow + 2 * pj + dj;
                                if (pre[idx] > pre[best]) best = idx;
                            }
                        std::size_t out_idx = (o * g.ph + pi) * g.pw + pj;
                        am[out_idx] = best;
                        pooled[out_idx] = std::max(0.0, pre[best]);
                    }
            input = pooled;
        }
        if (nconv == 0) std::copy(x, x + dense_in_[0].size(), dense_in_[0].begin());

        const std::size_t ndense = dense_in_.size();
        for (std::size_t j = 0; j < ndense; ++j) {
            auto W = params_.layer(2 * nconv + 2 * j);
            auto b = params_.layer(2 * nconv + 2 * j + 1);
            const auto& in = dense_in_[j];
            auto& pre = dense_pre_[j];
            const std::size_t nin = in.size();
            for (std::size_t r = 0; r < pre.size(); ++r) {
                double s = b[r];
                const double* wr = &W[r * nin];
                for (std::size_t c = 0; c < nin; ++c) s += wr[c] * in[c];
                pre[r] = s;
            }
            if (j + 1 < ndense)
                for (std::size_t r = 0; r < pre.size(); ++r) dense_in_[j + 1][r] = std::max(0.0, pre[r]);
        }
        return dense_pre_.back();
    }

    // Accumulates d(loss)/d(params) for the sample last passed to forward().
    void backward(std::vector<double> dout, LayeredParams& grad) {
        const std::size_t nconv = geo_.size();
        const std::size_t ndense = dense_in_.size();
        for (std::size_t jj = ndense; jj-- > 0;) {
            auto W = params_.layer(2 * nconv + 2 * jj);
            auto gW = grad.layer(2 * nconv + 2 * jj);
            auto gb = grad.layer(2 * nconv + 2 * jj + 1);
            const auto& in = dense_in_[jj];
            const std::size_t nin = in.size();
            std::vector<double> din(nin, 0.0);
            for (std::size_t r = 0; r < dout.size(); ++r) {
                const double d = dout[r];
                gb[r] += d;
                if (d == 0.0) continue;
                double* gwr = &gW[r * nin];
                const double* wr = &W[r * nin];
                for (std::size_t c = 0; c < nin; ++c) {
                    gwr[c] += d * in[c];
                    din[c] += d * wr[c];
                }
            }
            if (jj > 0) {
                const auto& prev_pre = dense_pre_[jj - 1];
                for (std::size_t c = 0; c < nin; ++c)
                    if (prev_pre[c] <= 0.0) din[c] = 0.0;
            }
            dout = std::move(din);
        }
        // dout now holds the gradient w.r.t. the flattened pooled conv output
        for (std::size_t li = nconv; li-- > 0;) {
            const auto& g = geo_[li];
            const auto& pre = conv_pre_[li];
            const auto& am = conv_argmax_[li];
            std::vector<double> dpre(pre.size(), 0.0);
            for (std::size_t q = 0; q < am.size(); ++q)
                if (pre[am[q]] > 0.0) dpre[am[q]] += dout[q];
            auto W = params_.layer(2 * li);
            auto gW = grad.layer(2 * li);
            auto gb = grad.layer(2 * li + 1);
            const auto& in = conv_in_[li];
            const bool need_din = li > 0;
            std::vector<double> din(need_din ? in.size() : 0, 0.0);
            for (std::size_t o = 0; o < g.cout; ++o)
                for (std::size_t i = 0; i < g.oh; ++i)
                    for (std::size_t j = 0; j < g.ow; ++j) {
                        const double d = dpre[(o * g.oh + i) * g.ow + j];
                        if (d == 0.0) continue;
                        gb[o] += d;
                        for (std::size_t c = 0; c < g.cin; ++c)
                            for (std::size_t ky = 0; ky < g.k; ++ky) {
                                const std::size_t wbase = ((o * g.cin + c) * g.k + ky) * g.k;
                                const std::size_t xbase = (c * g.h + i + ky) * g.w + j;
                                for (std::size_t kx = 0; kx < g.k; ++kx) {
                                    gW[wbase + kx] += d * in[xbase + kx];
                                    if (need_din) din[xbase + kx] += d * W[wbase + kx];
                                }
                            }
                    }
            dout = std::move(din);
        }
    }

private:
    const Architecture& arch_;
    const LayeredParams& params_;
    std::vector<ConvGeometry> geo_;
    std::vector<std::vector<double>> conv_in_, conv_pre_;
    std::vector<std::vector<std::size_t>> conv_argmax_;
    std::vector<std::vector<double>> dense_in_, dense_pre_;
};

void check_input(const Architecture& arch, const LayeredParams& model, std::size_t cols) {
    if (model.specs() != arch.layer_specs())
        throw Error(ErrorKind::incompatible, "model parameters do not match the architecture");
    if (cols != arch.input_dim())
        throw Error(ErrorKind::incompatible, "batch width " + std::to_string(cols) + " != model input " +
                                                 std::to_string(arch.input_dim()));
}

}  // namespace

std::size_t Architecture::dense_input_dim() const {
    if (convs.empty()) return input.size();
    const auto geo = conv_geometry(*this);
    const auto& g = geo.back();
    return g.cout * g.ph * g.pw;
}

std::vector<LayerSpec> Architecture::layer_specs() const {
    std::vector<LayerSpec> specs;
    auto push = [&](LayerKind kind, std::vector<std::size_t> shape) {
        specs.push_back(LayerSpec{specs.size(), kind, std::move(shape)});
    };
    std::size_t cin = input.channels;
    for (const auto& block : convs) {
        push(LayerKind::conv, {block.out_channels, cin, block.kernel, block.kernel});
        push(LayerKind::bias, {block.out_channels});
        cin = block.out_channels;
    }
    std::size_t width = dense_input_dim();
    for (auto hdn : hidden) {
        push(LayerKind::fully_connected, {hdn, width});
        push(LayerKind::bias, {hdn});
        width = hdn;
    }
    push(LayerKind::classifier_weight, {classes, width});
    push(LayerKind::classifier_bias, {classes});
    return specs;
}

Architecture Architecture::simple_net(InputShape in, std::size_t classes, std::size_t c1, std::size_t c2,
                                      std::size_t hidden_width) {
    Architecture a;
    a.input = in;
    a.convs = {ConvBlock{c1, 3}, ConvBlock{c2, 3}};
    a.hidden = {hidden_width};
    a.classes = classes;
    return a;
}

Architecture Architecture::dnn(std::size_t in, std::size_t hidden_width, std::size_t classes) {
    Architecture a;
    a.input = InputShape{1, 1, in};
    a.hidden = {hidden_width};
    a.classes = classes;
    return a;
}

Architecture Architecture::linear(std::size_t in, std::size_t classes) {
    Architecture a;
    a.input = InputShape{1, 1, in};
    a.classes = classes;
    return a;
}

LayeredParams init_params(const Architecture& arch, std::uint64_t seed) {
    LayeredParams p(arch.layer_specs());
    Rng rng(derive_seed(seed, {stream::init}));
    double bound = 1.0;
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        const auto& s = p.spec(l);
        if (s.kind != LayerKind::bias && s.kind != LayerKind::classifier_bias) {
            const std::size_t fan_in = s.size() / s.shape[0];
            bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        }
        // biases reuse the bound of the weight tensor they follow
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& v : p.layer(l)) v = dist(rng);
    }
    return p;
}

RowMatrix forward(const Architecture& arch, const LayeredParams& model, const RowMatrix& batch) {
    check_input(arch, model, static_cast<std::size_t>(batch.cols()));
    Network net(arch, model);
    RowMatrix out(batch.rows(), static_cast<Eigen::Index>(arch.classes));
    for (Eigen::Index r = 0; r < batch.rows(); ++r) {
        const auto& logits = net.forward(batch.row(r).data());
        for (std::size_t c = 0; c < arch.classes; ++c) out(r, static_cast<Eigen::Index>(c)) = logits[c];
    }
    return out;
}

std::vector<int> predict(const Architecture& arch, const LayeredParams& model, const RowMatrix& batch) {
    const RowMatrix scores = forward(arch, model, batch);
    std::vector<int> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        Eigen::Index best = 0;
        scores.row(r).maxCoeff(&best);
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

double loss_and_gradient(const Architecture& arch, const LayeredParams& model, const Batch& batch, Loss loss,
                         LayeredParams& grad) {
    check_input(arch, model, static_cast<std::size_t>(batch.x.cols()));
    if (batch.size() == 0) throw Error(ErrorKind::empty_data, "loss_and_gradient: empty batch");
    if (!grad.compatible(model)) grad = LayeredParams::zeros_like(model);
    std::fill(grad.values().begin(), grad.values().end(), 0.0);

    Network net(arch, model);
    double total = 0.0;
    std::vector<double> dout(arch.classes);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto& logits = net.forward(batch.x.row(static_cast<Eigen::Index>(r)).data());
        const auto label = static_cast<std::size_t>(batch.y[r]);
        if (loss == Loss::cross_entropy) {
            const double mx = *std::max_element(logits.begin(), logits.end());
            double z = 0.0;
            for (std::size_t c = 0; c < arch.classes; ++c) {
                dout[c] = std::exp(logits[c] - mx);
                z += dout[c];
            }
            for (std::size_t c = 0; c < arch.classes; ++c) dout[c] /= z;
            total += -std::log(std::max(dout[label], std::numeric_limits<double>::min()));
            dout[label] -= 1.0;
        } else {
            for (std::size_t c = 0; c < arch.classes; ++c) {
                const double diff = logits[c] - (c == label ? 1.0 : 0.0);
                dout[c] = diff;
                total += 0.5 * diff * diff;
            }
        }
        net.backward(dout, grad);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    grad *= inv;
    return total * inv;
}

LayeredParams train_local(const Architecture& arch, const LayeredParams& global, const Dataset& data,
                          const TrainConfig& cfg, const StepGradient& step) {
    if (data.size() == 0) throw Error(ErrorKind::empty_data, "train_local: empty shard");
    if (cfg.batch_size == 0 || !(cfg.learning_rate > 0.0))
        throw Error(ErrorKind::invalid_argument, "train_local: batch size and learning rate must be positive");
    check_input(arch, global, data.dim());

    // SGD runs on the update itself so that global + update is the trained model by construction.
    LayeredParams update = LayeredParams::zeros_like(global);
    LayeredParams model = global;
    LayeredParams grad = LayeredParams::zeros_like(global);
    Rng shuffle_rng(derive_seed(cfg.seed, {stream::shuffle}));
    Rng step_rng(derive_seed(cfg.seed, {stream::poison}));

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Batch batch;
    const auto dim = static_cast<Eigen::Index>(data.dim());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            batch.x.resize(static_cast<Eigen::Index>(len), dim);
            batch.y.resize(len);
            for (std::size_t r = 0; r < len; ++r) {
                batch.x.row(static_cast<Eigen::Index>(r)) = data.samples.row(static_cast<Eigen::Index>(order[start + r]));
                batch.y[r] = data.labels[order[start + r]];
            }
            if (step)
                step(model, batch, grad, step_rng);
            else
                loss_and_gradient(arch, model, batch, cfg.loss, grad);
            auto u = update.values();
            auto g = grad.values();
            auto m = model.values();
            auto base = global.values();
            for (std::size_t i = 0; i < u.size(); ++i) {
                u[i] -= cfg.learning_rate * g[i];
                m[i] = base[i] + u[i];
            }
        }
    }
    return update;
}

}  // namespace fedprov
