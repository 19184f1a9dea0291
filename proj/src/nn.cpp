#include "sbn/nn.hpp"

#include <cmath>
#include <string>

#include "sbn/errors.hpp"

namespace sbn {

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation act, double dropout)
    : in_dim(in), out_dim(out), weights(in * out, 0.0), bias(out, 0.0), activation(act),
      dropout_rate(dropout) {
    if (in == 0 || out == 0) throw ConfigError("dense layer dims must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout rate must be in [0,1)");
}

void layer_forward(const DenseLayer& layer, std::span<const double> x, Mode mode, Rng* dropout_rng,
                   LayerCache& cache) {
    if (x.size() != layer.in_dim)
        throw ConfigError("dense forward: input length " + std::to_string(x.size()) +
                          " != in_dim " + std::to_string(layer.in_dim));
    cache.input.assign(x.begin(), x.end());
    cache.preact.resize(layer.out_dim);
    cache.act.resize(layer.out_dim);

    const double* w = layer.weights.data();
    for (std::size_t i = 0; i < layer.out_dim; ++i) {
        double acc = layer.bias[i];
        const double* row = w + i * layer.in_dim;
        for (std::size_t j = 0; j < layer.in_dim; ++j) acc += row[j] * x[j];
        cache.preact[i] = acc;
        cache.act[i] = layer.activation == Activation::relu ? (acc > 0.0 ? acc : 0.0) : acc;
    }

    const bool drop = mode == Mode::train && layer.dropout_rate > 0.0;
    if (drop) {
        if (!dropout_rng) throw ConfigError("dropout layer needs an rng in train mode");
        cache.mask.resize(layer.out_dim);
        const double keep_scale = 1.0 / (1.0 - layer.dropout_rate);
        for (std::size_t i = 0; i < layer.out_dim; ++i) {
            cache.mask[i] = dropout_rng->bernoulli(layer.dropout_rate) ? 0.0 : keep_scale;
            cache.act[i] *= cache.mask[i];
        }
    } else {
        cache.mask.clear();
    }
}

void layer_backward(const DenseLayer& layer, const LayerCache& cache, std::span<const double> dy,
                    LayerGrads& grads, double* dx) {
    if (dy.size() != layer.out_dim || cache.preact.size() != layer.out_dim ||
        cache.input.size() != layer.in_dim)
        throw ConfigError("dense backward: cache does not match layer");

    if (dx)
        for (std::size_t j = 0; j < layer.in_dim; ++j) dx[j] = 0.0;

    for (std::size_t i = 0; i < layer.out_dim; ++i) {
        double d = dy[i];
        if (!cache.mask.empty()) d *= cache.mask[i];
        if (layer.activation == Activation::relu && cache.preact[i] <= 0.0) d = 0.0;
        grads.bias[i] += d;
        double* wrow = grads.weights.data() + i * layer.in_dim;
        const double* row = layer.weights.data() + i * layer.in_dim;
        for (std::size_t j = 0; j < layer.in_dim; ++j) {
            wrow[j] += d * cache.input[j];
            if (dx) dx[j] += d * row[j];
        }
    }
}

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
}

void DenseNet::forward(std::span<const double> x, Mode mode, Rng* dropout_rng,
                       ForwardCache& cache) const {
    if (layers.empty()) throw ConfigError("forward on empty net");
    if (x.size() != layers.front().in_dim)
        throw ConfigError("net forward: input length " + std::to_string(x.size()) +
                          " != in_dim " + std::to_string(layers.front().in_dim));
    for (double v : x)
        if (!std::isfinite(v)) throw NumericError("net forward: non-finite input");

    cache.layers.resize(layers.size());
    std::span<const double> cur = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layer_forward(layers[i], cur, mode, dropout_rng, cache.layers[i]);
        cur = cache.layers[i].act;
    }
}

std::vector<double> DenseNet::forward(std::span<const double> x, Mode mode,
                                      Rng* dropout_rng) const {
    ForwardCache cache;
    forward(x, mode, dropout_rng, cache);
    return cache.output();
}

void DenseNet::backward(const ForwardCache& cache, std::span<const double> dy, NetGrads& grads,
                        std::vector<double>* dx) const {
    if (cache.layers.size() != layers.size() || grads.layers.size() != layers.size())
        throw ConfigError("net backward: cache/grads do not match net");

    std::vector<double> cur(dy.begin(), dy.end());
    std::vector<double> prev;
    for (std::size_t i = layers.size(); i-- > 0;) {
        const bool want_dx = i > 0 || dx != nullptr;
        prev.resize(layers[i].in_dim);
        layer_backward(layers[i], cache.layers[i], cur, grads.layers[i],
                       want_dx ? prev.data() : nullptr);
        cur.swap(prev);
    }
    if (dx) *dx = std::move(cur);
}

NetGrads DenseNet::make_grads() const {
    NetGrads g;
    g.layers.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        g.layers[i].weights.assign(layers[i].weights.size(), 0.0);
        g.layers[i].bias.assign(layers[i].bias.size(), 0.0);
    }
    return g;
}

void NetGrads::zero() {
    for (auto& l : layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
}

double mse(std::span<const double> pred, std::span<const double> target) {
    if (pred.empty() || pred.size() != target.size())
        throw UsageError("mse needs two equal-length non-empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

void init_glorot(DenseLayer& layer, Rng& rng) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.in_dim + layer.out_dim));
    for (auto& w : layer.weights) w = rng.uniform(-limit, limit);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
}

void init_glorot(DenseNet& net, Rng& rng) {
    for (auto& layer : net.layers) init_glorot(layer, rng);
}

AdamState::AdamState(std::size_t n_params, double lr, double decay)
    : first_moment(n_params, 0.0), second_moment(n_params, 0.0), base_lr(lr),
      per_batch_decay(decay) {
    if (lr <= 0.0 || decay <= 0.0 || decay > 1.0)
        throw ConfigError("adam: lr must be positive and decay in (0,1]");
}

double AdamState::effective_lr() const {
    return base_lr * std::pow(per_batch_decay, static_cast<double>(step_count));
}

void adam_step(std::span<double* const> params, std::span<const double> grads, AdamState& state) {
    const std::size_t n = params.size();
    if (grads.size() != n || state.first_moment.size() != n)
        throw ConfigError("adam: parameter/gradient/state sizes differ");
    for (double g : grads)
        if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient");

    const double lr = state.effective_lr();
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);

    for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        *params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

} // namespace sbn
