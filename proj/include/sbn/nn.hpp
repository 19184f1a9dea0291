#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sbn/rng.hpp"

namespace sbn {

enum class Activation { linear, relu };
enum class Mode { train, infer };

/// Fully connected layer with optional inverted dropout on its output.
/// Weights are row-major [out_dim x in_dim]. Dropout scales kept units
/// by 1/(1-rate) at train time so inference is a plain affine map.
struct DenseLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    Activation activation = Activation::linear;
    double dropout_rate = 0.0;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, Activation act, double dropout = 0.0);

    std::size_t parameter_count() const { return out_dim * (in_dim + 1); }
};

/// Per-layer intermediates kept for the backward pass.
struct LayerCache {
    std::vector<double> input;
    std::vector<double> preact;
    std::vector<double> act;
    std::vector<double> mask; // dropout multipliers; empty when inactive
};

struct LayerGrads {
    std::vector<double> weights;
    std::vector<double> bias;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    const std::vector<double>& output() const { return layers.back().act; }
};

struct NetGrads {
    std::vector<LayerGrads> layers;
    void zero();
};

void layer_forward(const DenseLayer& layer, std::span<const double> x, Mode mode, Rng* dropout_rng,
                   LayerCache& cache);

/// Accumulates parameter gradients into `grads`; writes d(loss)/d(input)
/// into `dx` (length in_dim) when non-null.
void layer_backward(const DenseLayer& layer, const LayerCache& cache, std::span<const double> dy,
                    LayerGrads& grads, double* dx);

/// Ordered stack of dense layers; layer i's out_dim must equal layer
/// i+1's in_dim.
struct DenseNet {
    std::vector<DenseLayer> layers;

    std::size_t parameter_count() const;

    /// Fills `cache` with all intermediates; cache.output() is the result.
    /// Dropout draws come from `dropout_rng` in train mode only.
    void forward(std::span<const double> x, Mode mode, Rng* dropout_rng, ForwardCache& cache) const;

    /// Allocating convenience wrapper.
    std::vector<double> forward(std::span<const double> x, Mode mode = Mode::infer,
                                Rng* dropout_rng = nullptr) const;

    /// Accumulates into `grads`; returns d(loss)/d(input) through `dx`
    /// when non-null. `cache` must come from a forward on this net.
    void backward(const ForwardCache& cache, std::span<const double> dy, NetGrads& grads,
                  std::vector<double>* dx) const;

    NetGrads make_grads() const;
};

double mse(std::span<const double> pred, std::span<const double> target);

/// Glorot-uniform weights in +-sqrt(6/(in+out)), zero biases. Draw order
/// is row-major per layer, layers in order.
void init_glorot(DenseLayer& layer, Rng& rng);
void init_glorot(DenseNet& net, Rng& rng);

/// Adam with bias correction and a per-batch exponential learning-rate
/// schedule: the step taken at batch b uses base_lr * per_batch_decay^b.
struct AdamState {
    std::size_t step_count = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    double base_lr = 0.0025;
    double per_batch_decay = 1.0;

    AdamState() = default;
    AdamState(std::size_t n_params, double lr, double decay);

    double effective_lr() const;
};

/// One Adam update over a flat parameter view. Rejects non-finite
/// gradients without touching the parameters.
void adam_step(std::span<double* const> params, std::span<const double> grads, AdamState& state);

} // namespace sbn
