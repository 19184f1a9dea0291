#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sbn/errors.hpp"
#include "sbn/nn.hpp"

using namespace sbn;

namespace {

DenseLayer layer_with(std::size_t in, std::size_t out, Activation act,
                      const std::vector<double>& w, const std::vector<double>& b) {
    DenseLayer l(in, out, act);
    l.weights = w;
    l.bias = b;
    return l;
}

} // namespace

TEST_CASE("dense forward computes affine maps") {
    DenseNet net;
    net.layers.push_back(layer_with(1, 1, Activation::linear, {2.0}, {3.0}));
    const auto y = net.forward(std::vector<double>{5.0});
    CHECK(y[0] == doctest::Approx(13.0));
}

TEST_CASE("dense forward zero net gives zero output") {
    DenseNet net;
    net.layers.push_back(DenseLayer(3, 4, Activation::relu));
    net.layers.push_back(DenseLayer(4, 2, Activation::relu));
    const auto y = net.forward(std::vector<double>{1.0, -2.0, 3.0});
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
}

TEST_CASE("dense forward applies relu between layers") {
    DenseNet net;
    net.layers.push_back(layer_with(1, 2, Activation::relu, {1.0, -1.0}, {0.0, 0.0}));
    net.layers.push_back(layer_with(2, 1, Activation::linear, {1.0, 1.0}, {0.0}));
    const auto y = net.forward(std::vector<double>{-2.0});
    CHECK(y[0] == doctest::Approx(2.0));
}

TEST_CASE("dense forward rejects bad inputs") {
    DenseNet net;
    net.layers.push_back(DenseLayer(2, 1, Activation::linear));
    CHECK_THROWS_AS((void)net.forward(std::vector<double>{1.0}), ConfigError);
    CHECK_THROWS_AS((void)net.forward(std::vector<double>{1.0, std::nan("")}), NumericError);
}

TEST_CASE("dense backward matches the product rule on a linear layer") {
    DenseNet net;
    net.layers.push_back(layer_with(1, 1, Activation::linear, {2.0}, {0.0}));
    ForwardCache cache;
    net.forward(std::vector<double>{5.0}, Mode::infer, nullptr, cache);

    NetGrads grads = net.make_grads();
    std::vector<double> dx;
    net.backward(cache, std::vector<double>{1.0}, grads, &dx);
    CHECK(grads.layers[0].weights[0] == doctest::Approx(5.0));
    CHECK(grads.layers[0].bias[0] == doctest::Approx(1.0));
    CHECK(dx[0] == doctest::Approx(2.0));
}

TEST_CASE("dense backward is linear in dy") {
    DenseNet net;
    net.layers.push_back(DenseLayer(3, 4, Activation::relu));
    net.layers.push_back(DenseLayer(4, 1, Activation::linear));
    Rng rng(11);
    init_glorot(net, rng);

    ForwardCache cache;
    net.forward(std::vector<double>{0.3, -0.4, 0.9}, Mode::infer, nullptr, cache);
    NetGrads grads = net.make_grads();
    std::vector<double> dx;
    net.backward(cache, std::vector<double>{0.0}, grads, &dx);
    for (const auto& l : grads.layers) {
        for (double g : l.weights) CHECK(g == 0.0);
        for (double g : l.bias) CHECK(g == 0.0);
    }
    for (double g : dx) CHECK(g == 0.0);
}

namespace {

// Central finite differences of net output 0 with respect to every
// parameter; the independent oracle for backward.
double max_relative_gradient_error(DenseNet& net, const std::vector<double>& x) {
    ForwardCache cache;
    net.forward(x, Mode::infer, nullptr, cache);
    NetGrads grads = net.make_grads();
    net.backward(cache, std::vector<double>{1.0}, grads, nullptr);

    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto check = [&](std::vector<double>& params, const std::vector<double>& analytic) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                const double keep = params[i];
                params[i] = keep + h;
                const double up = net.forward(x)[0];
                params[i] = keep - h;
                const double dn = net.forward(x)[0];
                params[i] = keep;
                const double fd = (up - dn) / (2.0 * h);
                const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
                worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
            }
        };
        check(net.layers[li].weights, grads.layers[li].weights);
        check(net.layers[li].bias, grads.layers[li].bias);
    }
    return worst;
}

} // namespace

TEST_CASE("gradients match central finite differences on a 5-32-1 net") {
    DenseNet net;
    net.layers.push_back(DenseLayer(5, 32, Activation::relu));
    net.layers.push_back(DenseLayer(32, 1, Activation::linear));
    Rng rng(1234);
    init_glorot(net, rng);
    Rng xs = rng.substream(9);
    std::vector<double> x(5);
    for (auto& v : x) v = xs.uniform(-2.0, 2.0);

    CHECK(max_relative_gradient_error(net, x) < 1e-4);
}

TEST_CASE("mse basics") {
    const std::vector<double> a{1.0, 3.0};
    const std::vector<double> b{0.0, 2.0};
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(a, b) == doctest::Approx(1.0));
    CHECK(mse(a, b) == mse(b, a));
    CHECK_THROWS_AS(mse(std::vector<double>{}, std::vector<double>{}), UsageError);
    CHECK_THROWS_AS(mse(a, std::vector<double>{1.0}), UsageError);
}

TEST_CASE("glorot init: zero biases, bounded weights, seed-determined") {
    DenseNet net;
    net.layers.push_back(DenseLayer(5, 32, Activation::relu));
    net.layers.push_back(DenseLayer(32, 1, Activation::linear));

    Rng rng_a(42);
    init_glorot(net, rng_a);
    for (const auto& l : net.layers) {
        const double limit = std::sqrt(6.0 / static_cast<double>(l.in_dim + l.out_dim));
        for (double b : l.bias) CHECK(b == 0.0);
        for (double w : l.weights) {
            CHECK(w <= limit);
            CHECK(w >= -limit);
        }
    }

    DenseNet net2;
    net2.layers.push_back(DenseLayer(5, 32, Activation::relu));
    net2.layers.push_back(DenseLayer(32, 1, Activation::linear));
    Rng rng_b(42);
    init_glorot(net2, rng_b);
    for (std::size_t i = 0; i < net.layers.size(); ++i)
        CHECK(net.layers[i].weights == net2.layers[i].weights);
}

TEST_CASE("adam single step matches the hand-computed update") {
    double p = 1.0;
    double* view[1] = {&p};
    const double g[1] = {1.0};
    AdamState state(1, 0.1, 1.0);
    adam_step(view, g, state);

    CHECK(state.first_moment[0] == doctest::Approx(0.1));
    CHECK(state.second_moment[0] == doctest::Approx(0.001));
    CHECK(p == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-7)));
    CHECK(p == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(state.step_count == 1);
}

TEST_CASE("adam leaves parameters alone on zero gradient") {
    double p = 1.25;
    double* view[1] = {&p};
    const double g[1] = {0.0};
    AdamState state(1, 0.1, 1.0);
    adam_step(view, g, state);
    CHECK(p == 1.25);
}

TEST_CASE("adam descends a quadratic on consecutive steps") {
    double p = 1.0;
    double* view[1] = {&p};
    AdamState state(1, 0.1, 1.0);
    const double p0 = p;
    double g[1] = {p};
    adam_step(view, g, state);
    const double p1 = p;
    g[0] = p;
    adam_step(view, g, state);
    CHECK(p1 < p0);
    CHECK(p < p1);
}

TEST_CASE("adam rejects non-finite gradients without touching parameters") {
    double p = 2.0;
    double* view[1] = {&p};
    const double g[1] = {std::numeric_limits<double>::infinity()};
    AdamState state(1, 0.1, 1.0);
    CHECK_THROWS_AS(adam_step(view, g, state), NumericError);
    CHECK(p == 2.0);
    CHECK(state.step_count == 0);
}

TEST_CASE("adam with unit decay equals a textbook reimplementation over 100 steps") {
    double p = 1.0;
    double* view[1] = {&p};
    AdamState state(1, 0.05, 1.0);

    // Test-local oracle.
    double q = 1.0, m = 0.0, v = 0.0;
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-7, lr = 0.05;

    for (int t = 1; t <= 100; ++t) {
        const double gp[1] = {p};
        adam_step(view, gp, state);

        const double gq = q;
        m = beta1 * m + (1 - beta1) * gq;
        v = beta2 * v + (1 - beta2) * gq * gq;
        const double mh = m / (1 - std::pow(beta1, t));
        const double vh = v / (1 - std::pow(beta2, t));
        q -= lr * mh / (std::sqrt(vh) + eps);

        CHECK(std::abs(p - q) < 1e-12);
    }
}

TEST_CASE("effective learning rate decays per batch") {
    AdamState state(1, 0.0025, 0.999);
    double p = 0.0;
    double* view[1] = {&p};
    const double g[1] = {1.0};
    for (int b = 0; b < 50; ++b) {
        CHECK(std::abs(state.effective_lr() - 0.0025 * std::pow(0.999, b)) < 1e-15);
        adam_step(view, g, state);
    }
}

TEST_CASE("inverted dropout preserves the expected output") {
    DenseLayer layer(3, 4, Activation::linear, 0.4);
    Rng wrng(5);
    init_glorot(layer, wrng);
    const std::vector<double> x{0.7, -1.1, 0.4};

    LayerCache cache;
    layer_forward(layer, x, Mode::infer, nullptr, cache);
    const std::vector<double> reference = cache.act;

    Rng drop(99);
    std::vector<double> mean(4, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        layer_forward(layer, x, Mode::train, &drop, cache);
        for (std::size_t j = 0; j < 4; ++j) mean[j] += cache.act[j];
    }
    for (std::size_t j = 0; j < 4; ++j) {
        mean[j] /= n;
        CHECK(std::abs(mean[j] - reference[j]) < 0.01 * std::max(1.0, std::abs(reference[j])));
    }
}

TEST_CASE("dropout masks are a deterministic function of the seed") {
    DenseLayer layer(2, 8, Activation::relu, 0.5);
    Rng wrng(7);
    init_glorot(layer, wrng);
    const std::vector<double> x{1.0, 1.0};

    Rng a(123), b(123);
    LayerCache ca, cb;
    for (int i = 0; i < 10; ++i) {
        layer_forward(layer, x, Mode::train, &a, ca);
        layer_forward(layer, x, Mode::train, &b, cb);
        CHECK(ca.mask == cb.mask);
    }
}

TEST_CASE("dropout is identity at inference") {
    DenseLayer layer(2, 4, Activation::linear, 0.9);
    Rng wrng(3);
    init_glorot(layer, wrng);
    LayerCache cache;
    layer_forward(layer, std::vector<double>{0.5, -0.5}, Mode::infer, nullptr, cache);
    CHECK(cache.mask.empty());
    for (std::size_t i = 0; i < 4; ++i) CHECK(cache.act[i] == cache.preact[i]);
}

TEST_CASE("parameter counts follow out*(in+1)") {
    DenseNet net;
    net.layers.push_back(DenseLayer(12, 1, Activation::linear));
    net.layers.push_back(DenseLayer(5, 32, Activation::relu));
    CHECK(net.layers[0].parameter_count() == 13);
    CHECK(net.layers[1].parameter_count() == 192);
    CHECK(net.parameter_count() == 205);
}

TEST_CASE("rng substreams are independent and reproducible") {
    Rng a(2024);
    Rng b(2024);
    CHECK(a.next_u64() == b.next_u64());

    Rng s1 = Rng(2024).substream(1);
    Rng s2 = Rng(2024).substream(2);
    bool differs = false;
    for (int i = 0; i < 8; ++i) differs |= s1.next_u64() != s2.next_u64();
    CHECK(differs);

    Rng u(77);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}
