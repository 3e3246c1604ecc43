#include <cmath>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "robex/explain.hpp"
#include "test_helpers.hpp"

using namespace robex;
using namespace robex::testing;

namespace {

double l1_mass(const Vec& v) {
    double m = 0.0;
    for (double x : v) m += std::abs(x);
    return m;
}

double sum(const Vec& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("gradient map equals the input gradient of the predicted class") {
    Rng rng(11);
    Network net = make_random_net(rng, {4, 8, 3}, Activation::softplus(2.0));
    Vec x = {0.2, -0.4, 0.6, 0.1};
    const ExplanationMap m = gradient_map(net, x);
    const std::size_t k = forward(net, x).predicted;
    CHECK(m.class_explained == k);
    CHECK(m.values == input_gradient(net, x, k));
    CHECK_FALSE(m.normalized);
}

TEST_CASE("gradient map of a linear model is the weight row") {
    Matrix w(1, 2);
    w(0, 0) = 1.0;
    w(0, 1) = -2.0;
    Network net = make_linear_net(w);
    CHECK(gradient_map(net, {5.0, 5.0}).values == Vec{1.0, -2.0});
}

TEST_CASE("gradient-times-input basics") {
    Matrix w(1, 2);
    w(0, 0) = 1.0;
    w(0, 1) = -2.0;
    Network net = make_linear_net(w);

    CHECK(gradient_times_input_map(net, {0.0, 0.0}).values == Vec{0.0, 0.0});
    CHECK(gradient_times_input_map(net, {3.0, 1.0}).values == Vec{3.0, -2.0});

    // for a bias-free linear model the entries sum to the logit
    const Vec x = {0.7, -1.3};
    const ExplanationMap m = gradient_times_input_map(net, x);
    CHECK(sum(m.values) == doctest::Approx(forward(net, x).logits[0]).epsilon(1e-15));
}

TEST_CASE("gradient-times-input equals x times the gradient map") {
    Rng rng(21);
    Network net = make_random_net(rng, {5, 7, 2}, Activation::softplus(1.0));
    Vec x(5);
    for (auto& e : x) e = rng.next_uniform_in(-1, 1);
    const Vec g = gradient_map(net, x).values;
    const Vec gi = gradient_times_input_map(net, x).values;
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(gi[i] == x[i] * g[i]);
}

TEST_CASE("integrated gradients on a linear model is exact for any step count") {
    Matrix w(1, 3);
    w(0, 0) = 2.0; w(0, 1) = -1.0; w(0, 2) = 0.5;
    Network net = make_linear_net(w);
    const Vec x = {1.0, 2.0, -1.0};
    const Vec baseline(3, 0.0);
    for (std::size_t steps : {1u, 7u, 64u}) {
        const ExplanationMap m = integrated_gradients_map(net, x, baseline, steps);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(m.values[i] == doctest::Approx(x[i] * w(0, i)).epsilon(1e-15));
    }
}

TEST_CASE("integrated gradients with baseline equal to the input is zero") {
    Rng rng(31);
    Network net = make_random_net(rng, {3, 5, 2}, Activation::softplus(1.0));
    const Vec x = {0.4, 0.5, 0.6};
    const ExplanationMap m = integrated_gradients_map(net, x, x, 16);
    CHECK(m.values == Vec{0.0, 0.0, 0.0});
}

TEST_CASE("integrated gradients completeness and step convergence") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        Network net = make_random_net(rng, {4, 8, 6, 2}, Activation::softplus(5.0));
        Vec x(4), baseline(4, 0.0);
        for (auto& e : x) e = rng.next_uniform_in(0, 1);
        const std::size_t k = forward(net, x).predicted;

        const ExplanationMap m256 = integrated_gradients_map(net, x, baseline, 256, k);
        const double gap = forward(net, x).logits[k] - forward(net, baseline).logits[k];
        CHECK(std::abs(sum(m256.values) - gap) <= 1e-3);

        const ExplanationMap m128 = integrated_gradients_map(net, x, baseline, 128, k);
        CHECK(std::abs(sum(m256.values) - sum(m128.values)) <= 1e-4);
    }
}

TEST_CASE("guided backprop equals the gradient when every backward signal is positive") {
    // all-positive weights keep every backward signal positive
    Rng rng(51);
    Network net = make_random_net(rng, {3, 6, 4, 2}, Activation::softplus(1.0));
    for (auto& layer : net.layers)
        for (auto& w : layer.weights.data) w = std::abs(w);
    const Vec x = {0.3, 0.6, 0.9};
    const std::size_t k = forward(net, x).predicted;
    CHECK(guided_backprop_map(net, x, k).values == input_gradient(net, x, k));
}

TEST_CASE("guided backprop blocks a negative downstream path") {
    // one hidden ReLU unit feeding the output through a negative weight
    Network net;
    net.activation = Activation::relu();
    Layer l1;
    l1.weights = Matrix(1, 2);
    l1.weights(0, 0) = 0.8;
    l1.weights(0, 1) = 0.4;
    l1.biases = {0.1};
    Layer l2;
    l2.weights = Matrix(1, 1);
    l2.weights(0, 0) = -1.0;
    l2.biases = {0.0};
    net.layers = {l1, l2};

    const ExplanationMap m = guided_backprop_map(net, {1.0, 1.0});
    CHECK(m.values == Vec{0.0, 0.0});
    // the plain gradient is nonzero through the same active unit
    CHECK(input_gradient(net, {1.0, 1.0}, 0) == Vec{-0.8, -0.4});
}

TEST_CASE("guided backprop: flipping the downstream weight never raises a map entry") {
    // single-hidden-unit nets with nonnegative first-layer weights
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        Network net;
        net.activation = trial % 2 ? Activation::relu() : Activation{ActivationKind::Softplus, 2.0};
        Layer l1;
        l1.weights = Matrix(1, 3);
        for (auto& w : l1.weights.data) w = rng.next_uniform_in(0, 1);
        l1.biases = {rng.next_uniform_in(-0.2, 0.2)};
        Layer l2;
        l2.weights = Matrix(1, 1);
        l2.weights(0, 0) = rng.next_uniform_in(0.1, 1.0);
        l2.biases = {0.0};
        net.layers = {l1, l2};

        Vec x = {rng.next_uniform_in(0, 1), rng.next_uniform_in(0, 1), rng.next_uniform_in(0, 1)};
        const Vec before = guided_backprop_map(net, x, 0).values;

        Network flipped = net;
        flipped.layers[1].weights(0, 0) *= -1.0;
        const Vec after = guided_backprop_map(flipped, x, 0).values;
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(after[i] <= before[i]);
    }
}

TEST_CASE("lrp z+ step reproduces the hand-worked single-layer case") {
    Matrix w(1, 2);
    w(0, 0) = 1.0;
    w(0, 1) = 2.0;
    const Vec r = lrp_zplus_step(w, {1.0, 1.0}, {1.0}, 0.0);
    CHECK(r[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(r[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("lrp conserves relevance layer by layer") {
    Rng rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        Network net = make_random_net(rng, {4, 8, 6, 3}, Activation::softplus(1.0));
        Vec x(4);
        for (auto& e : x) e = rng.next_uniform_in(0, 1);
        const ForwardTrace tr = forward(net, x);

        LrpConfig cfg = LrpConfig::from_network(net);
        cfg.epsilon = 0.0;

        Vec relevance(net.output_dim(), 0.0);
        relevance[tr.predicted] = 1.0;  // output layer: sum is exactly 1
        CHECK(sum(relevance) == 1.0);
        for (std::size_t l = net.depth(); l-- > 1;) {
            std::size_t zeros = 0;
            const Vec next = lrp_zplus_step(net.layers[l].weights, tr.inputs[l], relevance, 0.0, &zeros);
            if (zeros == 0) CHECK(std::abs(sum(next) - sum(relevance)) <= 1e-9);
            relevance = next;
        }

        // full map at small epsilon keeps conservation to epsilon-level slack
        const ExplanationMap m = lrp_map(net, x, cfg);
        LrpConfig eps_cfg = cfg;
        eps_cfg.epsilon = 1e-9;
        const ExplanationMap meps = lrp_map(net, x, eps_cfg);
        CHECK(std::abs(sum(meps.values) - 1.0) <= 1e-6);
        CHECK(std::abs(sum(m.values) - 1.0) <= 1e-9);
    }
}

TEST_CASE("lrp rejects single-layer networks") {
    Matrix w(2, 2);
    Network net = make_linear_net(w);
    CHECK_THROWS_AS(lrp_map(net, {0.1, 0.2}, LrpConfig::from_network(net)), std::invalid_argument);
}

TEST_CASE("lrp drops relevance of zero-denominator units and reports them") {
    // negative weights only: the z+ denominator is exactly zero
    Matrix w(1, 2);
    w(0, 0) = -1.0;
    w(0, 1) = -2.0;
    std::size_t zeros = 0;
    const Vec r = lrp_zplus_step(w, {1.0, 1.0}, {1.0}, 0.0, &zeros);
    CHECK(zeros == 1);
    CHECK(r == Vec{0.0, 0.0});
}

TEST_CASE("normalize_map hand cases") {
    ExplanationMap raw;
    raw.values = {1.0, -1.0, 2.0};
    const ExplanationMap n1 = normalize_map(raw, 1);
    CHECK(n1.values == Vec{0.25, 0.25, 0.5});
    CHECK(n1.normalized);

    // planar three-channel single pixel: |1| + |-2| + |3| = 6 before division
    ExplanationMap raw3;
    raw3.values = {1.0, -2.0, 3.0};
    const ExplanationMap n3 = normalize_map(raw3, 3);
    CHECK(n3.values.size() == 1);
    CHECK(n3.values[0] == 1.0);  // 6 / 6

    // a normalized map with exact unit mass is a fixed point
    const ExplanationMap again = normalize_map(n1, 1);
    CHECK(again.values == n1.values);
}

TEST_CASE("normalize_map flags the all-zero case") {
    ExplanationMap raw;
    raw.values = {0.0, 0.0, 0.0, 0.0};
    const ExplanationMap n = normalize_map(raw, 2);
    CHECK_FALSE(n.normalized);
    CHECK(n.values == Vec{0.0, 0.0});

    CHECK_THROWS_AS(normalize_map(raw, 3), std::invalid_argument);  // 4 % 3 != 0
}

TEST_CASE("every method yields unit L1 mass after normalisation") {
    Rng rng(81);
    const ExplMethod methods[] = {ExplMethod::Gradient, ExplMethod::GradTimesInput,
                                  ExplMethod::IntegratedGradients, ExplMethod::GuidedBackprop,
                                  ExplMethod::Lrp};
    for (int trial = 0; trial < 10; ++trial) {
        Network net = make_random_net(rng, {6, 9, 4}, Activation::softplus(3.0));
        Vec x(6);
        for (auto& e : x) e = rng.next_uniform_in(0, 1);
        for (ExplMethod method : methods) {
            const ExplanationMap raw = compute_map(net, x, method);
            const ExplanationMap norm = normalize_map(raw, 1);
            if (norm.normalized) CHECK(std::abs(l1_mass(norm.values) - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("explained class survives re-running the forward pass") {
    Rng rng(91);
    Network net = make_random_net(rng, {3, 5, 4}, Activation::softplus(1.0));
    const Vec x = {0.1, 0.9, 0.4};
    const std::size_t k1 = forward(net, x).predicted;
    const std::size_t k2 = forward(net, x).predicted;
    CHECK(k1 == k2);
    CHECK(gradient_map(net, x).class_explained == k1);
}
