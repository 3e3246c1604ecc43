#ifndef ROBEX_TEST_HELPERS_HPP
#define ROBEX_TEST_HELPERS_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "robex/network.hpp"
#include "robex/numerics.hpp"

namespace robex::testing {

inline Network make_random_net(Rng& rng, const std::vector<std::size_t>& sizes,
                               Activation act, double weight_range = 1.0,
                               double bias_range = 0.5) {
    Network net;
    net.activation = act;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Layer layer;
        layer.weights = Matrix(sizes[l + 1], sizes[l]);
        for (auto& w : layer.weights.data) w = rng.next_uniform_in(-weight_range, weight_range);
        layer.biases.resize(sizes[l + 1]);
        for (auto& b : layer.biases) b = rng.next_uniform_in(-bias_range, bias_range);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

/// Two stacked 1x1 layers computing sigma(w*x + b); the second layer is the
/// identity read-out so the hidden activation is the scalar non-linearity.
inline Network make_scalar_net(Activation act, double w = 1.0, double b = 0.0) {
    Network net;
    net.activation = act;
    Layer l1;
    l1.weights = Matrix(1, 1);
    l1.weights(0, 0) = w;
    l1.biases = {b};
    Layer l2;
    l2.weights = Matrix(1, 1);
    l2.weights(0, 0) = 1.0;
    l2.biases = {0.0};
    net.layers = {l1, l2};
    return net;
}

inline Network make_linear_net(const Matrix& w) {
    Network net;
    net.activation = Activation::relu();
    Layer l;
    l.weights = w;
    l.biases.assign(w.rows, 0.0);
    net.layers = {l};
    return net;
}

/// Central finite differences of logit `cls` w.r.t. the input.
inline Vec fd_input_gradient(const Network& net, const Vec& x, std::size_t cls, double h = 1e-5) {
    Vec g(x.size());
    Vec xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        const double fp = forward(net, xp).logits[cls];
        xp[i] = x[i] - h;
        const double fm = forward(net, xp).logits[cls];
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Central finite differences of an arbitrary scalar functional of the
/// network w.r.t. every weight and bias.
inline ParamGrads fd_param_gradient(const Network& net, const std::function<double(const Network&)>& f,
                                    double h = 1e-5) {
    ParamGrads g = ParamGrads::zeros_like(net);
    Network n = net;
    for (std::size_t l = 0; l < n.layers.size(); ++l) {
        for (std::size_t k = 0; k < n.layers[l].weights.data.size(); ++k) {
            double& w = n.layers[l].weights.data[k];
            const double orig = w;
            w = orig + h;
            const double fp = f(n);
            w = orig - h;
            const double fm = f(n);
            w = orig;
            g.dw[l].data[k] = (fp - fm) / (2.0 * h);
        }
        for (std::size_t k = 0; k < n.layers[l].biases.size(); ++k) {
            double& b = n.layers[l].biases[k];
            const double orig = b;
            b = orig + h;
            const double fp = f(n);
            b = orig - h;
            const double fm = f(n);
            b = orig;
            g.db[l][k] = (fp - fm) / (2.0 * h);
        }
    }
    return g;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace robex::testing

#endif
