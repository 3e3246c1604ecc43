#ifndef ROBEX_NETWORK_HPP
#define ROBEX_NETWORK_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "robex/numerics.hpp"

namespace robex {

enum class ActivationKind { ReLU, Softplus };

/// Hidden-layer non-linearity. Softplus(x) = ln(1 + e^(beta x)) / beta is
/// evaluated in an overflow-safe form: relative accuracy 1e-12 against the
/// defining formula wherever that formula is finite.
struct Activation {
    ActivationKind kind = ActivationKind::ReLU;
    double beta = 1.0;  // meaningful only for Softplus; must be > 0

    static Activation relu() { return {ActivationKind::ReLU, 1.0}; }
    static Activation softplus(double beta);

    bool is_softplus() const { return kind == ActivationKind::Softplus; }

    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;  // Softplus only
    double d3(double x) const;  // Softplus only
};

struct Layer {
    Matrix weights;  // out x in
    Vec biases;      // out
};

/// Fully-connected classifier g: R^N -> R^C. The activation is applied after
/// every layer except the last; the output layer emits raw logits.
struct Network {
    std::vector<Layer> layers;
    Activation activation;
    double x_min = 0.0;
    double x_max = 1.0;

    std::size_t depth() const { return layers.size(); }
    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weights.cols; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weights.rows; }

    /// Checks layer dimension chaining, finiteness and the input domain.
    /// Throws std::invalid_argument on violation.
    void validate() const;
};

struct ForwardTrace {
    /// inputs[l] is the input vector of layer l (inputs[0] == x).
    std::vector<Vec> inputs;
    /// pre[l] is the pre-activation z of layer l; pre.back() == logits.
    std::vector<Vec> pre;
    Vec logits;
    std::size_t predicted = 0;  // argmax logit, ties to the lowest index
};

/// Full forward pass. Throws std::invalid_argument on dimension mismatch and
/// std::runtime_error if any intermediate value is non-finite.
ForwardTrace forward(const Network& net, const Vec& x);

/// Exact reverse-mode gradient of logit `cls` w.r.t. the input.
Vec input_gradient(const Network& net, const Vec& x, std::size_t cls);

struct ParamGrads {
    std::vector<Matrix> dw;
    std::vector<Vec> db;

    static ParamGrads zeros_like(const Network& net);
    void add_scaled(const ParamGrads& other, double scale);
    void scale(double s);
};

struct LabeledBatch {
    const std::vector<Vec>* features = nullptr;
    const std::vector<int>* labels = nullptr;
    /// Indices into features/labels; the reduction over the batch runs in
    /// this (ascending position) order.
    std::vector<std::size_t> indices;
};

struct BatchGradResult {
    ParamGrads grads;
    double mean_loss = 0.0;  // mean softmax cross-entropy
    std::size_t correct = 0;
};

/// Gradient of the mean softmax cross-entropy over the batch w.r.t. every
/// weight and bias. Throws std::out_of_range for labels >= output_dim.
BatchGradResult parameter_gradient(const Network& net, const LabeledBatch& batch);

/// H(g_cls)(x) * v without materialising the Hessian (forward-over-reverse).
/// Requires a Softplus network; throws std::domain_error for ReLU.
Vec hessian_vector_product(const Network& net, const Vec& x, std::size_t cls, const Vec& v);

/// Full N x N input Hessian of logit `cls`, built by forward-mode propagation
/// of value/Jacobian/second-derivative tensors through the layer stack. This
/// is the brute-force oracle route, independent of hessian_vector_product.
/// Requires a Softplus network.
Matrix exact_hessian(const Network& net, const Vec& x, std::size_t cls);

struct CurvatureGradResult {
    double hv_sq = 0.0;  // ||H v||^2 for the supplied direction
    ParamGrads grads;    // d ||H v||^2 / d(weights, biases), v held fixed
};

/// Parameter gradient of ||H(g_cls)(x) v||^2 with v treated as a constant.
/// Computed exactly via a mixed second-order forward pass followed by a
/// reverse pass. Requires a Softplus network.
CurvatureGradResult curvature_penalty_gradient(const Network& net, const Vec& x,
                                               std::size_t cls, const Vec& v);

}  // namespace robex

#endif
