#ifndef ROBEX_EXPLAIN_HPP
#define ROBEX_EXPLAIN_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "robex/network.hpp"

namespace robex {

enum class ExplMethod { Gradient, GradTimesInput, IntegratedGradients, GuidedBackprop, Lrp };

std::string method_name(ExplMethod m);
std::optional<ExplMethod> parse_method(const std::string& name);

/// Per-feature relevance vector. `values` refers to raw feature indices
/// before normalisation and to pixel indices after channel reduction.
struct ExplanationMap {
    Vec values;
    ExplMethod method = ExplMethod::Gradient;
    std::size_t class_explained = 0;
    bool normalized = false;
};

struct LrpConfig {
    double epsilon = 1e-9;  // sign-matched denominator stabiliser
    Vec lower;              // per-feature input lower bounds l_i
    Vec upper;              // per-feature input upper bounds h_i

    /// Bounds filled from the network's input domain.
    static LrpConfig from_network(const Network& net);
};

/// h = dg_k/dx. When cls is empty, k is the predicted class of x.
ExplanationMap gradient_map(const Network& net, const Vec& x,
                            std::optional<std::size_t> cls = std::nullopt);

/// h = x (.) dg_k/dx.
ExplanationMap gradient_times_input_map(const Network& net, const Vec& x,
                                        std::optional<std::size_t> cls = std::nullopt);

/// h = (x - baseline) (.) midpoint-rule approximation of the path integral of
/// the gradient from baseline to x, with `steps` quadrature points. k is fixed
/// from x (not re-evaluated along the path).
ExplanationMap integrated_gradients_map(const Network& net, const Vec& x, const Vec& baseline,
                                        std::size_t steps,
                                        std::optional<std::size_t> cls = std::nullopt);

/// Gradient backward pass where at every activation the incoming backward
/// signal is zeroed wherever it is negative, on top of the activation's own
/// gradient gate.
ExplanationMap guided_backprop_map(const Network& net, const Vec& x,
                                   std::optional<std::size_t> cls = std::nullopt);

/// Layer-wise relevance propagation: one-hot output relevance at k, the z+
/// rule for every layer except the first, and the z^B rule with the input
/// bounds for the first layer. Requires depth >= 2. Units whose denominator
/// is zero even after stabilisation lose their relevance; their count is
/// reported through zero_denominators when given.
ExplanationMap lrp_map(const Network& net, const Vec& x, const LrpConfig& cfg,
                       std::optional<std::size_t> cls = std::nullopt,
                       std::size_t* zero_denominators = nullptr);

/// One z+ propagation step through a layer: relevance of the layer inputs
/// given the relevance of its outputs. Exposed for direct verification.
Vec lrp_zplus_step(const Matrix& weights, const Vec& input_acts, const Vec& upstream,
                   double epsilon, std::size_t* zero_denominators = nullptr);

/// One z^B propagation step for the (bounded-domain) first layer.
Vec lrp_zb_step(const Matrix& weights, const Vec& input_acts, const Vec& lower, const Vec& upper,
                const Vec& upstream, double epsilon, std::size_t* zero_denominators = nullptr);

/// Channel-abs reduction followed by division by the total L1 mass. `raw`
/// uses channel-planar layout (all of channel 0, then channel 1, ...). An
/// all-zero map cannot be normalised and comes back all-zero and flagged
/// unnormalized.
ExplanationMap normalize_map(const ExplanationMap& raw, std::size_t channels);

struct ExplainOptions {
    std::size_t ig_steps = 64;
    std::optional<Vec> ig_baseline;  // default: x_min in every feature
    LrpConfig lrp;
    bool lrp_from_network = true;    // ignore `lrp` bounds, take them from the net
};

/// Dispatcher over the five methods (raw, unnormalised map).
ExplanationMap compute_map(const Network& net, const Vec& x, ExplMethod method,
                           const ExplainOptions& opts = {},
                           std::optional<std::size_t> cls = std::nullopt);

}  // namespace robex

#endif
