#ifndef ROBEX_BOUNDS_HPP
#define ROBEX_BOUNDS_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "robex/network.hpp"
#include "robex/numerics.hpp"

namespace robex {

/// (Sigma1, Sigma2): bounds on |sigma'| and |sigma''|. Softplus gives
/// (1, beta/4); ReLU has no finite Sigma2 and is rejected.
std::pair<double, double> activation_bounds(const Activation& act);

struct HessianMeasurement {
    double norm = 0.0;  // Frobenius norm of the input Hessian at some input
    bool exact = true;  // exact oracle vs sampled estimate
};

struct BoundCertificate {
    std::vector<double> layer_weight_norms;  // per-layer ||W||_F, class row for the last layer
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double theorem1 = 0.0;  // bound on ||H(g_cls)||_F over all inputs
    std::size_t class_index = 0;
    std::optional<HessianMeasurement> measured;
    /// theorem1 - measured norm; nonnegative whenever the measurement is
    /// exact (certificate soundness).
    std::optional<double> slack() const;
};

/// Theorem-style worst-case Hessian bound for the logit of `cls`, built from
/// the per-layer weight Frobenius norms (biases excluded) and the activation
/// derivative bounds. Softplus networks only.
BoundCertificate theorem1_bound(const Network& net, std::size_t cls);

/// Straight-line segment between two inputs.
struct PathSpec {
    Vec start;
    Vec end;
    double length() const;
};

/// Bound on ||h(start) - h(end)|| for gradient explanations: the certified
/// Hessian bound times the Euclidean path length.
double explanation_change_bound(const BoundCertificate& cert, const PathSpec& path);

struct KinkRecord {
    double t = 0.0;         // path parameter in (0, 1)
    std::size_t layer = 0;  // 0-based hidden layer index
    std::size_t unit = 0;
    int sign = 0;           // +1: pre-activation crosses upward, -1: downward
};

/// All parameters t in (0,1) where some ReLU pre-activation changes sign
/// along the segment, sorted ascending. Marches through the linear regions of
/// the piecewise-linear pre-activations; crossings are located to 1e-10 in t
/// and kinks closer together than 1e-12 are merged into one region boundary.
/// Throws if an endpoint itself lies on a kink.
std::vector<KinkRecord> find_kinks(const Network& net, const PathSpec& path);

struct KinkSumResult {
    Vec measured_dh;         // h(start) - h(end) by direct gradients
    Vec formula_dh;          // reconstruction from per-kink gradient jumps
    double theorem2_bound;   // sum over kinks of prod_l ||W^(l)||_F^2
    std::vector<KinkRecord> kinks;
};

/// Validates the kink machinery on a ReLU network: reconstructs the gradient
/// change across the path from the per-kink jump formula and evaluates the
/// kink-sum bound against ||dh||^2. Endpoints must not lie on kinks.
KinkSumResult kink_sum_check(const Network& net, const PathSpec& path, std::size_t cls = 0);

/// Weight/bias rescaling that changes the Softplus beta while leaving the
/// network function identical. Requires at least two layers.
Network beta_interchange(const Network& net, double beta2);

}  // namespace robex

#endif
