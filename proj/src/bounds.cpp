#include "robex/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace robex {

std::pair<double, double> activation_bounds(const Activation& act) {
    if (!act.is_softplus())
        throw std::domain_error("activation_bounds: ReLU has an unbounded second derivative");
    return {1.0, act.beta / 4.0};
}

std::optional<double> BoundCertificate::slack() const {
    if (!measured) return std::nullopt;
    return theorem1 - measured->norm;
}

namespace {

double class_row_norm(const Matrix& w, std::size_t cls) {
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) acc += w(cls, j) * w(cls, j);
    return std::sqrt(acc);
}

/// Per-layer Frobenius norms with the last layer restricted to the class row
/// (scalar-output form of the bound).
std::vector<double> scalar_output_norms(const Network& net, std::size_t cls) {
    std::vector<double> norms;
    norms.reserve(net.depth());
    for (std::size_t l = 0; l + 1 < net.depth(); ++l) norms.push_back(frobenius_norm(net.layers[l].weights));
    norms.push_back(class_row_norm(net.layers.back().weights, cls));
    return norms;
}

}  // namespace

BoundCertificate theorem1_bound(const Network& net, std::size_t cls) {
    if (cls >= net.output_dim()) throw std::out_of_range("theorem1_bound: class index out of range");
    const auto [s1, s2] = activation_bounds(net.activation);

    BoundCertificate cert;
    cert.sigma1 = s1;
    cert.sigma2 = s2;
    cert.class_index = cls;
    cert.layer_weight_norms = scalar_output_norms(net, cls);

    const std::size_t L = net.depth();
    double bound = 0.0;
    for (std::size_t m = 1; m <= L; ++m) {
        double term = 1.0;
        for (std::size_t l = 1; l <= m; ++l) term *= cert.layer_weight_norms[l - 1] * cert.layer_weight_norms[l - 1];
        for (std::size_t l = m + 1; l <= L; ++l) term *= cert.layer_weight_norms[l - 1];
        term *= std::pow(s1, static_cast<double>(L + m) - 2.0) * s2;
        bound += term;
    }
    cert.theorem1 = bound;
    return cert;
}

double PathSpec::length() const {
    if (start.size() != end.size()) throw std::invalid_argument("path endpoints differ in dimension");
    double acc = 0.0;
    for (std::size_t i = 0; i < start.size(); ++i) {
        const double d = end[i] - start[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double explanation_change_bound(const BoundCertificate& cert, const PathSpec& path) {
    return cert.theorem1 * path.length();
}

namespace {

constexpr double kEndpointTol = 1e-10;
constexpr double kMergeTol = 1e-12;

struct GatedEval {
    std::vector<Vec> z;   // pre-activations per layer
    std::vector<Vec> dz;  // their derivative along the path direction
};

/// Forward pass along the segment with fixed ReLU gates; valid within one
/// linear region.
GatedEval eval_with_gates(const Network& net, const Vec& x, const Vec& d,
                          const std::vector<std::vector<char>>& gates) {
    GatedEval ev;
    const std::size_t depth = net.depth();
    ev.z.resize(depth);
    ev.dz.resize(depth);
    Vec a = x, ra = d;
    for (std::size_t l = 0; l < depth; ++l) {
        ev.z[l] = matvec(net.layers[l].weights, a);
        for (std::size_t i = 0; i < ev.z[l].size(); ++i) ev.z[l][i] += net.layers[l].biases[i];
        ev.dz[l] = matvec(net.layers[l].weights, ra);
        if (l + 1 < depth) {
            a.resize(ev.z[l].size());
            ra.resize(ev.z[l].size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                const bool on = gates[l][i] != 0;
                a[i] = on ? ev.z[l][i] : 0.0;
                ra[i] = on ? ev.dz[l][i] : 0.0;
            }
        }
    }
    return ev;
}

void require_relu(const Network& net, const char* op) {
    if (net.activation.is_softplus())
        throw std::domain_error(std::string(op) + ": kink analysis applies to ReLU networks only");
}

}  // namespace

std::vector<KinkRecord> find_kinks(const Network& net, const PathSpec& path) {
    require_relu(net, "find_kinks");
    if (path.start.size() != net.input_dim() || path.end.size() != net.input_dim())
        throw std::invalid_argument("find_kinks: path dimension mismatch");

    const std::size_t hidden_layers = net.depth() - 1;
    Vec d(path.start.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = path.end[i] - path.start[i];

    const ForwardTrace at_start = forward(net, path.start);
    std::vector<std::vector<char>> gates(hidden_layers);
    for (std::size_t l = 0; l < hidden_layers; ++l) {
        gates[l].resize(at_start.pre[l].size());
        for (std::size_t i = 0; i < gates[l].size(); ++i) {
            if (at_start.pre[l][i] == 0.0)
                throw std::runtime_error("find_kinks: a kink coincides with the start point");
            gates[l][i] = at_start.pre[l][i] >= 0.0 ? 1 : 0;
        }
    }

    std::vector<KinkRecord> kinks;
    double t = 0.0;
    Vec point = path.start;
    const std::size_t max_kinks = 100000;

    while (true) {
        const GatedEval ev = eval_with_gates(net, point, d, gates);

        double s_min = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < hidden_layers; ++l)
            for (std::size_t i = 0; i < ev.z[l].size(); ++i) {
                const double slope = ev.dz[l][i];
                if (slope == 0.0) continue;
                const double s = -ev.z[l][i] / slope;
                if (s > kMergeTol && s < s_min) s_min = s;
            }

        const double t_cross = t + s_min;
        if (!(t_cross < 1.0 - kEndpointTol)) {
            if (t_cross <= 1.0 + kEndpointTol)
                throw std::runtime_error("find_kinks: a kink coincides with the end point");
            break;
        }

        // all units crossing at this region boundary (within the merge width)
        std::vector<KinkRecord> crossers;
        for (std::size_t l = 0; l < hidden_layers; ++l)
            for (std::size_t i = 0; i < ev.z[l].size(); ++i) {
                const double slope = ev.dz[l][i];
                if (slope == 0.0) continue;
                const double s = -ev.z[l][i] / slope;
                if (s > kMergeTol && s <= s_min + kMergeTol)
                    crossers.push_back({t + s, l, i, slope > 0.0 ? 1 : -1});
            }

        // polish each crossing with one Newton step on a fresh evaluation,
        // then flip the affected gates together
        for (KinkRecord& k : crossers) {
            Vec xk(point.size());
            for (std::size_t i = 0; i < xk.size(); ++i) xk[i] = path.start[i] + k.t * d[i];
            const GatedEval at_k = eval_with_gates(net, xk, d, gates);
            const double z = at_k.z[k.layer][k.unit];
            const double slope = at_k.dz[k.layer][k.unit];
            if (slope != 0.0) k.t -= z / slope;
        }
        for (const KinkRecord& k : crossers) {
            gates[k.layer][k.unit] = k.sign > 0 ? 1 : 0;
            kinks.push_back(k);
        }

        t = crossers.front().t;
        for (std::size_t i = 0; i < point.size(); ++i) point[i] = path.start[i] + t * d[i];

        if (kinks.size() > max_kinks)
            throw std::runtime_error("find_kinks: kink count exceeds sanity limit");
    }

    std::sort(kinks.begin(), kinks.end(), [](const KinkRecord& a, const KinkRecord& b) { return a.t < b.t; });
    return kinks;
}

namespace {

/// d(g_cls)/d(a^(m)) with the gate pattern of the supplied trace: the
/// backward adjoint at the output of hidden layer m.
Vec adjoint_at_hidden_output(const Network& net, const ForwardTrace& tr, std::size_t cls,
                             std::size_t m) {
    const std::size_t L = net.depth();
    Vec u(net.output_dim(), 0.0);
    u[cls] = 1.0;
    for (std::size_t l = L - 1; l > m + 1; --l) {
        Vec q = matvec_transposed(net.layers[l].weights, u);
        u.resize(q.size());
        for (std::size_t i = 0; i < q.size(); ++i)
            u[i] = tr.pre[l - 1][i] >= 0.0 ? q[i] : 0.0;
    }
    return matvec_transposed(net.layers[m + 1].weights, u);
}

/// d(z^(m)_unit)/dx with the gate pattern of the supplied trace.
Vec preactivation_input_row(const Network& net, const ForwardTrace& tr, std::size_t m,
                            std::size_t unit) {
    Vec r(net.layers[m].weights.cols);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = net.layers[m].weights(unit, j);
    for (std::size_t l = m; l-- > 0;) {
        for (std::size_t i = 0; i < r.size(); ++i)
            if (tr.pre[l][i] < 0.0) r[i] = 0.0;
        r = matvec_transposed(net.layers[l].weights, r);
    }
    return r;
}

}  // namespace

KinkSumResult kink_sum_check(const Network& net, const PathSpec& path, std::size_t cls) {
    require_relu(net, "kink_sum_check");
    if (cls >= net.output_dim()) throw std::out_of_range("kink_sum_check: class index out of range");

    KinkSumResult res;
    res.kinks = find_kinks(net, path);

    const Vec g_start = input_gradient(net, path.start, cls);
    const Vec g_end = input_gradient(net, path.end, cls);
    res.measured_dh.resize(g_start.size());
    for (std::size_t i = 0; i < g_start.size(); ++i) res.measured_dh[i] = g_start[i] - g_end[i];

    Vec d(path.start.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = path.end[i] - path.start[i];

    res.formula_dh.assign(g_start.size(), 0.0);
    for (const KinkRecord& k : res.kinks) {
        Vec xk(path.start.size());
        for (std::size_t i = 0; i < xk.size(); ++i) xk[i] = path.start[i] + k.t * d[i];
        const ForwardTrace tr = forward(net, xk);
        const Vec adj = adjoint_at_hidden_output(net, tr, cls, k.layer);
        const Vec row = preactivation_input_row(net, tr, k.layer, k.unit);
        const double scale = -static_cast<double>(k.sign) * adj[k.unit];
        for (std::size_t i = 0; i < row.size(); ++i) res.formula_dh[i] += scale * row[i];
    }

    double prod = 1.0;
    for (double nrm : scalar_output_norms(net, cls)) prod *= nrm * nrm;
    res.theorem2_bound = static_cast<double>(res.kinks.size()) * prod;
    return res;
}

Network beta_interchange(const Network& net, double beta2) {
    if (!net.activation.is_softplus())
        throw std::domain_error("beta_interchange: requires a Softplus network");
    if (!(beta2 > 0.0)) throw std::invalid_argument("beta_interchange: beta2 must be positive");
    if (net.depth() < 2)
        throw std::invalid_argument("beta_interchange: undefined for single-layer networks");

    const double beta1 = net.activation.beta;
    const double in_scale = beta1 / beta2;
    const double out_scale = beta2 / beta1;

    Network out = net;
    out.activation = Activation::softplus(beta2);
    for (auto& w : out.layers.front().weights.data) w *= in_scale;
    for (auto& w : out.layers.back().weights.data) w *= out_scale;
    for (std::size_t l = 0; l + 1 < out.depth(); ++l)
        for (auto& b : out.layers[l].biases) b *= in_scale;
    return out;
}

}  // namespace robex
