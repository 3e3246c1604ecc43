#include "robex/explain.hpp"

#include <cmath>
#include <stdexcept>

namespace robex {

std::string method_name(ExplMethod m) {
    switch (m) {
        case ExplMethod::Gradient: return "gradient";
        case ExplMethod::GradTimesInput: return "gradxinput";
        case ExplMethod::IntegratedGradients: return "intgrad";
        case ExplMethod::GuidedBackprop: return "gbp";
        case ExplMethod::Lrp: return "lrp";
    }
    return "?";
}

std::optional<ExplMethod> parse_method(const std::string& name) {
    if (name == "gradient") return ExplMethod::Gradient;
    if (name == "gradxinput") return ExplMethod::GradTimesInput;
    if (name == "intgrad") return ExplMethod::IntegratedGradients;
    if (name == "gbp") return ExplMethod::GuidedBackprop;
    if (name == "lrp") return ExplMethod::Lrp;
    return std::nullopt;
}

LrpConfig LrpConfig::from_network(const Network& net) {
    LrpConfig cfg;
    cfg.lower.assign(net.input_dim(), net.x_min);
    cfg.upper.assign(net.input_dim(), net.x_max);
    return cfg;
}

namespace {

std::size_t resolve_class(const Network& net, const Vec& x, std::optional<std::size_t> cls) {
    if (cls) {
        if (*cls >= net.output_dim()) throw std::out_of_range("explain: class index out of range");
        return *cls;
    }
    return forward(net, x).predicted;
}

}  // namespace

ExplanationMap gradient_map(const Network& net, const Vec& x, std::optional<std::size_t> cls) {
    const std::size_t k = resolve_class(net, x, cls);
    return {input_gradient(net, x, k), ExplMethod::Gradient, k, false};
}

ExplanationMap gradient_times_input_map(const Network& net, const Vec& x,
                                        std::optional<std::size_t> cls) {
    const std::size_t k = resolve_class(net, x, cls);
    Vec g = input_gradient(net, x, k);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= x[i];
    return {std::move(g), ExplMethod::GradTimesInput, k, false};
}

ExplanationMap integrated_gradients_map(const Network& net, const Vec& x, const Vec& baseline,
                                        std::size_t steps, std::optional<std::size_t> cls) {
    if (steps < 1) throw std::invalid_argument("integrated_gradients: steps must be >= 1");
    if (baseline.size() != x.size())
        throw std::invalid_argument("integrated_gradients: baseline dimension mismatch");
    const std::size_t k = resolve_class(net, x, cls);

    Vec acc(x.size(), 0.0);
    Vec point(x.size());
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = (static_cast<double>(s) + 0.5) / static_cast<double>(steps);
        for (std::size_t i = 0; i < x.size(); ++i) point[i] = baseline[i] + t * (x[i] - baseline[i]);
        const Vec g = input_gradient(net, point, k);
        for (std::size_t i = 0; i < x.size(); ++i) acc[i] += g[i];
    }
    const double inv = 1.0 / static_cast<double>(steps);
    for (std::size_t i = 0; i < x.size(); ++i) acc[i] = (x[i] - baseline[i]) * acc[i] * inv;
    return {std::move(acc), ExplMethod::IntegratedGradients, k, false};
}

ExplanationMap guided_backprop_map(const Network& net, const Vec& x,
                                   std::optional<std::size_t> cls) {
    const std::size_t k = resolve_class(net, x, cls);
    const ForwardTrace tr = forward(net, x);
    const std::size_t depth = net.depth();

    Vec u(net.output_dim(), 0.0);
    u[k] = 1.0;
    for (std::size_t l = depth; l-- > 0;) {
        Vec q = matvec_transposed(net.layers[l].weights, u);
        if (l == 0) return {std::move(q), ExplMethod::GuidedBackprop, k, false};
        u.resize(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double masked = q[i] > 0.0 ? q[i] : 0.0;
            u[i] = masked * net.activation.d1(tr.pre[l - 1][i]);
        }
    }
    return {};  // unreachable
}

Vec lrp_zplus_step(const Matrix& weights, const Vec& input_acts, const Vec& upstream,
                   double epsilon, std::size_t* zero_denominators) {
    if (weights.cols != input_acts.size() || weights.rows != upstream.size())
        throw std::invalid_argument("lrp_zplus_step: dimension mismatch");
    Vec out(weights.cols, 0.0);
    for (std::size_t j = 0; j < weights.rows; ++j) {
        double den = 0.0;
        for (std::size_t i = 0; i < weights.cols; ++i) {
            const double w = weights(j, i);
            if (w > 0.0) den += input_acts[i] * w;
        }
        const double stab = den + (den >= 0.0 ? epsilon : -epsilon);
        if (stab == 0.0) {
            if (zero_denominators) ++(*zero_denominators);
            continue;  // relevance of this unit is dropped
        }
        const double scale = upstream[j] / stab;
        for (std::size_t i = 0; i < weights.cols; ++i) {
            const double w = weights(j, i);
            if (w > 0.0) out[i] += input_acts[i] * w * scale;
        }
    }
    return out;
}

Vec lrp_zb_step(const Matrix& weights, const Vec& input_acts, const Vec& lower, const Vec& upper,
                const Vec& upstream, double epsilon, std::size_t* zero_denominators) {
    if (weights.cols != input_acts.size() || weights.rows != upstream.size() ||
        lower.size() != input_acts.size() || upper.size() != input_acts.size())
        throw std::invalid_argument("lrp_zb_step: dimension mismatch");
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (lower[i] > upper[i]) throw std::invalid_argument("lrp_zb_step: lower bound above upper bound");

    Vec out(weights.cols, 0.0);
    Vec z(weights.cols);
    for (std::size_t j = 0; j < weights.rows; ++j) {
        double den = 0.0;
        for (std::size_t i = 0; i < weights.cols; ++i) {
            const double w = weights(j, i);
            const double wp = w > 0.0 ? w : 0.0;
            const double wm = w < 0.0 ? w : 0.0;
            z[i] = input_acts[i] * w - lower[i] * wp - upper[i] * wm;
            den += z[i];
        }
        const double stab = den + (den >= 0.0 ? epsilon : -epsilon);
        if (stab == 0.0) {
            if (zero_denominators) ++(*zero_denominators);
            continue;
        }
        const double scale = upstream[j] / stab;
        for (std::size_t i = 0; i < weights.cols; ++i) out[i] += z[i] * scale;
    }
    return out;
}

ExplanationMap lrp_map(const Network& net, const Vec& x, const LrpConfig& cfg,
                       std::optional<std::size_t> cls, std::size_t* zero_denominators) {
    if (net.depth() < 2)
        throw std::invalid_argument("lrp_map: needs at least two layers (z+ and z^B rules)");
    const std::size_t k = resolve_class(net, x, cls);
    const ForwardTrace tr = forward(net, x);

    Vec relevance(net.output_dim(), 0.0);
    relevance[k] = 1.0;
    for (std::size_t l = net.depth(); l-- > 1;)
        relevance = lrp_zplus_step(net.layers[l].weights, tr.inputs[l], relevance, cfg.epsilon,
                                   zero_denominators);
    relevance = lrp_zb_step(net.layers[0].weights, x, cfg.lower, cfg.upper, relevance, cfg.epsilon,
                            zero_denominators);
    return {std::move(relevance), ExplMethod::Lrp, k, false};
}

ExplanationMap normalize_map(const ExplanationMap& raw, std::size_t channels) {
    if (channels == 0 || raw.values.size() % channels != 0)
        throw std::invalid_argument("normalize_map: length not divisible by channel count");
    const std::size_t pixels = raw.values.size() / channels;

    ExplanationMap out;
    out.method = raw.method;
    out.class_explained = raw.class_explained;
    out.values.assign(pixels, 0.0);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t p = 0; p < pixels; ++p) out.values[p] += std::abs(raw.values[c * pixels + p]);

    double mass = 0.0;
    for (double v : out.values) mass += v;
    if (mass == 0.0) {
        out.normalized = false;
        return out;
    }
    for (auto& v : out.values) v /= mass;
    out.normalized = true;
    return out;
}

ExplanationMap compute_map(const Network& net, const Vec& x, ExplMethod method,
                           const ExplainOptions& opts, std::optional<std::size_t> cls) {
    switch (method) {
        case ExplMethod::Gradient:
            return gradient_map(net, x, cls);
        case ExplMethod::GradTimesInput:
            return gradient_times_input_map(net, x, cls);
        case ExplMethod::IntegratedGradients: {
            const Vec baseline = opts.ig_baseline ? *opts.ig_baseline : Vec(x.size(), net.x_min);
            return integrated_gradients_map(net, x, baseline, opts.ig_steps, cls);
        }
        case ExplMethod::GuidedBackprop:
            return guided_backprop_map(net, x, cls);
        case ExplMethod::Lrp: {
            const LrpConfig cfg = opts.lrp_from_network ? LrpConfig::from_network(net) : opts.lrp;
            return lrp_map(net, x, cfg, cls);
        }
    }
    throw std::invalid_argument("compute_map: unknown method");
}

}  // namespace robex
