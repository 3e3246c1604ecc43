#include "robex/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "robex/bounds.hpp"
#include "robex/model_io.hpp"
#include "robex/network.hpp"
#include "robex/training.hpp"

namespace robex {

namespace {

Network random_net(Rng& rng, const std::vector<std::size_t>& sizes, Activation act) {
    Network net;
    net.activation = act;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        Layer layer;
        layer.weights = Matrix(sizes[l + 1], sizes[l]);
        for (auto& w : layer.weights.data) w = rng.next_uniform_in(-1, 1);
        layer.biases.resize(sizes[l + 1]);
        for (auto& b : layer.biases) b = rng.next_uniform_in(-0.5, 0.5);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

double exact_hessian_sq_norm(const Network& net, const Vec& x, std::size_t cls) {
    const Matrix h = exact_hessian(net, x, cls);
    double acc = 0.0;
    for (double v : h.data) acc += v * v;
    return acc;
}

SuiteResult estimator_suite(std::uint64_t seed) {
    // single-draw estimates, batch-averaged across nets and inputs, against
    // the exact oracle
    Rng rng(mix_seed(seed, 1));
    const std::size_t nets = 20, batch = 128;
    double est_sum = 0.0, exact_sum = 0.0;
    for (std::size_t n = 0; n < nets; ++n) {
        Network net = random_net(rng, {8, 16, 8, 1}, Activation::softplus(10.0));
        for (std::size_t i = 0; i < batch; ++i) {
            Vec x(8);
            for (auto& v : x) v = rng.next_uniform_in(0, 1);
            est_sum += estimate_hessian_sq_norm(net, x, 0, 1, rng).value;
            exact_sum += exact_hessian_sq_norm(net, x, 0);
        }
    }
    const double rel = std::abs(est_sum - exact_sum) / exact_sum;
    SuiteResult res;
    res.name = "hessian-estimator";
    res.passed = rel <= 0.10;
    std::ostringstream ss;
    ss << "batch-averaged single-sample relative error " << format_real(rel) << " (" << nets
       << " nets x " << batch << " inputs, threshold 0.10)";
    res.stats = ss.str();
    return res;
}

SuiteResult beta_interchange_suite(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 2));
    const std::size_t nets = 10, inputs = 200;
    double worst = 0.0;
    for (std::size_t n = 0; n < nets; ++n) {
        Network net = random_net(rng, {4, 8, 6, 2}, Activation::softplus(1.0));
        Network swapped = beta_interchange(net, 10.0);
        for (std::size_t i = 0; i < inputs; ++i) {
            Vec x(4);
            for (auto& v : x) v = rng.next_uniform_in(-2, 2);
            const Vec a = forward(net, x).logits;
            const Vec b = forward(swapped, x).logits;
            for (std::size_t j = 0; j < a.size(); ++j) {
                const double rel = std::abs(a[j] - b[j]) / std::max(1.0, std::abs(a[j]));
                worst = std::max(worst, rel);
            }
        }
    }
    SuiteResult res;
    res.name = "beta-interchange";
    res.passed = worst <= 1e-9;
    res.stats = "max relative output deviation " + format_real(worst) + " (threshold 1e-9)";
    return res;
}

SuiteResult kink_suite(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 3));
    const std::size_t trials = 40;
    double worst_dev = 0.0;
    std::size_t bound_violations = 0, total_kinks = 0;
    for (std::size_t n = 0; n < trials; ++n) {
        Network net = random_net(rng, {2, 8, 8, 1}, Activation::relu());
        PathSpec path;
        path.start = {rng.next_uniform_in(-1, 1), rng.next_uniform_in(-1, 1)};
        path.end = {path.start[0] + rng.next_uniform_in(-0.5, 0.5),
                    path.start[1] + rng.next_uniform_in(-0.5, 0.5)};
        const KinkSumResult r = kink_sum_check(net, path, 0);
        total_kinks += r.kinks.size();
        for (std::size_t i = 0; i < r.measured_dh.size(); ++i)
            worst_dev = std::max(worst_dev, std::abs(r.measured_dh[i] - r.formula_dh[i]));
        if (dot(r.measured_dh, r.measured_dh) > r.theorem2_bound + 1e-12) ++bound_violations;
    }
    SuiteResult res;
    res.name = "kink-sum";
    res.passed = worst_dev <= 1e-9 && bound_violations == 0;
    std::ostringstream ss;
    ss << "max |formula - measured| " << format_real(worst_dev) << " over " << trials
       << " paths (" << total_kinks << " kinks), bound violations " << bound_violations;
    res.stats = ss.str();
    return res;
}

SuiteResult soundness_suite(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 4));
    const double betas[] = {0.5, 1.0, 5.0, 10.0};
    const std::size_t nets = 200, inputs = 5;
    std::size_t violations = 0;
    double min_slack = 1e300;
    for (std::size_t n = 0; n < nets; ++n) {
        const std::size_t width = 2 + rng.next_index(15);
        const std::size_t depth = 1 + rng.next_index(3);
        std::vector<std::size_t> sizes{1 + rng.next_index(16)};
        for (std::size_t l = 0; l < depth; ++l) sizes.push_back(width);
        sizes.push_back(1 + rng.next_index(4));
        Network net = random_net(rng, sizes, Activation::softplus(betas[n % 4]));
        const std::size_t cls = rng.next_index(net.output_dim());
        const BoundCertificate cert = theorem1_bound(net, cls);
        for (std::size_t i = 0; i < inputs; ++i) {
            Vec x(net.input_dim());
            for (auto& v : x) v = rng.next_uniform_in(-2, 2);
            const double measured = std::sqrt(exact_hessian_sq_norm(net, x, cls));
            min_slack = std::min(min_slack, cert.theorem1 - measured);
            if (measured > cert.theorem1) ++violations;
        }
    }
    SuiteResult res;
    res.name = "bound-soundness";
    res.passed = violations == 0;
    std::ostringstream ss;
    ss << violations << " violations over " << nets << " nets x " << inputs
       << " inputs, min slack " << format_real(min_slack);
    res.stats = ss.str();
    return res;
}

SuiteResult gradient_suite(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 5));
    const std::size_t trials = 60;
    double worst = 0.0;
    for (std::size_t n = 0; n < trials; ++n) {
        Network net = random_net(rng, {4, 8, 6, 2}, Activation::softplus(n % 2 ? 1.0 : 5.0));
        Vec x(4);
        for (auto& v : x) v = rng.next_uniform_in(-1, 1);
        const std::size_t cls = n % 2;
        const Vec g = input_gradient(net, x, cls);
        const double h = 1e-5;
        Vec xp = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            xp[i] = x[i] + h;
            const double fp = forward(net, xp).logits[cls];
            xp[i] = x[i] - h;
            const double fm = forward(net, xp).logits[cls];
            xp[i] = x[i];
            worst = std::max(worst, std::abs(g[i] - (fp - fm) / (2 * h)));
        }
    }
    SuiteResult res;
    res.name = "gradient-vs-fd";
    res.passed = worst <= 1e-6;
    res.stats = "max |analytic - central difference| " + format_real(worst) + " (threshold 1e-6)";
    return res;
}

}  // namespace

std::vector<SuiteResult> run_verification(std::uint64_t seed) {
    return {
        estimator_suite(seed),
        beta_interchange_suite(seed),
        kink_suite(seed),
        soundness_suite(seed),
        gradient_suite(seed),
    };
}

}  // namespace robex
