#include "robex/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace robex {

void TrainConfig::validate(const Activation& act) const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("config: momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw std::invalid_argument("config: weight decay must be nonnegative");
    if (curvature_weight < 0.0) throw std::invalid_argument("config: curvature weight must be nonnegative");
    if (curvature_weight > 0.0 && !act.is_softplus())
        throw std::invalid_argument(
            "config: curvature_weight > 0 requires the softplus activation "
            "(the ReLU Hessian is ill-defined)");
    if (batch_size < 1) throw std::invalid_argument("config: batch size must be >= 1");
    if (!(lr_decay > 0.0) || lr_decay > 1.0) throw std::invalid_argument("config: lr decay must lie in (0, 1]");
}

HessianEstimate estimate_hessian_sq_norm(const Network& net, const Vec& x, std::size_t cls,
                                         std::size_t samples, Rng& rng) {
    if (samples < 1) throw std::invalid_argument("estimate_hessian_sq_norm: samples must be >= 1");
    HessianEstimate est;
    est.per_sample.reserve(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        const Vec v = sample_standard_normal(rng, net.input_dim());
        const Vec hv = hessian_vector_product(net, x, cls, v);
        est.per_sample.push_back(dot(hv, hv));
    }
    double sum = 0.0;
    for (double e : est.per_sample) sum += e;
    est.value = sum / static_cast<double>(samples);
    return est;
}

SgdState SgdState::init(const Network& net, const TrainConfig& cfg) {
    SgdState st;
    st.lr = cfg.learning_rate;
    for (const Layer& layer : net.layers) {
        st.vel_w.emplace_back(layer.weights.rows, layer.weights.cols);
        st.vel_b.emplace_back(layer.biases.size(), 0.0);
    }
    return st;
}

StepBreakdown sgd_step(Network& net, const LabeledBatch& batch, const TrainConfig& cfg,
                       SgdState& state, Rng& rng) {
    cfg.validate(net.activation);

    BatchGradResult base = parameter_gradient(net, batch);
    StepBreakdown out;
    out.base_loss = base.mean_loss;
    out.correct = base.correct;

    if (cfg.curvature_weight > 0.0) {
        const double inv_n = 1.0 / static_cast<double>(batch.indices.size());
        double penalty_sum = 0.0;
        for (std::size_t idx : batch.indices) {
            const Vec& x = (*batch.features)[idx];
            // flatten the label logit: the class whose explanation should be
            // robust once training converges
            const std::size_t k = static_cast<std::size_t>((*batch.labels)[idx]);
            const Vec v = sample_standard_normal(rng, net.input_dim());
            const CurvatureGradResult cg = curvature_penalty_gradient(net, x, k, v);
            penalty_sum += cg.hv_sq;
            base.grads.add_scaled(cg.grads, cfg.curvature_weight * inv_n);
        }
        out.hessian_estimate = penalty_sum * inv_n;
        out.curvature_term = cfg.curvature_weight * out.hessian_estimate;
    }

    if (!std::isfinite(out.base_loss + out.curvature_term))
        throw DivergenceError(0, 0, "sgd_step: non-finite loss, step rejected");

    for (std::size_t l = 0; l < net.depth(); ++l) {
        Layer& layer = net.layers[l];
        Matrix& vw = state.vel_w[l];
        for (std::size_t k = 0; k < layer.weights.data.size(); ++k) {
            const double g = base.grads.dw[l].data[k] + cfg.weight_decay * layer.weights.data[k];
            vw.data[k] = cfg.momentum * vw.data[k] + g;
            layer.weights.data[k] -= state.lr * vw.data[k];
        }
        Vec& vb = state.vel_b[l];
        for (std::size_t k = 0; k < layer.biases.size(); ++k) {
            // biases are not decayed
            vb[k] = cfg.momentum * vb[k] + base.grads.db[l][k];
            layer.biases[k] -= state.lr * vb[k];
        }
    }
    return out;
}

Network init_network(const std::vector<std::size_t>& layer_sizes, const Activation& act,
                     std::uint64_t seed, double x_min, double x_max) {
    if (layer_sizes.size() < 2) throw std::invalid_argument("init_network: need input and output sizes");
    Rng rng(mix_seed(seed, 0x494e4954));
    Network net;
    net.activation = act;
    net.x_min = x_min;
    net.x_max = x_max;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        Layer layer;
        layer.weights = Matrix(layer_sizes[l + 1], layer_sizes[l]);
        const double scale = 1.0 / std::sqrt(static_cast<double>(layer_sizes[l]));
        for (auto& w : layer.weights.data) w = rng.next_uniform_in(-scale, scale);
        layer.biases.assign(layer_sizes[l + 1], 0.0);
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

TrainResult train(const TrainData& data, const TrainConfig& cfg,
                  const std::vector<std::size_t>& layer_sizes, const Activation& act,
                  double x_min, double x_max) {
    if (!data.features || data.features->empty())
        throw std::invalid_argument("train: empty dataset");
    if (data.features->size() != data.labels->size())
        throw std::invalid_argument("train: feature/label count mismatch");
    if (layer_sizes.front() != data.features->front().size())
        throw std::invalid_argument("train: architecture input size does not match the data");
    cfg.validate(act);

    TrainResult result;
    result.net = init_network(layer_sizes, act, cfg.seed, x_min, x_max);
    SgdState state = SgdState::init(result.net, cfg);
    Rng shuffle_rng(mix_seed(cfg.seed, 0x53485546));
    Rng noise_rng(mix_seed(cfg.seed, 0x485653));

    const std::size_t n = data.features->size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the epoch's stream
        for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[shuffle_rng.next_index(i + 1)]);

        EpochMetrics em;
        em.epoch = epoch;
        std::size_t steps = 0, correct = 0;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
            LabeledBatch batch;
            batch.features = data.features;
            batch.labels = data.labels;
            const std::size_t end = std::min(begin + cfg.batch_size, n);
            batch.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
            try {
                const StepBreakdown sb = sgd_step(result.net, batch, cfg, state, noise_rng);
                em.loss += sb.base_loss;
                em.curvature += sb.curvature_term;
                em.hessian_estimate += sb.hessian_estimate;
                correct += sb.correct;
            } catch (const std::runtime_error&) {
                // covers both the rejected-step path and non-finite forwards
                result.diverged = DivergenceInfo{epoch, steps,
                                                 "diverged (non-finite loss) at epoch " +
                                                     std::to_string(epoch) + ", step " +
                                                     std::to_string(steps)};
                return result;
            }
            ++steps;
        }
        em.loss /= static_cast<double>(steps);
        em.curvature /= static_cast<double>(steps);
        em.hessian_estimate /= static_cast<double>(steps);
        em.accuracy = static_cast<double>(correct) / static_cast<double>(n);
        result.metrics.push_back(em);

        state.lr *= cfg.lr_decay;
    }
    return result;
}

}  // namespace robex
