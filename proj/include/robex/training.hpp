#ifndef ROBEX_TRAINING_HPP
#define ROBEX_TRAINING_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "robex/network.hpp"
#include "robex/numerics.hpp"

namespace robex {

struct TrainConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.0;      // lambda
    double curvature_weight = 0.0;  // zeta; requires Softplus when > 0
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    double lr_decay = 0.98;  // multiplicative, per epoch

    void validate(const Activation& act) const;
};

struct HessianEstimate {
    double value = 0.0;  // mean of per_sample; estimates ||H||_F^2
    std::vector<double> per_sample;
};

/// Monte-Carlo estimate of ||H(g_cls)(x)||_F^2: mean over draws v ~ N(0, I)
/// of ||H v||^2. Unbiased. Softplus networks only; samples >= 1.
HessianEstimate estimate_hessian_sq_norm(const Network& net, const Vec& x, std::size_t cls,
                                         std::size_t samples, Rng& rng);

/// Raised when a step or epoch produces a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, std::size_t step, const std::string& what)
        : std::runtime_error(what), epoch(epoch), step(step) {}
    std::size_t epoch;
    std::size_t step;
};

struct SgdState {
    std::vector<Matrix> vel_w;
    std::vector<Vec> vel_b;
    double lr = 0.0;

    static SgdState init(const Network& net, const TrainConfig& cfg);
};

struct StepBreakdown {
    double base_loss = 0.0;       // mean cross-entropy over the batch
    double curvature_term = 0.0;  // zeta * batch-mean single-draw ||Hv||^2
    double hessian_estimate = 0.0;  // batch-mean ||Hv||^2 (without zeta)
    std::size_t correct = 0;
};

/// One SGD step with momentum: u <- momentum*u + (dL/dw + lambda*w),
/// w <- w - lr*u. The curvature penalty draws one v per input and
/// differentiates through the estimator with v held fixed. A non-finite loss
/// rejects the step and raises DivergenceError.
StepBreakdown sgd_step(Network& net, const LabeledBatch& batch, const TrainConfig& cfg,
                       SgdState& state, Rng& rng);

struct EpochMetrics {
    std::size_t epoch = 0;
    double loss = 0.0;      // mean base loss over the epoch's steps
    double curvature = 0.0; // mean curvature term (zeta included)
    double hessian_estimate = 0.0;  // mean ||Hv||^2 estimate; 0 when zeta == 0
    double accuracy = 0.0;  // training accuracy accumulated over the epoch
};

struct DivergenceInfo {
    std::size_t epoch = 0;
    std::size_t step = 0;
    std::string message;
};

struct TrainResult {
    Network net;  // on divergence: the last finite state
    std::vector<EpochMetrics> metrics;  // completed epochs only
    std::optional<DivergenceInfo> diverged;
};

struct TrainData {
    const std::vector<Vec>* features = nullptr;
    const std::vector<int>* labels = nullptr;
};

/// Full training loop: per-epoch seeded shuffle, sgd_step over batches,
/// per-epoch learning-rate decay. A pure function of (data, cfg, arch):
/// identical inputs give bitwise-identical weights and metrics.
TrainResult train(const TrainData& data, const TrainConfig& cfg,
                  const std::vector<std::size_t>& layer_sizes, const Activation& act,
                  double x_min = 0.0, double x_max = 1.0);

/// Deterministic initial network for the given architecture and seed
/// (uniform +-1/sqrt(fan_in) weights, zero biases).
Network init_network(const std::vector<std::size_t>& layer_sizes, const Activation& act,
                     std::uint64_t seed, double x_min = 0.0, double x_max = 1.0);

}  // namespace robex

#endif
