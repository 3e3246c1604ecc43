#ifndef ROBEX_ROBUSTNESS_HPP
#define ROBEX_ROBUSTNESS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robex/explain.hpp"
#include "robex/network.hpp"
#include "robex/numerics.hpp"

namespace robex {

enum class NoiseKind { Gaussian, Laplace, SaltPepper };

std::string noise_name(NoiseKind k);
std::optional<NoiseKind> parse_noise(const std::string& name);

/// Noise level nu is dimensionless: additive noise uses scale
/// (x_max - x_min) * nu, salt-pepper flips ceil(n_pixels * nu / 2) pixels.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::Gaussian;
    double level = 0.0;  // in [0, 0.5]
    std::uint64_t seed = 0;
};

struct Domain {
    double x_min = 0.0;
    double x_max = 1.0;
};

/// One perturbation draw. Additive noise is not clipped to the domain.
/// Salt-pepper treats the vector as `channels` planar channels and sets whole
/// pixels to x_min or x_max with equal probability. Throws for nu outside
/// [0, 0.5].
Vec perturb(const Vec& x, const NoiseSpec& spec, const Domain& domain, Rng& rng,
            std::size_t channels = 1);

/// Pearson correlation. Empty when either vector is constant (undefined).
std::optional<double> pcc(const Vec& u, const Vec& v);

double mse(const Vec& u, const Vec& v);

/// Mean SSIM over all fully-interior 7x7 windows, uniform weighting,
/// k1 = 0.01, k2 = 0.03, dynamic range L supplied by the caller. Both images
/// are `height` x `width` row-major and must be at least 7x7.
double ssim(const Vec& u, const Vec& v, std::size_t height, std::size_t width, double dynamic_range);

struct MetricAccumulator {
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    void add(double x) { sum += x; sumsq += x * x; ++n; }
    double mean() const;
    double stddev() const;  // population
};

struct ReportRow {
    NoiseKind kind;
    double level;
    double pcc_mean, pcc_std;
    double ssim_mean, ssim_std;  // NaN when no image grid is available
    double mse_mean, mse_std;
    double perturbed_accuracy;
    std::size_t n;           // samples scored
    std::size_t n_excluded;  // constant-map samples excluded from the PCC mean
};

struct RobustnessReport {
    ExplMethod method;
    std::vector<ReportRow> rows;
};

struct SweepDataset {
    const std::vector<Vec>* features = nullptr;
    const std::vector<int>* labels = nullptr;
    Domain domain;
    std::size_t channels = 1;
    /// Pixel grid for SSIM; SSIM is skipped (NaN) when absent or below 7x7.
    std::optional<std::pair<std::size_t, std::size_t>> grid;  // height, width
};

struct SweepConfig {
    std::uint64_t seed = 0;  // master seed; per-sample rngs derive from it
    ExplainOptions explain;
};

/// Fraction of samples whose argmax logit equals the label.
double accuracy(const Network& net, const std::vector<Vec>& features, const std::vector<int>& labels);

/// The full evaluation protocol: per sample compute the normalised map for
/// the predicted class k, perturb once per spec, recompute the map for the
/// SAME class k, and score PCC / SSIM / MSE plus perturbed-input accuracy.
RobustnessReport robustness_sweep(const Network& net, const SweepDataset& data, ExplMethod method,
                                  const std::vector<NoiseSpec>& specs, const SweepConfig& cfg);

}  // namespace robex

#endif
