#include "robex/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace robex {

std::string noise_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::Laplace: return "laplace";
        case NoiseKind::SaltPepper: return "saltpepper";
    }
    return "?";
}

std::optional<NoiseKind> parse_noise(const std::string& name) {
    if (name == "gaussian") return NoiseKind::Gaussian;
    if (name == "laplace") return NoiseKind::Laplace;
    if (name == "saltpepper") return NoiseKind::SaltPepper;
    return std::nullopt;
}

Vec perturb(const Vec& x, const NoiseSpec& spec, const Domain& domain, Rng& rng,
            std::size_t channels) {
    if (!(spec.level >= 0.0) || spec.level > 0.5)
        throw std::invalid_argument("perturb: noise level must lie in [0, 0.5]");
    if (channels == 0 || x.size() % channels != 0)
        throw std::invalid_argument("perturb: length not divisible by channel count");
    const double range = domain.x_max - domain.x_min;

    Vec out = x;
    switch (spec.kind) {
        case NoiseKind::Gaussian: {
            const double sigma = range * spec.level;
            for (auto& v : out) v += sigma * rng.next_normal();
            break;
        }
        case NoiseKind::Laplace: {
            const double b = range * spec.level;
            if (b > 0.0)
                for (auto& v : out) v += rng.next_laplace(b);
            break;
        }
        case NoiseKind::SaltPepper: {
            const std::size_t pixels = x.size() / channels;
            const std::size_t count =
                static_cast<std::size_t>(std::ceil(static_cast<double>(pixels) * spec.level / 2.0));
            // partial Fisher-Yates for distinct pixel indices
            std::vector<std::size_t> idx(pixels);
            for (std::size_t i = 0; i < pixels; ++i) idx[i] = i;
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t j = i + rng.next_index(pixels - i);
                std::swap(idx[i], idx[j]);
                const double value = rng.next_uniform() < 0.5 ? domain.x_min : domain.x_max;
                for (std::size_t c = 0; c < channels; ++c) out[c * pixels + idx[i]] = value;
            }
            break;
        }
    }
    return out;
}

std::optional<double> pcc(const Vec& u, const Vec& v) {
    if (u.size() != v.size()) throw std::invalid_argument("pcc: length mismatch");
    if (u.size() < 2) throw std::invalid_argument("pcc: needs at least two entries");
    const double n = static_cast<double>(u.size());
    double mu = 0.0, mv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        mu += u[i];
        mv += v[i];
    }
    mu /= n;
    mv /= n;
    double suu = 0.0, svv = 0.0, suv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double du = u[i] - mu;
        const double dv = v[i] - mv;
        suu += du * du;
        svv += dv * dv;
        suv += du * dv;
    }
    if (suu == 0.0 || svv == 0.0) return std::nullopt;  // constant input: undefined
    return suv / std::sqrt(suu * svv);
}

double mse(const Vec& u, const Vec& v) {
    if (u.size() != v.size()) throw std::invalid_argument("mse: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        acc += d * d;
    }
    return acc / static_cast<double>(u.size());
}

double ssim(const Vec& u, const Vec& v, std::size_t height, std::size_t width,
            double dynamic_range) {
    constexpr std::size_t kWin = 7;
    constexpr double k1 = 0.01, k2 = 0.03;
    if (u.size() != v.size() || u.size() != height * width)
        throw std::invalid_argument("ssim: shape mismatch");
    if (height < kWin || width < kWin)
        throw std::invalid_argument("ssim: image smaller than the 7x7 window");
    if (!(dynamic_range > 0.0)) throw std::invalid_argument("ssim: dynamic range must be positive");

    const double c1 = (k1 * dynamic_range) * (k1 * dynamic_range);
    const double c2 = (k2 * dynamic_range) * (k2 * dynamic_range);
    const double inv_win = 1.0 / static_cast<double>(kWin * kWin);

    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t r = 0; r + kWin <= height; ++r) {
        for (std::size_t c = 0; c + kWin <= width; ++c) {
            double su = 0.0, sv = 0.0;
            for (std::size_t i = 0; i < kWin; ++i)
                for (std::size_t j = 0; j < kWin; ++j) {
                    su += u[(r + i) * width + (c + j)];
                    sv += v[(r + i) * width + (c + j)];
                }
            const double mu = su * inv_win;
            const double mv = sv * inv_win;
            double var_u = 0.0, var_v = 0.0, cov = 0.0;
            for (std::size_t i = 0; i < kWin; ++i)
                for (std::size_t j = 0; j < kWin; ++j) {
                    const double du = u[(r + i) * width + (c + j)] - mu;
                    const double dv = v[(r + i) * width + (c + j)] - mv;
                    var_u += du * du;
                    var_v += dv * dv;
                    cov += du * dv;
                }
            var_u *= inv_win;
            var_v *= inv_win;
            cov *= inv_win;
            const double num = (2.0 * mu * mv + c1) * (2.0 * cov + c2);
            const double den = (mu * mu + mv * mv + c1) * (var_u + var_v + c2);
            total += num / den;
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

double MetricAccumulator::mean() const {
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    return sum / static_cast<double>(n);
}

double MetricAccumulator::stddev() const {
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    const double m = mean();
    const double v = sumsq / static_cast<double>(n) - m * m;
    return std::sqrt(v > 0.0 ? v : 0.0);
}

double accuracy(const Network& net, const std::vector<Vec>& features, const std::vector<int>& labels) {
    if (features.empty() || features.size() != labels.size())
        throw std::invalid_argument("accuracy: empty or mismatched dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < features.size(); ++i)
        if (forward(net, features[i]).predicted == static_cast<std::size_t>(labels[i])) ++correct;
    return static_cast<double>(correct) / static_cast<double>(features.size());
}

RobustnessReport robustness_sweep(const Network& net, const SweepDataset& data, ExplMethod method,
                                  const std::vector<NoiseSpec>& specs, const SweepConfig& cfg) {
    if (!data.features || data.features->empty())
        throw std::invalid_argument("robustness_sweep: empty dataset");
    const std::vector<Vec>& xs = *data.features;
    const std::vector<int>& ys = *data.labels;

    const bool has_grid = data.grid && data.grid->first >= 7 && data.grid->second >= 7;

    struct Acc {
        MetricAccumulator pcc_acc, ssim_acc, mse_acc;
        std::size_t correct = 0;
        std::size_t excluded = 0;
    };
    std::vector<Acc> acc(specs.size());

    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Vec& x = xs[i];
        const std::size_t k = forward(net, x).predicted;
        const ExplanationMap base = normalize_map(compute_map(net, x, method, cfg.explain, k),
                                                  data.channels);

        for (std::size_t j = 0; j < specs.size(); ++j) {
            Rng rng(mix_seed(mix_seed(mix_seed(cfg.seed, specs[j].seed), i), j));
            const Vec x_adv = perturb(x, specs[j], data.domain, rng, data.channels);

            if (forward(net, x_adv).predicted == static_cast<std::size_t>(ys[i])) ++acc[j].correct;

            const ExplanationMap adv = normalize_map(compute_map(net, x_adv, method, cfg.explain, k),
                                                     data.channels);

            acc[j].mse_acc.add(mse(base.values, adv.values));

            if (const auto r = pcc(base.values, adv.values))
                acc[j].pcc_acc.add(*r);
            else
                ++acc[j].excluded;

            if (has_grid) {
                double lo = base.values[0], hi = base.values[0];
                for (double v : base.values) { lo = std::min(lo, v); hi = std::max(hi, v); }
                for (double v : adv.values) { lo = std::min(lo, v); hi = std::max(hi, v); }
                const double range = hi - lo;
                acc[j].ssim_acc.add(range > 0.0
                                        ? ssim(base.values, adv.values, data.grid->first,
                                               data.grid->second, range)
                                        : 1.0);  // both maps constant and equal
            }
        }
    }

    RobustnessReport report;
    report.method = method;
    report.rows.reserve(specs.size());
    const double n = static_cast<double>(xs.size());
    for (std::size_t j = 0; j < specs.size(); ++j) {
        ReportRow row;
        row.kind = specs[j].kind;
        row.level = specs[j].level;
        row.pcc_mean = acc[j].pcc_acc.mean();
        row.pcc_std = acc[j].pcc_acc.stddev();
        row.ssim_mean = acc[j].ssim_acc.mean();
        row.ssim_std = acc[j].ssim_acc.stddev();
        row.mse_mean = acc[j].mse_acc.mean();
        row.mse_std = acc[j].mse_acc.stddev();
        row.perturbed_accuracy = static_cast<double>(acc[j].correct) / n;
        row.n = xs.size();
        row.n_excluded = acc[j].excluded;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace robex
