#include "robex/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace robex {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x)) return false;
    return true;
}

Vec matvec(const Matrix& m, const Vec& v) {
    if (m.cols != v.size()) throw std::invalid_argument("matvec: dimension mismatch");
    Vec out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        const double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * v[j];
        out[i] = acc;
    }
    return out;
}

Vec matvec_transposed(const Matrix& m, const Vec& v) {
    if (m.rows != v.size()) throw std::invalid_argument("matvec_transposed: dimension mismatch");
    Vec out(m.cols, 0.0);
    for (std::size_t j = 0; j < m.cols; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) acc += m.data[i * m.cols + j] * v[i];
        out[j] = acc;
    }
    return out;
}

double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double x : m.data) acc += x * x;
    return std::sqrt(acc);
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
    // xoshiro256++
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_uniform_in(double lo, double hi) {
    return lo + (hi - lo) * next_uniform();
}

std::size_t Rng::next_index(std::size_t n) {
    // rejection-free modulo is fine here; n is small relative to 2^64
    return static_cast<std::size_t>(next_u64() % n);
}

double Rng::next_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * next_uniform() - 1.0;
        v = 2.0 * next_uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double mul = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * mul;
    has_spare_ = true;
    return u * mul;
}

double Rng::next_laplace(double b) {
    if (!(b > 0.0)) throw std::invalid_argument("next_laplace: scale must be positive");
    const double u = next_uniform() - 0.5;
    const double a = std::abs(u);
    // inverse CDF; clamp the log argument away from 0 for u = +-0.5
    const double t = 1.0 - 2.0 * a;
    const double mag = -b * std::log(t > 0.0 ? t : 0x1.0p-53);
    return u < 0.0 ? -mag : mag;
}

Rng Rng::child(std::uint64_t stream) const {
    return Rng(mix_seed(seed_, stream));
}

Vec sample_standard_normal(Rng& rng, std::size_t n) {
    Vec out(n);
    for (auto& x : out) x = rng.next_normal();
    return out;
}

Vec sample_laplace(Rng& rng, std::size_t n, double b) {
    if (!(b > 0.0)) throw std::invalid_argument("sample_laplace: scale must be positive");
    Vec out(n);
    for (auto& x : out) x = rng.next_laplace(b);
    return out;
}

}  // namespace robex
