#ifndef ROBEX_NUMERICS_HPP
#define ROBEX_NUMERICS_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

namespace robex {

/// Dense row-major matrix of doubles. All reductions over its entries run
/// in ascending index order so results do not depend on scheduling.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, rows*cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n);
    bool all_finite() const;
};

using Vec = std::vector<double>;

/// m * v with a fixed ascending-column summation order.
/// Throws std::invalid_argument on dimension mismatch.
Vec matvec(const Matrix& m, const Vec& v);

/// m^T * v, same fixed summation order. Throws on dimension mismatch.
Vec matvec_transposed(const Matrix& m, const Vec& v);

/// sqrt(sum of squared entries).
double frobenius_norm(const Matrix& m);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);

/// Deterministic random source. The draw sequence is a pure function of the
/// seed; the exact bit patterns are an implementation detail, only the
/// distributional contract is stable. Single-owner: derive children via
/// child() instead of sharing one instance across parallel work.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double next_uniform();
    /// Standard normal via the polar method.
    double next_normal();
    /// Laplace(0, b). Throws std::invalid_argument for b <= 0.
    double next_laplace(double b);
    /// Uniform in [lo, hi).
    double next_uniform_in(double lo, double hi);
    /// Uniform integer in [0, n).
    std::size_t next_index(std::size_t n);

    /// Independent stream derived from (seed, stream id).
    Rng child(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Stable seed derivation for (seed, stream) pairs; used wherever parallel
/// work must not share a generator.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

Vec sample_standard_normal(Rng& rng, std::size_t n);
Vec sample_laplace(Rng& rng, std::size_t n, double b);

}  // namespace robex

#endif
