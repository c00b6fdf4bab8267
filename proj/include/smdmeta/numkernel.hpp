#pragma once

// Special functions, distribution primitives and random streams shared by the
// estimators and the simulation engine. Everything here is a pure function of
// its arguments (RandomStream is a value type: copying it forks the sequence).

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace smdmeta {

double ln_gamma(double x);

double normal_cdf(double x);
double normal_quantile(double p);

double chisq_cdf(double x, double df);
double chisq_pdf(double x, double df);
double chisq_quantile(double p, double df);

double t_cdf(double x, double df);
double t_pdf(double x, double df);
double t_quantile(double p, double df);

/// Counter-based Philox4x32-10 stream. The 64-bit seed is the cipher key; the
/// stream id occupies the high half of the 128-bit counter and the draw index
/// the low half, so distinct stream ids never share a block.
///
/// Satisfies UniformRandomBitGenerator, so it plugs into <random>
/// distributions directly.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : seed_(seed), stream_id_(stream_id) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Raw Philox4x32-10 block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                               std::array<std::uint32_t, 2> key) noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
};

/// Deterministic 64-bit mixer (splitmix64 finalizer) for deriving stream ids.
std::uint64_t mix64(std::uint64_t x) noexcept;

double sample_normal(RandomStream& stream);
double sample_chisq(RandomStream& stream, double df);

/// One draw of (Z + ncp) / sqrt(X / df), Z ~ N(0,1), X ~ chi^2_df independent.
double sample_noncentral_t(RandomStream& stream, int df, double ncp);

/// Positive linear combination of independent chi^2_1 variables.
class ChiSqMixture {
public:
    explicit ChiSqMixture(std::vector<double> coefficients);

    std::span<const double> coefficients() const noexcept { return coefficients_; }

private:
    std::vector<double> coefficients_;  // sorted descending, zeros dropped
};

struct MixtureCdf {
    double probability;
    double error_bound;  // truncation + quadrature, absolute
};

/// P(sum lambda_i chi^2_1 <= x). Rank one is the scaled chi-square, rank two a
/// smooth finite integral. Higher ranks use Ruben's chi-square series, or
/// Imhof's inversion formula when the coefficients are too spread out for it.
/// Throws NonConvergence when the certified bound exceeds 1e-6.
MixtureCdf mixture_cdf_detailed(double x, const ChiSqMixture& mix);
double mixture_cdf(double x, const ChiSqMixture& mix);

/// All eigenvalues of a symmetric matrix, descending.
std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& a);

/// Compensated summation (Neumaier).
class KahanSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    KahanSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace smdmeta
