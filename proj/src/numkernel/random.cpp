#include "smdmeta/numkernel.hpp"

#include <cmath>
#include <random>

#include "smdmeta/errors.hpp"

namespace smdmeta {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> RandomStream::philox(std::array<std::uint32_t, 4> c,
                                                  std::array<std::uint32_t, 2> k) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, c[0], hi0, lo0);
        mulhilo(kPhiloxM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kPhiloxW0;
        k[1] += kPhiloxW1;
    }
    return c;
}

RandomStream::result_type RandomStream::operator()() noexcept {
    if (buffered_ == 0) {
        const std::array<std::uint32_t, 4> counter{
            static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(stream_id_),
            static_cast<std::uint32_t>(stream_id_ >> 32)};
        const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                               static_cast<std::uint32_t>(seed_ >> 32)};
        const auto out = philox(counter, key);
        buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        ++block_;
        buffered_ = 2;
    }
    return buffer_[2 - buffered_--];
}

double RandomStream::uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double sample_normal(RandomStream& stream) {
    std::normal_distribution<double> normal;
    return normal(stream);
}

double sample_chisq(RandomStream& stream, double df) {
    if (!(df > 0.0)) throw DomainError("sample_chisq: df must be positive");
    std::chi_squared_distribution<double> chisq(df);
    return chisq(stream);
}

double sample_noncentral_t(RandomStream& stream, int df, double ncp) {
    if (df < 1) throw DomainError("sample_noncentral_t: df must be >= 1");
    const double z = sample_normal(stream);
    const double x = sample_chisq(stream, static_cast<double>(df));
    return (z + ncp) / std::sqrt(x / df);
}

}  // namespace smdmeta
