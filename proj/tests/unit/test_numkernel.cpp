#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "smdmeta/errors.hpp"
#include "smdmeta/numkernel.hpp"
#include "smdmeta/smd.hpp"

using namespace smdmeta;
using doctest::Approx;

TEST_SUITE("numkernel") {

TEST_CASE("ln_gamma known values") {
    CHECK(ln_gamma(1.0) == Approx(0.0).epsilon(1e-14));
    CHECK(ln_gamma(0.5) == Approx(0.5723649429247001).epsilon(1e-12));
    CHECK(ln_gamma(5.0) == Approx(std::log(24.0)).epsilon(1e-12));
    CHECK(ln_gamma(1e6) == Approx(12815504.569147611).epsilon(1e-12));
    CHECK_THROWS_AS(ln_gamma(0.0), DomainError);
    CHECK_THROWS_AS(ln_gamma(-1.0), DomainError);
}

TEST_CASE("chisq_cdf") {
    CHECK(chisq_cdf(0.0, 3.7) == 0.0);
    CHECK(chisq_cdf(1.0, 1.0) == Approx(0.6826894921370859).epsilon(1e-10));
    CHECK(chisq_cdf(4.0, 4.0) == Approx(1.0 - std::exp(-2.0) * 3.0).epsilon(1e-10));
    CHECK_THROWS_AS(chisq_cdf(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(chisq_cdf(-1.0, 2.0), DomainError);
}

TEST_CASE("chisq_quantile") {
    CHECK(chisq_quantile(0.5, 2.0) == Approx(2.0 * std::log(2.0)).epsilon(1e-10));
    CHECK(chisq_quantile(0.975, 1.0) == Approx(5.023886187314888).epsilon(1e-9));
    CHECK(chisq_quantile(0.025, 1.0) == Approx(0.0009820691171752555).epsilon(1e-8));
    CHECK_THROWS_AS(chisq_quantile(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(chisq_quantile(1.0, 1.0), DomainError);
}

TEST_CASE("chisq quantile inverts cdf, fractional df included") {
    for (double df : {0.5, 1.0, 4.37, 29.0}) {
        for (double p = 0.001; p < 0.999; p += 0.0137) {
            const double x = chisq_quantile(p, df);
            CHECK(std::abs(chisq_cdf(x, df) - p) <= 1e-8);
        }
    }
}

TEST_CASE("t_quantile") {
    CHECK(t_quantile(0.5, 7.0) == Approx(0.0).epsilon(1e-12));
    CHECK(t_quantile(0.975, 1.0) == Approx(std::tan(std::numbers::pi * 0.475)).epsilon(1e-9));
    CHECK(t_quantile(0.975, 1.0) == Approx(12.706204736432095).epsilon(1e-9));
    CHECK(t_quantile(0.975, 1e9) == Approx(1.959963986912325).epsilon(1e-7));
    CHECK_THROWS_AS(t_quantile(1.5, 3.0), DomainError);
}

TEST_CASE("normal quantile and cdf") {
    CHECK(normal_quantile(0.975) == Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_cdf(normal_quantile(0.123)) == Approx(0.123).epsilon(1e-12));
}

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(RandomStream::philox({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(RandomStream::philox({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(RandomStream::philox({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
    RandomStream a(42, 7), b(42, 7), c(42, 8);
    bool all_same_c = true;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a();
        CHECK(x == b());
        all_same_c = all_same_c && (x == c());
    }
    CHECK_FALSE(all_same_c);
    RandomStream d(1, 1);
    for (int i = 0; i < 10000; ++i) {
        const double u = d.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("noncentral t draws: mean and variance") {
    const int n = 100000;
    SUBCASE("ncp 0, large df") {
        RandomStream s(11, 0);
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = sample_noncentral_t(s, 200, 0.0);
            sum += x;
            sum2 += x * x;
        }
        const double mean = sum / n;
        const double se = std::sqrt((sum2 / n - mean * mean) / n);
        CHECK(std::abs(mean) < 4.0 * se);
    }
    SUBCASE("df m, ncp c: mean c / J(m), analytic variance") {
        const int m = 18;
        const double c = 2.0;
        RandomStream s(12, 0);
        std::vector<double> xs(n);
        double sum = 0.0;
        for (auto& x : xs) {
            x = sample_noncentral_t(s, m, c);
            sum += x;
        }
        const double mean = sum / n;
        double ss = 0.0, s4 = 0.0;
        for (double x : xs) {
            ss += (x - mean) * (x - mean);
        }
        const double var = ss / (n - 1);
        for (double x : xs) s4 += std::pow((x - mean) * (x - mean) - var, 2);
        const double var_se = std::sqrt(s4 / n / n);
        const double mean_theory = c / j_factor(m);
        CHECK(std::abs(mean - mean_theory) < 4.0 * std::sqrt(var / n));
        const double var_theory = m * (1.0 + c * c) / (m - 2.0) - mean_theory * mean_theory;
        CHECK(std::abs(var - var_theory) < 5.0 * var_se);
    }
}

TEST_CASE("mixture CDF reductions") {
    CHECK(mixture_cdf(3.841, ChiSqMixture({1.0})) == Approx(0.9499863162360432).epsilon(1e-9));
    for (double x : {0.01, 0.3, 1.0, 2.5, 7.0, 20.0}) {
        CHECK(std::abs(mixture_cdf(x, ChiSqMixture({1.0, 1.0})) - chisq_cdf(x, 2.0)) < 1e-6);
        CHECK(std::abs(mixture_cdf(x, ChiSqMixture({1.0, 1.0, 1.0})) - chisq_cdf(x, 3.0)) < 1e-6);
        CHECK(std::abs(mixture_cdf(x, ChiSqMixture({1.0})) - chisq_cdf(x, 1.0)) < 1e-6);
        CHECK(std::abs(mixture_cdf(2.0 * x, ChiSqMixture({2.0, 0.0, 2.0})) - chisq_cdf(x, 2.0)) < 1e-6);
    }
    CHECK(mixture_cdf(0.0, ChiSqMixture({2.0, 1.0})) == 0.0);
}

TEST_CASE("mixture CDF against an independent quadrature value") {
    // Reference from a separate high-resolution Imhof integration.
    CHECK(mixture_cdf(5.0, ChiSqMixture({2.0, 1.0, 0.5})) == Approx(0.7735682085356397).epsilon(1e-7));
}

TEST_CASE("mixture CDF: widely spread coefficients take the quadrature path") {
    const ChiSqMixture mix({1.0, 0.3, 0.01, 0.001});
    const auto r = mixture_cdf_detailed(1.2, mix);
    CHECK(r.error_bound <= 1e-6);
    // Monte Carlo cross-check.
    std::mt19937_64 gen(5);
    std::normal_distribution<double> z;
    int hits = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double q = 0.0;
        for (double l : mix.coefficients()) {
            const double d = z(gen);
            q += l * d * d;
        }
        hits += q <= 1.2;
    }
    CHECK(std::abs(r.probability - static_cast<double>(hits) / n) < 0.005);
}

TEST_CASE("ChiSqMixture validation") {
    CHECK_THROWS_AS(ChiSqMixture({-1.0, 2.0}), DomainError);
    CHECK_THROWS_AS(ChiSqMixture({0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(ChiSqMixture({}), DomainError);
}

TEST_CASE("symmetric eigenvalues") {
    CHECK(symmetric_eigenvalues(Eigen::MatrixXd::Identity(3, 3)) == std::vector<double>{1.0, 1.0, 1.0});
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
    d.diagonal() << 3.0, 1.0, 2.0;
    const auto ev = symmetric_eigenvalues(d);
    CHECK(ev[0] == Approx(3.0));
    CHECK(ev[1] == Approx(2.0));
    CHECK(ev[2] == Approx(1.0));
    Eigen::MatrixXd a(2, 2);
    a << 2.0, 1.0, 1.0, 2.0;
    const auto e2 = symmetric_eigenvalues(a);
    CHECK(e2[0] == Approx(3.0).epsilon(1e-12));
    CHECK(e2[1] == Approx(1.0).epsilon(1e-12));
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 0.0, 1.0;
    CHECK_THROWS_AS(symmetric_eigenvalues(bad), DomainError);
}

TEST_CASE("eigenvalues sum to the trace") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> z;
    for (int t = 0; t < 50; ++t) {
        const int k = 2 + t % 30;
        Eigen::MatrixXd m(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = z(gen);
        double s = 0.0;
        for (double e : symmetric_eigenvalues(m)) s += e;
        CHECK(s == Approx(m.trace()).epsilon(1e-9).scale(m.norm()));
    }
}

}  // TEST_SUITE
