#include <doctest.h>

#include <cmath>
#include <random>

#include "smdmeta/errors.hpp"
#include "smdmeta/tau2.hpp"
#include "support/inputs.hpp"

using namespace smdmeta;
using smdmeta::testing::make_input;
using doctest::Approx;

TEST_SUITE("tau2") {

TEST_CASE("DL closed form") {
    const auto t = tau2_dl(make_input({-1.0, 0.0, 1.0}, {1.0, 1.0, 1.0}));
    CHECK(t.value == 0.0);
    CHECK(t.status == Tau2Status::truncated_at_zero);
    CHECK(tau2_dl(make_input({-2.0, 0.0, 2.0}, {1.0, 1.0, 1.0})).value == Approx(3.0).epsilon(1e-14));
}

TEST_CASE("MP") {
    CHECK(tau2_mp(make_input({-2.0, 0.0, 2.0}, {1.0, 1.0, 1.0})).value == Approx(3.0).epsilon(1e-7));
    const auto t = tau2_mp(make_input({0.0, 0.1, 0.2}, {1.0, 1.0, 1.0}));
    CHECK(t.value == 0.0);
    CHECK(t.status == Tau2Status::truncated_at_zero);
}

TEST_CASE("REML") {
    const auto input = make_input({-2.0, 0.0, 2.0}, {1.0, 1.0, 1.0});
    const auto t = tau2_reml(input);
    CHECK(t.value == Approx(3.0).epsilon(1e-7));
    CHECK(t.status == Tau2Status::interior);
    CHECK(std::abs(restricted_score(input, t.value)) < 1e-6);

    const auto uneven = make_input({0.1, 0.9, -0.4, 1.7, 0.3}, {0.2, 0.15, 0.4, 0.22, 0.3});
    const auto r = tau2_reml(uneven);
    REQUIRE(r.status == Tau2Status::interior);
    CHECK(std::abs(restricted_score(uneven, r.value)) < 1e-6);
    // The returned value maximizes the restricted likelihood on a grid.
    const double at_max = restricted_loglik(uneven, r.value);
    for (int i = 0; i <= 1000; ++i) {
        const double tau2 = 5.0 * i / 1000.0;
        REQUIRE(restricted_loglik(uneven, tau2) <= at_max + 1e-12);
    }
    CHECK(tau2_reml(make_input({0.5, 0.5}, {0.1, 0.3})).value == 0.0);
}

TEST_CASE("Jackson hand case and equal-variance collapse") {
    const auto t = tau2_jackson(make_input({0.0, 2.0}, {1.0, 4.0}));
    CHECK(t.value == 0.0);
    CHECK(t.status == Tau2Status::truncated_at_zero);

    const auto eq = make_input({0.1, 0.9, -0.4, 1.7}, {0.3, 0.3, 0.3, 0.3});
    CHECK(tau2_jackson(eq).value == Approx(tau2_dl(eq).value).epsilon(1e-12));
    CHECK(tau2_mp(eq).value == Approx(tau2_dl(eq).value).epsilon(1e-10));
}

TEST_CASE("homogeneous inputs give zero for all five") {
    const auto input = make_input({0.4, 0.4, 0.4, 0.4}, {0.1, 0.2, 0.3, 0.25});
    for (auto m : kTau2Methods) {
        const auto t = estimate_tau2(input, m);
        CHECK(t.value == 0.0);
        CHECK(t.method == m);
    }
}

TEST_CASE("corrected expected Q") {
    std::vector<ArmSizes> huge(5, ArmSizes{500000, 500000});
    CHECK(std::abs(corrected_expected_q(huge, 0.5) - 4.0) < 1e-3);
    std::vector<ArmSizes> sizes{{10, 10}, {12, 16}, {30, 5}, {8, 9}, {20, 21}};
    std::vector<ArmSizes> reversed(sizes.rbegin(), sizes.rend());
    CHECK(corrected_expected_q(sizes, 0.7) == Approx(corrected_expected_q(reversed, 0.7)).epsilon(1e-12));
    // Pre-registered check value from the independent prototype (MC 3.7770 +/- 0.0042).
    std::vector<ArmSizes> five(5, ArmSizes{10, 10});
    CHECK(corrected_expected_q(five, 0.5) == Approx(3.7823).epsilon(2e-4));
}

TEST_CASE("KDB tends to MP for large studies") {
    std::mt19937_64 gen(4);
    RandomStream s(1, 2);
    std::vector<Study> studies;
    for (int i = 0; i < 8; ++i) studies.push_back(sample_g(s, 400000, 400000, 0.5 + 0.05 * i));
    const MetaInput input(studies);
    CHECK(std::abs(tau2_kdb(input).value - tau2_mp(input).value) < 1e-6);
    const auto qp = ci_qp(input);
    const auto kdb = ci_kdb(input);
    CHECK(std::abs(qp.lo - kdb.lo) < 1e-6);
    CHECK(std::abs(qp.hi - kdb.hi) < 1e-6);
}

TEST_CASE("QP interval, df = 1") {
    const auto ci = ci_qp(make_input({0.0, 2.0}, {1.0, 1.0}));
    CHECK(ci.lo == 0.0);
    CHECK(ci.lo_truncated);
    CHECK(ci.hi == Approx(2035.516539439341).epsilon(1e-7));
    CHECK_FALSE(ci.hi_infinite);

    const auto flat = ci_qp(make_input({0.3, 0.3, 0.3}, {0.1, 0.2, 0.3}));
    CHECK(flat.lo == 0.0);
    CHECK(flat.hi == 0.0);
    CHECK(flat.hi_truncated);
}

TEST_CASE("BJ rank-one collapse matches closed-form inversion") {
    const auto input = make_input({0.0, 2.0}, {1.0, 1.0});
    const auto ci = ci_bj(input);
    CHECK(ci.lo == 0.0);
    CHECK(ci.hi == Approx(2.0 / chisq_quantile(0.025, 1.0) - 1.0).epsilon(1e-6));
    const auto jk = ci_jackson(input);
    CHECK(jk.hi == Approx(ci.hi).epsilon(1e-6));
}

TEST_CASE("BJ coefficients at tau2 = 0 sum to K - 1 for equal variances") {
    const auto input = make_input({0.1, 0.9, -0.4, 1.7, 0.3}, {0.3, 0.3, 0.3, 0.3, 0.3});
    const auto bj = GeneralizedQ::inverse_variance(input);
    double s = 0.0;
    for (double c : bj.coefficients(0.0)) s += c;
    CHECK(s == Approx(4.0).epsilon(1e-12));
}

TEST_CASE("Jackson interval equals BJ for equal variances") {
    const auto input = make_input({0.1, 0.9, -0.4, 1.7, 0.3, 1.1}, {0.3, 0.3, 0.3, 0.3, 0.3, 0.3});
    const auto bj = ci_bj(input);
    const auto jk = ci_jackson(input);
    CHECK(jk.lo == Approx(bj.lo).epsilon(1e-6));
    CHECK(jk.hi == Approx(bj.hi).epsilon(1e-6));
}

TEST_CASE("homogeneous inputs: lower ends at zero") {
    const auto input = make_input({0.4, 0.4, 0.4, 0.4}, {0.1, 0.2, 0.3, 0.25});
    for (auto m : kTau2IntervalMethods) {
        const auto ci = tau2_interval(input, m);
        CHECK(ci.lo == 0.0);
        CHECK(ci.lo_truncated);
        CHECK(ci.method == m);
    }
}

TEST_CASE("point estimates lie in their own Q-profile intervals") {
    std::mt19937_64 gen(8);
    for (int t = 0; t < 200; ++t) {
        const auto input = testing::random_input(gen);
        const auto mp = tau2_mp(input);
        const auto qp = ci_qp(input);
        CHECK(qp.contains(mp.value));
        const auto kdb = tau2_kdb(input);
        const auto kci = ci_kdb(input);
        CHECK(kci.contains(kdb.value));
    }
}

TEST_CASE("PL interval contains the REML estimate") {
    const auto input = make_input({0.1, 0.9, -0.4, 1.7, 0.3}, {0.2, 0.15, 0.4, 0.22, 0.3});
    const auto ci = ci_pl(input);
    CHECK(ci.contains(tau2_reml(input).value));
    CHECK(ci.lo <= ci.hi);
}

TEST_CASE("BJ endpoints agree with a brute-force CDF of Q") {
    const auto input = make_input({0.1, 0.9, -0.4, 1.7, 0.3, 1.0}, {0.2, 0.15, 0.4, 0.22, 0.3, 0.5});
    const auto ci = ci_bj(input);
    const auto gq = GeneralizedQ::inverse_variance(input);
    std::mt19937_64 gen(21);
    std::normal_distribution<double> z;
    const auto v = input.variances();
    const auto w = gq.weights();
    for (double tau2 : {ci.lo, ci.hi}) {
        if (tau2 <= 0.0) continue;
        const int draws = 200000;
        int hits = 0;
        std::vector<double> y(v.size());
        for (int d = 0; d < draws; ++d) {
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sqrt(v[i] + tau2) * z(gen);
            hits += weighted_q(y, w) <= gq.observed();
        }
        CHECK(std::abs(gq.cdf(gq.observed(), tau2) - static_cast<double>(hits) / draws) < 0.005);
    }
}

}  // TEST_SUITE
