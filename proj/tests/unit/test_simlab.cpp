#include <doctest.h>

#include <cstring>
#include <memory>

#include "smdmeta/errors.hpp"
#include "smdmeta/simlab.hpp"

using namespace smdmeta;
using doctest::Approx;

namespace {

GridConfig single(double delta, double tau2, int k, int n, double q, int reps, int chunks) {
    GridConfig g;
    g.deltas = {delta};
    g.tau2s = {tau2};
    g.ks = {k};
    g.equal_ns = {n};
    g.unequal_nbars = {};
    g.qs = {q};
    g.reps = reps;
    g.chunks = chunks;
    g.seed = 2024;
    return g;
}

bool same_metric(const Metric& a, const Metric& b) {
    return std::memcmp(&a.value, &b.value, sizeof(double)) == 0 &&
           std::memcmp(&a.mc_se, &b.mc_se, sizeof(double)) == 0 && a.used == b.used && a.failed == b.failed;
}

template <class A>
bool same_array(const A& a, const A& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!same_metric(a[i], b[i])) return false;
    }
    return true;
}

bool same_report(const CellReport& a, const CellReport& b) {
    return same_array(a.tau2_bias, b.tau2_bias) && same_array(a.tau2_truncation, b.tau2_truncation) &&
           same_array(a.tau2_coverage, b.tau2_coverage) && same_array(a.effect_bias, b.effect_bias) &&
           same_array(a.effect_mse, b.effect_mse) && same_array(a.effect_coverage, b.effect_coverage) &&
           same_array(a.effect_degenerate, b.effect_degenerate) &&
           same_metric(a.mse_ratio_ssw_kdb, b.mse_ratio_ssw_kdb) &&
           same_metric(a.mse_ratio_ssw_mp, b.mse_ratio_ssw_mp);
}

}  // namespace

TEST_SUITE("simlab") {

TEST_CASE("grid expansion") {
    CHECK(expand_grid(full_grid()).size() == 2160);
    CHECK(expand_grid(single(0.5, 0.0, 5, 20, 0.5, 2000, 10)).size() == 1);
    CHECK(parse_levels("0(0.5)2.5") == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0, 2.5});
    CHECK(parse_levels("0,0.2, 1") == std::vector<double>{0.0, 0.2, 1.0});
    CHECK_THROWS_AS(parse_levels("0(0)1"), InputError);
    CHECK_THROWS_AS(parse_levels("abc"), InputError);

    auto custom = single(1.5, 0.0, 5, 20, 0.5, 2000, 10);
    CHECK_THROWS_AS(expand_grid(custom), InputError);
    custom.allow_custom = true;
    CHECK(expand_grid(custom).size() == 1);

    CHECK_THROWS_AS(expand_grid(single(0.5, 0.0, 5, 20, 0.5, 2000, 7)), InputError);
}

TEST_CASE("grid ordering is lexicographic in field order") {
    GridConfig g = single(0.0, 0.0, 5, 20, 0.5, 10, 1);
    g.deltas = {0.0, 0.2};
    g.tau2s = {0.0, 0.5};
    const auto cells = expand_grid(g);
    REQUIRE(cells.size() == 4);
    CHECK(cells[0].delta == 0.0);
    CHECK(cells[1].delta == 0.0);
    CHECK(cells[1].tau2 == 0.5);
    CHECK(cells[2].delta == 0.2);
}

TEST_CASE("study sizes") {
    SimCell c;
    c.k = 5;
    c.n = 20;
    c.q = 0.75;
    CHECK(study_sizes(c).front() == ArmSizes{5, 15});
    c.q = 0.5;
    const auto eq = study_sizes(c);
    CHECK(eq.size() == 5);
    for (const auto& s : eq) CHECK(s == ArmSizes{10, 10});

    c.pattern = SizePattern::unequal;
    c.n = 30;
    c.k = 10;
    const auto un = study_sizes(c);
    const int expected[] = {12, 16, 18, 20, 84, 12, 16, 18, 20, 84};
    REQUIRE(un.size() == 10);
    for (std::size_t i = 0; i < un.size(); ++i) CHECK(un[i].n_t + un[i].n_c == expected[i]);
    c.k = 7;
    CHECK_THROWS_AS(study_sizes(c), InputError);
}

TEST_CASE("metric summaries") {
    const double est[] = {1.0, 1.0, 1.0};
    const bool ok[] = {true, true, true};
    const auto b = bias_metric(est, ok, 1.0);
    CHECK(b.value == 0.0);
    CHECK(mse_metric(est, ok, 1.0).value == 0.0);

    const bool hit[] = {true, true, true};
    const auto cov = proportion_metric(hit, ok);
    CHECK(cov.value == 1.0);
    CHECK(cov.mc_se > 0.0);

    const std::size_t n = 10000;
    auto many = std::make_unique<bool[]>(n);
    auto all_ok = std::make_unique<bool[]>(n);
    for (std::size_t i = 0; i < n; ++i) {
        many[i] = i % 20 != 0;
        all_ok[i] = true;
    }
    const auto p = proportion_metric(std::span<const bool>(many.get(), n), std::span<const bool>(all_ok.get(), n));
    CHECK(p.value == Approx(0.95));
    CHECK(p.mc_se == Approx(0.00218).epsilon(0.001));

    const bool some_ok[] = {true, false, true};
    const double vals[] = {1.0, 100.0, 3.0};
    const auto masked = bias_metric(vals, some_ok, 0.0);
    CHECK(masked.value == Approx(2.0));
    CHECK(masked.used == 2);
    CHECK(masked.failed == 1);

    CHECK_THROWS(bias_metric(std::span<const double>{}, std::span<const bool>{}, 0.0));
}

TEST_CASE("run_cell is invariant to chunking and thread count") {
    const auto cell1 = expand_grid(single(0.5, 1.0, 5, 20, 0.5, 40, 1)).front();
    const auto cell10 = expand_grid(single(0.5, 1.0, 5, 20, 0.5, 40, 10)).front();
    const auto a = run_cell(cell1, 1);
    const auto b = run_cell(cell10, 1);
    const auto c = run_cell(cell10, 3);
    CHECK(same_report(a, b));
    CHECK(same_report(b, c));
}

TEST_CASE("coverage metrics are proportions with positive MC SE") {
    const auto cell = expand_grid(single(0.0, 0.0, 5, 20, 0.5, 400, 10)).front();
    const auto r = run_cell(cell, 1);
    for (const auto& m : r.tau2_coverage) {
        CHECK(m.value >= 0.0);
        CHECK(m.value <= 1.0);
        CHECK(m.mc_se > 0.0);
    }
    for (const auto& m : r.effect_coverage) {
        CHECK(m.value >= 0.0);
        CHECK(m.value <= 1.0);
        CHECK(m.mc_se > 0.0);
    }
    // Roughly half the moment estimates are truncated when tau2 = 0.
    for (auto m : {Tau2Method::DL, Tau2Method::MP, Tau2Method::J, Tau2Method::KDB}) {
        CHECK(r.tau2_truncation[static_cast<std::size_t>(m)].value > 0.2);
    }
}

TEST_CASE("replicate streams depend on coordinates, not grid position") {
    SimCell a;
    a.delta = 0.5;
    SimCell b = a;
    b.reps = 10;
    b.chunks = 5;
    CHECK(replicate_stream_id(a, 3) == replicate_stream_id(b, 3));
    SimCell c = a;
    c.tau2 = 0.5;
    CHECK(replicate_stream_id(a, 3) != replicate_stream_id(c, 3));
    CHECK(replicate_stream_id(a, 3) != replicate_stream_id(a, 4));
}

}  // TEST_SUITE
