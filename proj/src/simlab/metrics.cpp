#include <cmath>
#include <memory>

#include "smdmeta/errors.hpp"
#include "smdmeta/simlab.hpp"

namespace smdmeta {
namespace {

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double var = 0.0;  // sample variance
};

template <class F>
Moments moments(std::span<const bool> ok, F value) {
    Moments m;
    KahanSum sum;
    for (std::size_t i = 0; i < ok.size(); ++i) {
        if (ok[i]) {
            sum += value(i);
            ++m.n;
        }
    }
    if (m.n == 0) return m;
    m.mean = sum.value() / static_cast<double>(m.n);
    KahanSum ss;
    for (std::size_t i = 0; i < ok.size(); ++i) {
        if (ok[i]) {
            const double d = value(i) - m.mean;
            ss += d * d;
        }
    }
    m.var = m.n > 1 ? ss.value() / static_cast<double>(m.n - 1) : 0.0;
    return m;
}

void require_nonempty(std::size_t n, const char* who) {
    if (n == 0) throw DomainError(std::string(who) + ": no usable replicates");
}

}  // namespace

Metric bias_metric(std::span<const double> est, std::span<const bool> ok, double truth) {
    require_nonempty(est.size(), "bias_metric");
    const auto m = moments(ok, [&](std::size_t i) { return est[i] - truth; });
    const double se = m.n > 0 ? std::sqrt(m.var / static_cast<double>(m.n)) : 0.0;
    return {m.mean, se, m.n, ok.size() - m.n};
}

Metric mse_metric(std::span<const double> est, std::span<const bool> ok, double truth) {
    require_nonempty(est.size(), "mse_metric");
    const auto m = moments(ok, [&](std::size_t i) {
        const double d = est[i] - truth;
        return d * d;
    });
    const double se = m.n > 0 ? std::sqrt(m.var / static_cast<double>(m.n)) : 0.0;
    return {m.mean, se, m.n, ok.size() - m.n};
}

Metric proportion_metric(std::span<const bool> hits, std::span<const bool> ok) {
    require_nonempty(hits.size(), "proportion_metric");
    std::size_t n = 0;
    std::size_t x = 0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (!ok[i]) continue;
        ++n;
        if (hits[i]) ++x;
    }
    if (n == 0) return {0.0, 0.0, 0, hits.size()};
    const double dn = static_cast<double>(n);
    const double p = static_cast<double>(x) / dn;
    // At p = 0 or 1 the binomial formula degenerates; use half a success.
    const double p_se = (x == 0) ? 0.5 / dn : (x == n) ? 1.0 - 0.5 / dn : p;
    return {p, std::sqrt(p_se * (1.0 - p_se) / dn), n, hits.size() - n};
}

Metric mse_ratio_metric(std::span<const double> num, std::span<const double> den,
                        std::span<const bool> ok, double truth) {
    require_nonempty(num.size(), "mse_ratio_metric");
    auto sq = [truth](double v) { return (v - truth) * (v - truth); };
    const auto a = moments(ok, [&](std::size_t i) { return sq(num[i]); });
    const auto b = moments(ok, [&](std::size_t i) { return sq(den[i]); });
    if (a.n == 0 || !(b.mean > 0.0)) return {0.0, 0.0, a.n, ok.size() - a.n};
    KahanSum cov;
    for (std::size_t i = 0; i < ok.size(); ++i) {
        if (ok[i]) cov += (sq(num[i]) - a.mean) * (sq(den[i]) - b.mean);
    }
    const double n = static_cast<double>(a.n);
    const double c = a.n > 1 ? cov.value() / (n - 1.0) : 0.0;
    const double r = a.mean / b.mean;
    // delta method for a ratio of means
    const double var = (a.var - 2.0 * r * c + r * r * b.var) / (n * b.mean * b.mean);
    return {r, std::sqrt(std::max(var, 0.0)), a.n, ok.size() - a.n};
}

CellReport summarize(const SimCell& cell, std::span<const ReplicateOutcome> outcomes) {
    require_nonempty(outcomes.size(), "summarize");
    const std::size_t reps = outcomes.size();
    CellReport report;
    report.cell = cell;

    std::vector<double> values(reps);
    // std::vector<bool> cannot back a span, so masks are plain bool arrays.
    auto mask = [&](auto pick) {
        std::unique_ptr<bool[]> m(new bool[reps]);
        for (std::size_t r = 0; r < reps; ++r) m[r] = pick(outcomes[r]);
        return m;
    };
    auto span_of = [reps](const std::unique_ptr<bool[]>& m) { return std::span<const bool>(m.get(), reps); };

    for (std::size_t i = 0; i < kNumTau2; ++i) {
        for (std::size_t r = 0; r < reps; ++r) values[r] = outcomes[r].tau2[i];
        const auto ok = mask([i](const ReplicateOutcome& o) { return o.tau2_ok[i]; });
        const auto trunc = mask([i](const ReplicateOutcome& o) { return o.tau2_truncated[i]; });
        report.tau2_bias[i] = bias_metric(values, span_of(ok), cell.tau2);
        report.tau2_truncation[i] = proportion_metric(span_of(trunc), span_of(ok));
    }
    for (std::size_t i = 0; i < kNumTau2Ci; ++i) {
        const auto ok = mask([i](const ReplicateOutcome& o) { return o.tau2_ci_ok[i]; });
        const auto hit = mask([i](const ReplicateOutcome& o) { return o.tau2_cover[i]; });
        report.tau2_coverage[i] = proportion_metric(span_of(hit), span_of(ok));
    }
    std::array<std::vector<double>, kNumEffect> effects;
    for (std::size_t i = 0; i < kNumEffect; ++i) {
        effects[i].resize(reps);
        for (std::size_t r = 0; r < reps; ++r) effects[i][r] = outcomes[r].effect[i];
        const auto ok = mask([i](const ReplicateOutcome& o) { return o.effect_ok[i]; });
        report.effect_bias[i] = bias_metric(effects[i], span_of(ok), cell.delta);
        report.effect_mse[i] = mse_metric(effects[i], span_of(ok), cell.delta);
    }
    for (std::size_t i = 0; i < kNumEffectCi; ++i) {
        const auto ok = mask([i](const ReplicateOutcome& o) { return o.effect_ci_ok[i]; });
        const auto hit = mask([i](const ReplicateOutcome& o) { return o.effect_cover[i]; });
        const auto deg = mask([i](const ReplicateOutcome& o) { return o.effect_degenerate[i]; });
        report.effect_coverage[i] = proportion_metric(span_of(hit), span_of(ok));
        report.effect_degenerate[i] = proportion_metric(span_of(deg), span_of(ok));
    }

    constexpr std::size_t kMp = 2;
    constexpr std::size_t kKdb = 4;
    constexpr std::size_t kSsw = 5;
    const auto ok_kdb = mask([](const ReplicateOutcome& o) { return o.effect_ok[kKdb] && o.effect_ok[kSsw]; });
    const auto ok_mp = mask([](const ReplicateOutcome& o) { return o.effect_ok[kMp] && o.effect_ok[kSsw]; });
    report.mse_ratio_ssw_kdb = mse_ratio_metric(effects[kSsw], effects[kKdb], span_of(ok_kdb), cell.delta);
    report.mse_ratio_ssw_mp = mse_ratio_metric(effects[kSsw], effects[kMp], span_of(ok_mp), cell.delta);
    return report;
}

}  // namespace smdmeta
