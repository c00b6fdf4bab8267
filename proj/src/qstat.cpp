#include "smdmeta/qstat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smdmeta/errors.hpp"

namespace smdmeta {

MetaInput::MetaInput(std::vector<Study> studies) : studies_(std::move(studies)) {
    if (studies_.size() < 2) throw InvariantError("meta-analysis needs at least 2 studies");
}

std::vector<double> MetaInput::effects() const {
    std::vector<double> out;
    out.reserve(studies_.size());
    for (const auto& s : studies_) out.push_back(s.g());
    return out;
}

std::vector<double> MetaInput::variances() const {
    std::vector<double> out;
    out.reserve(studies_.size());
    for (const auto& s : studies_) out.push_back(s.v2());
    return out;
}

WeightedFit weighted_mean(std::span<const double> values, std::vector<double> weights) {
    // Centered on the first value, so identical inputs give their value exactly.
    const double origin = values.empty() ? 0.0 : values[0];
    KahanSum sw;
    KahanSum swx;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sw += weights[i];
        swx += weights[i] * (values[i] - origin);
    }
    WeightedFit fit;
    fit.sum_w = sw.value();
    fit.mean = origin + swx.value() / fit.sum_w;
    fit.weights = std::move(weights);
    return fit;
}

double weighted_q(std::span<const double> values, std::span<const double> weights) {
    const double origin = values.empty() ? 0.0 : values[0];
    KahanSum sw;
    KahanSum swx;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sw += weights[i];
        swx += weights[i] * (values[i] - origin);
    }
    const double offset = swx.value() / sw.value();
    KahanSum q;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = (values[i] - origin) - offset;
        q += weights[i] * d * d;
    }
    return q.value();
}

WeightedFit iv_weighted_mean(const MetaInput& input, double tau2) {
    if (!(tau2 >= 0.0)) throw DomainError("iv_weighted_mean: tau2 must be >= 0");
    std::vector<double> w;
    w.reserve(input.size());
    std::vector<double> g;
    g.reserve(input.size());
    for (const auto& s : input.studies()) {
        w.push_back(1.0 / (s.v2() + tau2));
        g.push_back(s.g());
    }
    return weighted_mean(g, std::move(w));
}

double q_statistic(const MetaInput& input, double tau2) {
    if (!(tau2 >= 0.0)) throw DomainError("q_statistic: tau2 must be >= 0");
    const auto k = input.size();
    // Small fixed-size scratch; K is at most a few hundred in practice.
    std::vector<double> g(k);
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) {
        g[i] = input[i].g();
        w[i] = 1.0 / (input[i].v2() + tau2);
    }
    return weighted_q(g, w);
}

QRoot solve_q_equals(const MetaInput& input, double target) {
    if (!(target > 0.0)) throw DomainError("solve_q_equals: target must be positive");
    const double q0 = q_statistic(input, 0.0);
    if (q0 <= target) return {0.0, RootStatus::truncated, 0};

    double max_v2 = 0.0;
    for (const auto& s : input.studies()) max_v2 = std::max(max_v2, s.v2());

    double lo = 0.0;
    double hi = std::max(1.0, q0 * max_v2);
    while (q_statistic(input, hi) > target) {
        lo = hi;
        if (hi >= kTau2Cap) return {kTau2Cap, RootStatus::unbounded, 0};
        hi = std::min(2.0 * hi, kTau2Cap);
    }

    // Bisect to floating-point resolution on the scale of v^2 + tau^2; the
    // 1e-8 relative residual is then checked as a post-condition.
    const double tol = 1e-8 * target;
    const double resolution = 4.0 * std::numeric_limits<double>::epsilon();
    for (int iter = 1; iter <= 400; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double q = q_statistic(input, mid);
        if (q == target || hi - lo <= resolution * std::max(hi, max_v2)) {
            if (std::abs(q - target) <= tol) return {mid, RootStatus::interior, iter};
            break;
        }
        if (q > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw NonConvergence("solve_q_equals: bisection did not converge", lo, hi);
}

}  // namespace smdmeta
