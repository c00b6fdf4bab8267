#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

#include "smdmeta/errors.hpp"
#include "smdmeta/tau2.hpp"

namespace smdmeta {
namespace {

void require_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0,1)");
}

// Inverts Q(tau2) at two quantiles of its reference distribution.
Tau2Interval q_profile(const MetaInput& input, double upper_quantile, double lower_quantile,
                       Tau2IntervalMethod method, double level) {
    Tau2Interval ci;
    ci.method = method;
    ci.level = level;

    const auto lo = solve_q_equals(input, upper_quantile);
    if (lo.status == RootStatus::unbounded) {
        ci.lo = ci.hi = kTau2Cap;
        ci.hi_infinite = true;
        return ci;
    }
    ci.lo = lo.tau2;
    ci.lo_truncated = lo.status == RootStatus::truncated;

    const auto hi = solve_q_equals(input, lower_quantile);
    ci.hi = hi.tau2;
    ci.hi_truncated = hi.status == RootStatus::truncated;
    ci.hi_infinite = hi.status == RootStatus::unbounded;
    return ci;
}

constexpr double kCdfNoise = 2e-6;

// Smallest tau2 with cdf(tau2) = target for a cdf decreasing in tau2, given
// cdf(0) > target. Returns +inf when the cdf stays above target up to the cap.
double solve_decreasing_cdf(const GeneralizedQ& gq, double target, double f0) {
    auto f = [&](double tau2) { return gq.cdf(gq.observed(), tau2) - target; };

    double lo = 0.0;
    double flo = f0 - target;
    double hi = 1.0;
    double fhi = f(hi);
    while (fhi > 0.0) {
        if (fhi > flo + kCdfNoise) {
            throw NonConvergence("generalized Q cdf is not monotone in tau2", lo, hi);
        }
        if (hi >= kTau2Cap) return std::numeric_limits<double>::infinity();
        lo = hi;
        flo = fhi;
        hi = std::min(hi * 4.0, kTau2Cap);
        fhi = f(hi);
    }
    if (fhi > flo + kCdfNoise) {
        throw NonConvergence("generalized Q cdf is not monotone in tau2", lo, hi);
    }
    if (fhi == 0.0) return hi;

    std::uintmax_t max_iter = 100;
    const auto [a, b] = boost::math::tools::toms748_solve(
        f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(24), max_iter);
    if (max_iter >= 100) throw NonConvergence("generalized Q interval search did not converge", a, b);
    return 0.5 * (a + b);
}

Tau2Interval generalized_q_interval(const GeneralizedQ& gq, Tau2IntervalMethod method,
                                    double level) {
    const double alpha = 1.0 - level;
    Tau2Interval ci;
    ci.method = method;
    ci.level = level;

    const double f0 = gq.cdf(gq.observed(), 0.0);
    if (f0 <= 1.0 - alpha / 2) {
        ci.lo_truncated = true;
    } else {
        ci.lo = solve_decreasing_cdf(gq, 1.0 - alpha / 2, f0);
    }
    if (f0 <= alpha / 2) {
        ci.hi_truncated = true;
    } else {
        ci.hi = solve_decreasing_cdf(gq, alpha / 2, f0);
    }
    if (std::isinf(ci.hi)) {
        ci.hi = kTau2Cap;
        ci.hi_infinite = true;
    }
    if (std::isinf(ci.lo)) {
        ci.lo = kTau2Cap;
        ci.hi_infinite = true;
    }
    return ci;
}

}  // namespace

GeneralizedQ::GeneralizedQ(const MetaInput& input, std::vector<double> weights)
    : variances_(input.variances()), weights_(std::move(weights)) {
    if (weights_.size() != input.size()) throw DomainError("GeneralizedQ: weight count mismatch");
    for (double w : weights_) {
        if (!(w > 0.0)) throw DomainError("GeneralizedQ: weights must be positive");
    }
    observed_ = weighted_q(input.effects(), weights_);
}

GeneralizedQ GeneralizedQ::inverse_variance(const MetaInput& input) {
    std::vector<double> w;
    for (const auto& s : input.studies()) w.push_back(1.0 / s.v2());
    return GeneralizedQ(input, std::move(w));
}

GeneralizedQ GeneralizedQ::inverse_se(const MetaInput& input) {
    std::vector<double> w;
    for (const auto& s : input.studies()) w.push_back(1.0 / std::sqrt(s.v2()));
    return GeneralizedQ(input, std::move(w));
}

std::vector<double> GeneralizedQ::coefficients(double tau2) const {
    // Q = y' A y with A = diag(w) - w w' / sum(w) and y ~ N(mu 1, D),
    // D = diag(v^2 + tau2): the coefficients are the eigenvalues of D^1/2 A D^1/2.
    const auto k = static_cast<Eigen::Index>(weights_.size());
    double total = 0.0;
    for (double w : weights_) total += w;
    Eigen::VectorXd root_d(k);
    Eigen::VectorXd w(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        root_d(i) = std::sqrt(variances_[i] + tau2);
        w(i) = weights_[i];
    }
    const Eigen::VectorXd scaled = w.cwiseProduct(root_d);
    Eigen::MatrixXd b = -scaled * scaled.transpose() / total;
    for (Eigen::Index i = 0; i < k; ++i) b(i, i) += w(i) * root_d(i) * root_d(i);
    b = 0.5 * (b + b.transpose()).eval();

    auto values = symmetric_eigenvalues(b);
    const double top = values.front();
    std::erase_if(values, [top](double v) { return v <= 1e-10 * top; });
    return values;
}

double GeneralizedQ::cdf(double q, double tau2) const {
    if (q <= 0.0) return 0.0;
    return mixture_cdf(q, ChiSqMixture(coefficients(tau2)));
}

Tau2Interval ci_qp(const MetaInput& input, double level) {
    require_level(level);
    const double alpha = 1.0 - level;
    const double df = static_cast<double>(input.size()) - 1.0;
    return q_profile(input, chisq_quantile(1.0 - alpha / 2, df), chisq_quantile(alpha / 2, df),
                     Tau2IntervalMethod::QP, level);
}

Tau2Interval ci_kdb(const MetaInput& input, double level) {
    require_level(level);
    const double alpha = 1.0 - level;
    const double df = corrected_expected_q(input);
    return q_profile(input, chisq_quantile(1.0 - alpha / 2, df), chisq_quantile(alpha / 2, df),
                     Tau2IntervalMethod::KDB, level);
}

Tau2Interval ci_bj(const MetaInput& input, double level) {
    require_level(level);
    return generalized_q_interval(GeneralizedQ::inverse_variance(input), Tau2IntervalMethod::BJ,
                                  level);
}

Tau2Interval ci_jackson(const MetaInput& input, double level) {
    require_level(level);
    return generalized_q_interval(GeneralizedQ::inverse_se(input), Tau2IntervalMethod::J, level);
}

Tau2Interval ci_pl(const MetaInput& input, double level) {
    require_level(level);
    const double crit = chisq_quantile(level, 1.0);
    const auto reml = tau2_reml(input);
    const double peak = reml.value;
    const double ll_max = restricted_loglik(input, peak);
    // deviance(t) - crit, increasing away from the peak on either side
    auto excess = [&](double t) { return 2.0 * (ll_max - restricted_loglik(input, t)) - crit; };

    auto bisect = [&](double inside, double outside) {
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (inside + outside);
            if (std::abs(outside - inside) <= 1e-10 * (1.0 + mid)) return mid;
            if (excess(mid) <= 0.0) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        throw NonConvergence("ci_pl: bisection did not converge", inside, outside);
    };

    Tau2Interval ci;
    ci.method = Tau2IntervalMethod::PL;
    ci.level = level;

    if (peak <= 0.0 || excess(0.0) <= 0.0) {
        ci.lo_truncated = true;
        if (peak > 0.0 && std::abs(ll_max - restricted_loglik(input, 0.0)) < 1e-12) {
            ci.flat_likelihood = true;
        }
    } else {
        ci.lo = bisect(peak, 0.0);
    }

    double outside = std::max(1.0, 2.0 * peak);
    while (excess(outside) <= 0.0) {
        if (outside >= kTau2Cap) {
            ci.hi = kTau2Cap;
            ci.hi_infinite = true;
            if (std::abs(ll_max - restricted_loglik(input, outside)) < 1e-12) {
                ci.flat_likelihood = true;
            }
            return ci;
        }
        outside = std::min(outside * 2.0, kTau2Cap);
    }
    ci.hi = bisect(peak, outside);
    return ci;
}

Tau2Interval tau2_interval(const MetaInput& input, Tau2IntervalMethod method, double level) {
    switch (method) {
        case Tau2IntervalMethod::QP: return ci_qp(input, level);
        case Tau2IntervalMethod::BJ: return ci_bj(input, level);
        case Tau2IntervalMethod::J: return ci_jackson(input, level);
        case Tau2IntervalMethod::PL: return ci_pl(input, level);
        case Tau2IntervalMethod::KDB: return ci_kdb(input, level);
    }
    throw DomainError("unknown tau2 interval method");
}

}  // namespace smdmeta
