#include "smdmeta/numkernel.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "smdmeta/errors.hpp"

namespace smdmeta {
namespace {

void require_probability(double p, const char* who) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError(std::string(who) + ": probability must lie in (0,1)");
    }
}

void require_df(double df, const char* who) {
    if (!(df > 0.0) || std::isnan(df)) {
        throw DomainError(std::string(who) + ": degrees of freedom must be positive");
    }
}

// Solves cdf(x) = p for an increasing cdf. Grows [lo, hi] until it brackets
// the root, bisects until the bracket is narrow, then polishes with Newton
// steps that are rejected whenever they leave the bracket.
double invert_monotone(const std::function<double(double)>& cdf,
                       const std::function<double(double)>& pdf, double p, double lo,
                       double hi, double lower_limit) {
    constexpr int kMaxIter = 200;
    constexpr double kTol = 1e-13;

    int iter = 0;
    while (cdf(hi) < p) {
        lo = hi;
        hi = hi * 2.0 + 1.0;
        if (++iter > kMaxIter) throw NonConvergence("quantile: no upper bracket", lo, hi);
    }
    while (cdf(lo) > p) {
        hi = lo;
        lo = lo <= lower_limit ? lower_limit : (lo - lower_limit) * 0.5 + lower_limit;
        if (lo == hi || ++iter > kMaxIter) {
            throw NonConvergence("quantile: no lower bracket", lo, hi);
        }
    }

    // Bisection to a relative bracket of 1e-3.
    for (int bisect = 0; hi - lo > 1e-3 * std::abs(hi) && bisect < 100; ++bisect, ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    double x = 0.5 * (lo + hi);
    while (iter++ < kMaxIter) {
        const double f = cdf(x) - p;
        if (std::abs(f) <= kTol) return x;
        if (f < 0) {
            lo = x;
        } else {
            hi = x;
        }
        const double d = pdf(x);
        double next = (d > 0.0) ? x - f / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x || hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::abs(x)) {
            return next;
        }
        x = next;
    }
    throw NonConvergence("quantile: iteration cap reached", lo, hi);
}

}  // namespace

double ln_gamma(double x) {
    if (!(x > 0.0)) throw DomainError("ln_gamma: argument must be positive");
    return boost::math::lgamma(x);
}

double normal_cdf(double x) {
    return 0.5 * boost::math::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
    require_probability(p, "normal_quantile");
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

double chisq_cdf(double x, double df) {
    require_df(df, "chisq_cdf");
    if (!(x >= 0.0)) throw DomainError("chisq_cdf: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

double chisq_pdf(double x, double df) {
    require_df(df, "chisq_pdf");
    if (x <= 0.0) return 0.0;
    return 0.5 * boost::math::gamma_p_derivative(0.5 * df, 0.5 * x);
}

double chisq_quantile(double p, double df) {
    require_probability(p, "chisq_quantile");
    require_df(df, "chisq_quantile");
    return invert_monotone([df](double x) { return chisq_cdf(x, df); },
                           [df](double x) { return chisq_pdf(x, df); }, p, 0.0,
                           std::max(df, 1.0), 0.0);
}

double t_cdf(double x, double df) {
    require_df(df, "t_cdf");
    return boost::math::cdf(boost::math::students_t_distribution<double>(df), x);
}

double t_pdf(double x, double df) {
    require_df(df, "t_pdf");
    return boost::math::pdf(boost::math::students_t_distribution<double>(df), x);
}

double t_quantile(double p, double df) {
    require_probability(p, "t_quantile");
    require_df(df, "t_quantile");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -t_quantile(1.0 - p, df);
    return invert_monotone([df](double x) { return t_cdf(x, df); },
                           [df](double x) { return t_pdf(x, df); }, p, 0.0, 2.0, 0.0);
}

}  // namespace smdmeta
