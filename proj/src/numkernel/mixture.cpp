#include "smdmeta/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "smdmeta/errors.hpp"

namespace smdmeta {
namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kCertifiedBound = 1e-6;
constexpr double kTruncationBudget = 2.5e-7;
constexpr std::size_t kMaxPanels = 200000;
constexpr double kSeriesTolerance = 1e-9;
constexpr double kSeriesMaxTerms = 1500.0;

// Smallest U such that the Imhof tail beyond U is below eps, using the best
// of the bounds built from the r largest coefficients.
double imhof_upper_limit(std::span<const double> lambda, double eps) {
    double best = std::numeric_limits<double>::infinity();
    double log_prod = 0.0;
    for (std::size_t r = 1; r <= lambda.size(); ++r) {
        log_prod += 0.5 * std::log(lambda[r - 1]);
        const double rr = static_cast<double>(r);
        // 2 / (pi r U^{r/2} prod sqrt(lambda)) <= eps
        const double log_u = (2.0 / rr) * (std::log(2.0 / (std::numbers::pi * rr * eps)) - log_prod);
        best = std::min(best, std::exp(log_u));
    }
    return best;
}

MixtureCdf imhof(double x, std::span<const double> lambda) {
    const double upper = imhof_upper_limit(lambda, kTruncationBudget);
    double lambda_sum = 0.0;
    for (double l : lambda) lambda_sum += l;

    auto integrand = [&](double u) {
        if (u <= 0.0) return 0.5 * (lambda_sum - x);
        double theta = -0.5 * x * u;
        double log_rho = 0.0;
        for (double l : lambda) {
            const double lu = l * u;
            theta += 0.5 * std::atan(lu);
            log_rho += 0.25 * std::log1p(lu * lu);
        }
        return std::sin(theta) / (u * std::exp(log_rho));
    };

    // |theta'(u)| <= freq, so a panel of width 4 pi / freq spans at most two
    // oscillations, which a 31-point Kronrod rule resolves to ~1e-15.
    const double freq = 0.5 * std::max(x, lambda_sum);
    const auto panels = static_cast<std::size_t>(
        std::clamp(std::ceil(upper * freq / (4.0 * std::numbers::pi)), 1.0,
                   static_cast<double>(kMaxPanels)));
    const double width = upper / static_cast<double>(panels);

    KahanSum total;
    double quad_error = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        double err = 0.0;
        const double a = width * static_cast<double>(i);
        total += gauss_kronrod<double, 31>::integrate(integrand, a, a + width, 4, 1e-11, &err);
        quad_error += err;
    }
    const double p = 0.5 - total.value() / std::numbers::pi;
    return {std::clamp(p, 0.0, 1.0), kTruncationBudget + quad_error / std::numbers::pi};
}

// Series in central chi-square CDFs with beta equal to the smallest
// coefficient. All weights a_k are nonnegative and sum to one, so the
// remainder after N terms is at most F_{n+2N}(x/beta) (1 - sum a_k).
// Returns nullopt when the series would need too many terms.
std::optional<MixtureCdf> ruben_series(double x, std::span<const double> lambda) {
    const double beta = lambda.back();
    if (std::log(kSeriesTolerance) / std::log1p(-std::min(beta, 0.999999)) > kSeriesMaxTerms) {
        return std::nullopt;
    }
    const auto max_terms = static_cast<std::size_t>(kSeriesMaxTerms);

    std::vector<double> ratio;  // 1 - beta / lambda_j, zero terms skipped
    double log_a0 = 0.0;
    for (double l : lambda) {
        log_a0 += 0.5 * std::log(beta / l);
        const double r = 1.0 - beta / l;
        if (r > 0.0) ratio.push_back(r);
    }
    const double half_n = 0.5 * static_cast<double>(lambda.size());
    const double z = 0.5 * x / beta;
    const double log_z = std::log(z);

    std::vector<double> a{std::exp(log_a0)};
    std::vector<double> g{0.0};  // g[m] = sum_j ratio_j^m
    std::vector<double> powers(ratio.begin(), ratio.end());
    if (a[0] <= 0.0) return std::nullopt;

    double f = boost::math::gamma_p(half_n, z);  // F_{n+2k}(x / beta)
    double log_density = half_n * log_z - z - std::lgamma(half_n + 1.0);
    KahanSum prob;
    KahanSum weight;
    for (std::size_t k = 0;; ++k) {
        if (k > 0) {
            double gk = 0.0;
            for (std::size_t j = 0; j < ratio.size(); ++j) {
                gk += powers[j];
                powers[j] *= ratio[j];
            }
            g.push_back(gk);
            double ak = 0.0;
            for (std::size_t r = 0; r < k; ++r) ak += g[k - r] * a[r];
            a.push_back(ak / (2.0 * static_cast<double>(k)));
            f = std::max(0.0, f - std::exp(log_density));
            log_density += log_z - std::log(half_n + static_cast<double>(k));
        }
        prob += a[k] * f;
        weight += a[k];
        const double remainder = std::max(0.0, 1.0 - weight.value());
        const double bound = remainder * f + 1e-14 * static_cast<double>(k + 1);
        if (bound <= kSeriesTolerance) return MixtureCdf{std::clamp(prob.value(), 0.0, 1.0), bound};
        if (k + 1 >= max_terms) return std::nullopt;
    }
}

// Two coefficients: condition on the first chi^2_1 and integrate its density
// against the second's CDF, with t = sqrt(x/l1) sin(phi) removing the
// endpoint singularities.
MixtureCdf two_term(double x, double l1, double l2) {
    const double scale = std::sqrt(x / l1);
    auto integrand = [&](double phi) {
        const double t = scale * std::sin(phi);
        const double c = std::cos(phi);
        const double density = 2.0 * std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
        return density * boost::math::erf(std::sqrt(x / (2.0 * l2)) * c) * scale * c;
    };
    double err = 0.0;
    const double p = gauss_kronrod<double, 31>::integrate(integrand, 0.0, std::numbers::pi / 2,
                                                          15, 1e-14, &err);
    return {std::clamp(p, 0.0, 1.0), err};
}

}  // namespace

ChiSqMixture::ChiSqMixture(std::vector<double> coefficients) {
    double largest = 0.0;
    for (double c : coefficients) {
        if (!(c >= 0.0) || std::isinf(c)) {
            throw DomainError("ChiSqMixture: coefficients must be finite and nonnegative");
        }
        largest = std::max(largest, c);
    }
    if (largest <= 0.0) throw DomainError("ChiSqMixture: at least one coefficient must be positive");
    for (double c : coefficients) {
        if (c > 0.0) coefficients_.push_back(c);
    }
    std::sort(coefficients_.begin(), coefficients_.end(), std::greater<>());
}

MixtureCdf mixture_cdf_detailed(double x, const ChiSqMixture& mix) {
    if (std::isnan(x)) throw DomainError("mixture_cdf: x is NaN");
    if (x <= 0.0) return {0.0, 0.0};
    if (std::isinf(x)) return {1.0, 0.0};

    // Scale so the largest coefficient is one.
    const auto raw = mix.coefficients();
    const double top = raw.front();
    std::vector<double> lambda(raw.begin(), raw.end());
    for (double& l : lambda) l /= top;
    const double xs = x / top;

    MixtureCdf result{};
    if (lambda.size() == 1) {
        result = {chisq_cdf(xs, 1.0), 0.0};
    } else if (lambda.size() == 2) {
        result = two_term(xs, lambda[0], lambda[1]);
    } else {
        auto series = ruben_series(xs, lambda);
        result = series ? *series : imhof(xs, lambda);
    }
    if (!(result.error_bound <= kCertifiedBound)) {
        throw NonConvergence("mixture_cdf: quadrature error bound " +
                             std::to_string(result.error_bound) + " exceeds 1e-6");
    }
    return result;
}

double mixture_cdf(double x, const ChiSqMixture& mix) {
    return mixture_cdf_detailed(x, mix).probability;
}

}  // namespace smdmeta
