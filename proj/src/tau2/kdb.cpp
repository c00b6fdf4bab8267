// Corrected first moment of Cochran's Q for the standardized mean difference.
//
// Q = sum w_i (g_i - gbar_w)^2 with w_i = 1/v^2(g_i), where v^2(g) = a_i + b_i g^2
// is the unbiased variance estimate. Writing v^2(g_i) = sigma_i^2 (1 + d_i) with
// d_i = c_i z_i + b_i (z_i^2 - 1), c_i = 2 b_i delta / sigma_i and z_i the
// standardized g_i, and expanding w_i and the weighted mean to second order in
// d_i, the terms that survive to O(1/n) in E[Q] are
//
//   E[Q] = K - 1 - sum t_i + 3 sum c_i^2
//          - sum p_i^2 t_i + 2 sum p_i t_i
//          - 7 sum p_i c_i^2 + 5 sum p_i^2 c_i^2 - 2 P^2 + 2 P R - R^2
//
// with t_i = c_i gamma_i + 2 b_i, gamma_i the skewness of g_i, p_i the
// normalized true inverse-variance weights, P = sum p_i^{3/2} c_i and
// R = sum p_i^{1/2} c_i. Variance and skewness of g_i come from the exact
// non-central t moments.

#include <cmath>

#include "smdmeta/errors.hpp"
#include "smdmeta/tau2.hpp"

namespace smdmeta {

double corrected_expected_q(std::span<const ArmSizes> sizes, double delta) {
    const std::size_t k = sizes.size();
    if (k < 2) throw InvariantError("corrected_expected_q: needs K >= 2");

    std::vector<double> c(k), b(k), gamma(k), inv_var(k);
    double inv_var_sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const int m = sizes[i].n_t + sizes[i].n_c - 2;
        if (sizes[i].n_t < 2 || sizes[i].n_c < 2 || m < 4) {
            throw DomainError("corrected_expected_q: needs n_t, n_c >= 2 and n_t + n_c >= 6");
        }
        const double j = j_factor(m);
        const auto mom = g_moments(sizes[i].n_t, sizes[i].n_c, delta);
        b[i] = 1.0 - (m - 2.0) / (m * j * j);
        c[i] = 2.0 * b[i] * delta / std::sqrt(mom.variance);
        gamma[i] = mom.skewness;
        inv_var[i] = 1.0 / mom.variance;
        inv_var_sum += inv_var[i];
    }

    KahanSum correction;
    double big_p = 0.0;
    double big_r = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double p = inv_var[i] / inv_var_sum;
        const double t = c[i] * gamma[i] + 2.0 * b[i];
        const double c2 = c[i] * c[i];
        correction += -t + 3.0 * c2 - p * p * t + 2.0 * p * t - 7.0 * p * c2 + 5.0 * p * p * c2;
        big_p += std::pow(p, 1.5) * c[i];
        big_r += std::sqrt(p) * c[i];
    }
    correction += -2.0 * big_p * big_p + 2.0 * big_p * big_r - big_r * big_r;
    return static_cast<double>(k) - 1.0 + correction.value();
}

double corrected_expected_q(const MetaInput& input) {
    std::vector<ArmSizes> sizes;
    sizes.reserve(input.size());
    KahanSum weighted;
    KahanSum total;
    for (const auto& s : input.studies()) {
        sizes.push_back({s.n_t(), s.n_c()});
        weighted += s.effective_n() * s.g();
        total += s.effective_n();
    }
    return corrected_expected_q(sizes, weighted.value() / total.value());
}

}  // namespace smdmeta
