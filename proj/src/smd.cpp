#include "smdmeta/smd.hpp"

#include <cmath>
#include <string>

#include "smdmeta/errors.hpp"

namespace smdmeta {

Study::Study(int n_t, int n_c, double g, double v2) : n_t_(n_t), n_c_(n_c), g_(g), v2_(v2) {
    if (n_t < 2 || n_c < 2) {
        throw InvariantError("study arms need at least 2 subjects (got n_t=" +
                             std::to_string(n_t) + ", n_c=" + std::to_string(n_c) + ")");
    }
    if (!std::isfinite(g)) throw InvariantError("study effect g is not finite");
    if (!(v2 > 0.0) || !std::isfinite(v2)) throw InvariantError("study variance must be positive");
}

double j_factor(int m) {
    if (m < 2) throw DomainError("j_factor: m must be >= 2");
    const double half = 0.5 * m;
    return std::exp(ln_gamma(half) - ln_gamma(half - 0.5) - 0.5 * std::log(half));
}

double g_variance(double g, int n_t, int n_c) {
    const int m = n_t + n_c - 2;
    if (n_t < 1 || n_c < 1 || m < 3) throw DomainError("g_variance: needs n_t + n_c - 2 >= 3");
    const double j = j_factor(m);
    const double n = n_t + n_c;
    return n / (static_cast<double>(n_t) * n_c) + (1.0 - (m - 2.0) / (m * j * j)) * g * g;
}

Study hedges_g(const ArmSummary& t, const ArmSummary& c) {
    if (t.n < 2 || c.n < 2) throw InvariantError("hedges_g: each arm needs n >= 2");
    if (t.sd < 0.0 || c.sd < 0.0) throw InvariantError("hedges_g: negative standard deviation");
    const int m = t.n + c.n - 2;
    const double pooled = ((t.n - 1) * t.sd * t.sd + (c.n - 1) * c.sd * c.sd) / m;
    if (!(pooled > 0.0)) throw InvariantError("hedges_g: pooled variance is zero");
    const double g = j_factor(m) * (t.mean - c.mean) / std::sqrt(pooled);
    return Study(t.n, c.n, g, g_variance(g, t.n, c.n));
}

Study sample_g(RandomStream& stream, int n_t, int n_c, double delta_i) {
    const int m = n_t + n_c - 2;
    const double n_eff = static_cast<double>(n_t) * n_c / (n_t + n_c);
    const double root = std::sqrt(n_eff);
    const double t = sample_noncentral_t(stream, m, root * delta_i);
    const double g = j_factor(m) * t / root;
    return Study(n_t, n_c, g, g_variance(g, n_t, n_c));
}

GMoments g_moments(int n_t, int n_c, double delta) {
    const int m = n_t + n_c - 2;
    if (m < 4) throw DomainError("g_moments: third moment needs m >= 4");
    const double n_eff = static_cast<double>(n_t) * n_c / (n_t + n_c);
    const double lambda = std::sqrt(n_eff) * delta;
    const double half = 0.5 * m;
    // E[T^k] = (m/2)^{k/2} Gamma((m-k)/2) / Gamma(m/2) E[(Z + lambda)^k]
    auto raw_t = [&](int k, double normal_moment) {
        return std::pow(half, 0.5 * k) * std::exp(ln_gamma(0.5 * (m - k)) - ln_gamma(half)) *
               normal_moment;
    };
    const double s = j_factor(m) / std::sqrt(n_eff);
    const double e1 = s * raw_t(1, lambda);
    const double e2 = s * s * raw_t(2, 1.0 + lambda * lambda);
    const double e3 = s * s * s * raw_t(3, lambda * lambda * lambda + 3.0 * lambda);
    const double var = e2 - e1 * e1;
    const double mu3 = e3 - 3.0 * e1 * e2 + 2.0 * e1 * e1 * e1;
    return {e1, var, mu3 / std::pow(var, 1.5)};
}

}  // namespace smdmeta
