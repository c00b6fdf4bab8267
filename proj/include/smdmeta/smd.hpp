#pragma once

// Study-level standardized mean difference: Hedges's g, its bias-correction
// factor, the unbiased variance estimate and exact sampling under the model.

#include "smdmeta/numkernel.hpp"

namespace smdmeta {

struct ArmSizes {
    int n_t = 0;
    int n_c = 0;

    friend bool operator==(const ArmSizes&, const ArmSizes&) = default;
};

struct ArmSummary {
    int n = 0;
    double mean = 0.0;
    double sd = 0.0;
};

/// One two-arm study: arm sizes, SMD estimate and its estimated variance.
class Study {
public:
    Study(int n_t, int n_c, double g, double v2);

    int n_t() const noexcept { return n_t_; }
    int n_c() const noexcept { return n_c_; }
    double g() const noexcept { return g_; }
    double v2() const noexcept { return v2_; }

    int n() const noexcept { return n_t_ + n_c_; }
    int m() const noexcept { return n_t_ + n_c_ - 2; }
    /// Proportion in the control arm.
    double q() const noexcept { return static_cast<double>(n_c_) / n(); }
    /// n_t n_c / (n_t + n_c), equal to n q (1 - q).
    double effective_n() const noexcept {
        return static_cast<double>(n_t_) * n_c_ / static_cast<double>(n());
    }

    Study with_g(double g, double v2) const { return Study(n_t_, n_c_, g, v2); }

private:
    int n_t_;
    int n_c_;
    double g_;
    double v2_;
};

/// Exact J(m) = Gamma(m/2) / (sqrt(m/2) Gamma((m-1)/2)), m >= 2.
double j_factor(int m);

Study hedges_g(const ArmSummary& treatment, const ArmSummary& control);

/// Unbiased estimate of Var(g); needs m = n_t + n_c - 2 >= 3.
double g_variance(double g, int n_t, int n_c);

/// Draws g from the scaled non-central t with ncp sqrt(n~) delta_i.
Study sample_g(RandomStream& stream, int n_t, int n_c, double delta_i);

/// Exact mean, variance and standardized third moment of g for true SMD delta.
struct GMoments {
    double mean;
    double variance;
    double skewness;
};
GMoments g_moments(int n_t, int n_c, double delta);

}  // namespace smdmeta
