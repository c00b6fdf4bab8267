#pragma once

#include <span>
#include <vector>

#include "smdmeta/smd.hpp"

namespace smdmeta {

/// Ordered collection of K >= 2 studies.
class MetaInput {
public:
    explicit MetaInput(std::vector<Study> studies);

    std::span<const Study> studies() const noexcept { return studies_; }
    std::size_t size() const noexcept { return studies_.size(); }
    const Study& operator[](std::size_t i) const { return studies_[i]; }

    std::vector<double> effects() const;
    std::vector<double> variances() const;

private:
    std::vector<Study> studies_;
};

struct WeightedFit {
    std::vector<double> weights;
    double mean = 0.0;
    double sum_w = 0.0;
};

/// Weighted mean with arbitrary positive weights.
WeightedFit weighted_mean(std::span<const double> values, std::vector<double> weights);

/// sum w_i (x_i - xbar_w)^2 with xbar_w recomputed from the same weights.
double weighted_q(std::span<const double> values, std::span<const double> weights);

/// Inverse-variance weights 1/(v_i^2 + tau2) and the resulting mean.
WeightedFit iv_weighted_mean(const MetaInput& input, double tau2);

/// Generalized Cochran Q(tau2).
double q_statistic(const MetaInput& input, double tau2);

enum class RootStatus {
    interior,
    truncated,  // Q(0) <= target, root clamped to 0
    unbounded,  // Q stays above target up to the bracket cap
};

struct QRoot {
    double tau2 = 0.0;
    RootStatus status = RootStatus::interior;
    int iterations = 0;
};

inline constexpr double kTau2Cap = 1e7;

/// Finds tau2 >= 0 with Q(tau2) = target by bracket doubling and bisection.
/// Bisects to floating-point resolution. Throws NonConvergence (with the
/// bracket) if the residual still exceeds 1e-8 * target after 400 steps.
QRoot solve_q_equals(const MetaInput& input, double target);

}  // namespace smdmeta
