#pragma once

// Point and interval estimators of the between-study variance tau^2.

#include <span>
#include <string_view>
#include <vector>

#include "smdmeta/qstat.hpp"

namespace smdmeta {

enum class Tau2Method { DL, REML, MP, J, KDB };
enum class Tau2Status { interior, truncated_at_zero, max_iter };
enum class Tau2IntervalMethod { QP, BJ, J, PL, KDB };

inline constexpr Tau2Method kTau2Methods[] = {Tau2Method::DL, Tau2Method::REML, Tau2Method::MP,
                                             Tau2Method::J, Tau2Method::KDB};
inline constexpr Tau2IntervalMethod kTau2IntervalMethods[] = {
    Tau2IntervalMethod::QP, Tau2IntervalMethod::BJ, Tau2IntervalMethod::J,
    Tau2IntervalMethod::PL, Tau2IntervalMethod::KDB};

std::string_view to_string(Tau2Method m);
std::string_view to_string(Tau2Status s);
std::string_view to_string(Tau2IntervalMethod m);

struct Tau2Result {
    double value = 0.0;
    Tau2Method method = Tau2Method::DL;
    Tau2Status status = Tau2Status::interior;
    int iterations = 0;
};

struct Tau2Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool hi_infinite = false;  // upper endpoint beyond kTau2Cap
    Tau2IntervalMethod method = Tau2IntervalMethod::QP;
    double level = 0.95;
    bool lo_truncated = false;
    bool hi_truncated = false;
    bool flat_likelihood = false;  // PL only

    bool contains(double tau2) const noexcept {
        return tau2 >= lo && (hi_infinite || tau2 <= hi);
    }
};

Tau2Result tau2_dl(const MetaInput& input);
Tau2Result tau2_mp(const MetaInput& input);
Tau2Result tau2_reml(const MetaInput& input);
Tau2Result tau2_jackson(const MetaInput& input);
Tau2Result tau2_kdb(const MetaInput& input);
Tau2Result estimate_tau2(const MetaInput& input, Tau2Method method);

/// Restricted log-likelihood (up to a constant) and its score in tau^2.
double restricted_loglik(const MetaInput& input, double tau2);
double restricted_score(const MetaInput& input, double tau2);

/// Expected value of Cochran's Q (weights 1/v_i^2) under homogeneity with the
/// O(1/n) correction for estimated SMD variances, evaluated at common SMD
/// delta. Tends to K - 1 as every study grows.
double corrected_expected_q(std::span<const ArmSizes> sizes, double delta);

/// As above, at the sample-size-weighted mean of the observed g.
double corrected_expected_q(const MetaInput& input);

Tau2Interval ci_qp(const MetaInput& input, double level = 0.95);
Tau2Interval ci_kdb(const MetaInput& input, double level = 0.95);
Tau2Interval ci_bj(const MetaInput& input, double level = 0.95);
Tau2Interval ci_jackson(const MetaInput& input, double level = 0.95);
Tau2Interval ci_pl(const MetaInput& input, double level = 0.95);
Tau2Interval tau2_interval(const MetaInput& input, Tau2IntervalMethod method, double level = 0.95);

/// Distribution of a fixed-weight generalized Q under the random-effects model
/// with between-study variance tau2. Backs the BJ and Jackson intervals.
class GeneralizedQ {
public:
    GeneralizedQ(const MetaInput& input, std::vector<double> weights);

    /// Biggerstaff-Jackson weights 1/v_i^2.
    static GeneralizedQ inverse_variance(const MetaInput& input);
    /// Jackson weights 1/v_i.
    static GeneralizedQ inverse_se(const MetaInput& input);

    double observed() const noexcept { return observed_; }
    std::span<const double> weights() const noexcept { return weights_; }

    /// Coefficients of the chi^2_1 mixture Q follows at tau2.
    std::vector<double> coefficients(double tau2) const;
    /// P(Q <= q | tau2).
    double cdf(double q, double tau2) const;

private:
    std::vector<double> variances_;
    std::vector<double> weights_;
    double observed_;
};

}  // namespace smdmeta
