#pragma once

// Point and interval estimators of the overall standardized mean difference.

#include <span>
#include <string_view>
#include <vector>

#include "smdmeta/tau2.hpp"

namespace smdmeta {

enum class EffectEstimator { IV_DL, IV_REML, IV_MP, IV_J, IV_KDB, SSW };
enum class EffectIntervalMethod { Z_DL, Z_REML, Z_MP, Z_J, Z_KDB, HKSJ, HKSJ_KDB, SSW_KDB };

inline constexpr EffectEstimator kEffectEstimators[] = {
    EffectEstimator::IV_DL, EffectEstimator::IV_REML, EffectEstimator::IV_MP,
    EffectEstimator::IV_J,  EffectEstimator::IV_KDB,  EffectEstimator::SSW};
inline constexpr EffectIntervalMethod kEffectIntervalMethods[] = {
    EffectIntervalMethod::Z_DL,     EffectIntervalMethod::Z_REML, EffectIntervalMethod::Z_MP,
    EffectIntervalMethod::Z_J,      EffectIntervalMethod::Z_KDB,  EffectIntervalMethod::HKSJ,
    EffectIntervalMethod::HKSJ_KDB, EffectIntervalMethod::SSW_KDB};

std::string_view to_string(EffectEstimator e);
std::string_view to_string(EffectIntervalMethod m);

EffectEstimator iv_estimator_for(Tau2Method method);
EffectIntervalMethod z_interval_for(Tau2Method method);

struct EffectResult {
    double value = 0.0;
    double variance = 0.0;
    std::vector<double> weights;
    EffectEstimator estimator = EffectEstimator::IV_DL;
};

struct EffectInterval {
    double center = 0.0;
    double half_width = 0.0;
    EffectIntervalMethod method = EffectIntervalMethod::Z_DL;
    double level = 0.95;
    bool degenerate = false;  // zero dispersion; half_width is 0

    double lo() const noexcept { return center - half_width; }
    double hi() const noexcept { return center + half_width; }
    bool contains(double delta) const noexcept { return lo() <= delta && delta <= hi(); }
};

/// Inverse-variance weighted mean at the given tau^2, variance 1/sum(w).
EffectResult effect_iv(const MetaInput& input, const Tau2Result& tau2);

/// Effective-sample-size weighted mean. The variance uses tau2 when given,
/// otherwise the KDB estimate.
EffectResult effect_ssw(const MetaInput& input);
EffectResult effect_ssw(const MetaInput& input, double tau2);

/// sum n~_i^2 (v_i^2 + tau2) / (sum n~_i)^2
double ssw_variance(std::span<const Study> studies, double tau2);
double ssw_variance(const MetaInput& input, double tau2);

EffectInterval ci_z(const MetaInput& input, const Tau2Result& tau2, double level = 0.95);
/// Tagged HKSJ_KDB when tau2 comes from KDB, HKSJ otherwise.
EffectInterval ci_hksj(const MetaInput& input, const Tau2Result& tau2, double level = 0.95);
EffectInterval ci_ssw_kdb(const MetaInput& input, double level = 0.95);
/// Same as ci_ssw_kdb with a precomputed KDB estimate.
EffectInterval ci_ssw_kdb(const MetaInput& input, const Tau2Result& kdb, double level = 0.95);

}  // namespace smdmeta
