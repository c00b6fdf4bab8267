#include "smdmeta/effect.hpp"

#include <cmath>

#include "smdmeta/errors.hpp"

namespace smdmeta {
namespace {

void require_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0,1)");
}

WeightedFit ssw_fit(const MetaInput& input) {
    std::vector<double> w;
    w.reserve(input.size());
    for (const auto& s : input.studies()) w.push_back(s.effective_n());
    return weighted_mean(input.effects(), std::move(w));
}

}  // namespace

std::string_view to_string(EffectEstimator e) {
    switch (e) {
        case EffectEstimator::IV_DL: return "DL";
        case EffectEstimator::IV_REML: return "REML";
        case EffectEstimator::IV_MP: return "MP";
        case EffectEstimator::IV_J: return "J";
        case EffectEstimator::IV_KDB: return "KDB";
        case EffectEstimator::SSW: return "SSW";
    }
    return "?";
}

std::string_view to_string(EffectIntervalMethod m) {
    switch (m) {
        case EffectIntervalMethod::Z_DL: return "Z-DL";
        case EffectIntervalMethod::Z_REML: return "Z-REML";
        case EffectIntervalMethod::Z_MP: return "Z-MP";
        case EffectIntervalMethod::Z_J: return "Z-J";
        case EffectIntervalMethod::Z_KDB: return "Z-KDB";
        case EffectIntervalMethod::HKSJ: return "HKSJ";
        case EffectIntervalMethod::HKSJ_KDB: return "HKSJ-KDB";
        case EffectIntervalMethod::SSW_KDB: return "SSW-KDB";
    }
    return "?";
}

EffectEstimator iv_estimator_for(Tau2Method method) {
    switch (method) {
        case Tau2Method::DL: return EffectEstimator::IV_DL;
        case Tau2Method::REML: return EffectEstimator::IV_REML;
        case Tau2Method::MP: return EffectEstimator::IV_MP;
        case Tau2Method::J: return EffectEstimator::IV_J;
        case Tau2Method::KDB: return EffectEstimator::IV_KDB;
    }
    throw DomainError("unknown tau2 method");
}

EffectIntervalMethod z_interval_for(Tau2Method method) {
    switch (method) {
        case Tau2Method::DL: return EffectIntervalMethod::Z_DL;
        case Tau2Method::REML: return EffectIntervalMethod::Z_REML;
        case Tau2Method::MP: return EffectIntervalMethod::Z_MP;
        case Tau2Method::J: return EffectIntervalMethod::Z_J;
        case Tau2Method::KDB: return EffectIntervalMethod::Z_KDB;
    }
    throw DomainError("unknown tau2 method");
}

EffectResult effect_iv(const MetaInput& input, const Tau2Result& tau2) {
    auto fit = iv_weighted_mean(input, tau2.value);
    return {fit.mean, 1.0 / fit.sum_w, std::move(fit.weights), iv_estimator_for(tau2.method)};
}

double ssw_variance(std::span<const Study> studies, double tau2) {
    if (!(tau2 >= 0.0)) throw DomainError("ssw_variance: tau2 must be >= 0");
    KahanSum num;
    KahanSum den;
    for (const auto& s : studies) {
        const double n = s.effective_n();
        num += n * n * (s.v2() + tau2);
        den += n;
    }
    return num.value() / (den.value() * den.value());
}

double ssw_variance(const MetaInput& input, double tau2) {
    return ssw_variance(input.studies(), tau2);
}

EffectResult effect_ssw(const MetaInput& input, double tau2) {
    auto fit = ssw_fit(input);
    return {fit.mean, ssw_variance(input, tau2), std::move(fit.weights), EffectEstimator::SSW};
}

EffectResult effect_ssw(const MetaInput& input) {
    return effect_ssw(input, tau2_kdb(input).value);
}

EffectInterval ci_z(const MetaInput& input, const Tau2Result& tau2, double level) {
    require_level(level);
    const auto est = effect_iv(input, tau2);
    const double z = normal_quantile(1.0 - (1.0 - level) / 2);
    return {est.value, z * std::sqrt(est.variance), z_interval_for(tau2.method), level, false};
}

EffectInterval ci_hksj(const MetaInput& input, const Tau2Result& tau2, double level) {
    require_level(level);
    const auto fit = iv_weighted_mean(input, tau2.value);
    const double k = static_cast<double>(input.size());
    KahanSum spread;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double d = input[i].g() - fit.mean;
        spread += fit.weights[i] * d * d;
    }
    const double variance = spread.value() / ((k - 1.0) * fit.sum_w);
    const double t = t_quantile(1.0 - (1.0 - level) / 2, k - 1.0);
    const auto method =
        tau2.method == Tau2Method::KDB ? EffectIntervalMethod::HKSJ_KDB : EffectIntervalMethod::HKSJ;
    const double half = t * std::sqrt(variance);
    return {fit.mean, half, method, level, !(half > 0.0)};
}

EffectInterval ci_ssw_kdb(const MetaInput& input, const Tau2Result& kdb, double level) {
    require_level(level);
    const auto fit = ssw_fit(input);
    const double k = static_cast<double>(input.size());
    const double t = t_quantile(1.0 - (1.0 - level) / 2, k - 1.0);
    const double half = t * std::sqrt(ssw_variance(input, kdb.value));
    return {fit.mean, half, EffectIntervalMethod::SSW_KDB, level, false};
}

EffectInterval ci_ssw_kdb(const MetaInput& input, double level) {
    return ci_ssw_kdb(input, tau2_kdb(input), level);
}

}  // namespace smdmeta
