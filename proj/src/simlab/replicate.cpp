#include <bit>
#include <cmath>

#include "smdmeta/errors.hpp"
#include "smdmeta/simlab.hpp"

namespace smdmeta {
namespace {

std::uint64_t cell_key(const SimCell& cell) {
    std::uint64_t h = mix64(std::bit_cast<std::uint64_t>(cell.delta));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(cell.tau2));
    h = mix64(h ^ static_cast<std::uint64_t>(cell.k));
    h = mix64(h ^ static_cast<std::uint64_t>(cell.pattern));
    h = mix64(h ^ static_cast<std::uint64_t>(cell.n));
    return mix64(h ^ std::bit_cast<std::uint64_t>(cell.q));
}

template <class F>
bool attempt(F&& f) {
    try {
        f();
        return true;
    } catch (const NonConvergence&) {
        return false;
    } catch (const DomainError&) {
        return false;
    }
}

}  // namespace

std::uint64_t replicate_stream_id(const SimCell& cell, std::size_t rep) {
    return mix64(cell_key(cell) ^ mix64(static_cast<std::uint64_t>(rep)));
}

MetaInput draw_meta_sample(const SimCell& cell, std::span<const ArmSizes> sizes, std::size_t rep) {
    RandomStream stream(cell.seed, replicate_stream_id(cell, rep));
    const double tau = std::sqrt(cell.tau2);
    std::vector<Study> studies;
    studies.reserve(sizes.size());
    for (const auto& s : sizes) {
        const double delta_i = cell.delta + tau * sample_normal(stream);
        studies.push_back(sample_g(stream, s.n_t, s.n_c, delta_i));
    }
    return MetaInput(std::move(studies));
}

ReplicateOutcome evaluate_replicate(const MetaInput& input, double true_delta, double true_tau2,
                                    double level) {
    ReplicateOutcome out;

    std::array<Tau2Result, kNumTau2> tau2{};
    for (std::size_t i = 0; i < kNumTau2; ++i) {
        out.tau2_ok[i] = attempt([&] {
            tau2[i] = estimate_tau2(input, kTau2Methods[i]);
            if (tau2[i].status == Tau2Status::max_iter) throw NonConvergence("max_iter");
        });
        out.tau2[i] = out.tau2_ok[i] ? tau2[i].value : 0.0;
        out.tau2_truncated[i] = out.tau2_ok[i] && tau2[i].status == Tau2Status::truncated_at_zero;
    }

    for (std::size_t i = 0; i < kNumTau2Ci; ++i) {
        Tau2Interval ci;
        out.tau2_ci_ok[i] = attempt([&] { ci = tau2_interval(input, kTau2IntervalMethods[i], level); });
        out.tau2_cover[i] = out.tau2_ci_ok[i] && ci.contains(true_tau2);
    }

    // Inverse-variance estimators follow the tau2 ordering; SSW is last.
    for (std::size_t i = 0; i < kNumTau2; ++i) {
        out.effect_ok[i] = out.tau2_ok[i];
        if (out.effect_ok[i]) out.effect[i] = effect_iv(input, tau2[i]).value;
    }
    constexpr std::size_t kSsw = kNumEffect - 1;
    constexpr std::size_t kKdb = 4;
    out.effect_ok[kSsw] = true;
    out.effect[kSsw] = effect_ssw(input, 0.0).value;

    auto score = [&](std::size_t slot, bool ok, auto make) {
        out.effect_ci_ok[slot] = ok;
        if (!ok) return;
        const EffectInterval ci = make();
        out.effect_cover[slot] = ci.contains(true_delta);
        out.effect_degenerate[slot] = ci.degenerate;
    };
    for (std::size_t i = 0; i < kNumTau2; ++i) {
        score(i, out.tau2_ok[i], [&] { return ci_z(input, tau2[i], level); });
    }
    score(5, out.tau2_ok[0], [&] { return ci_hksj(input, tau2[0], level); });
    score(6, out.tau2_ok[kKdb], [&] { return ci_hksj(input, tau2[kKdb], level); });
    score(7, out.tau2_ok[kKdb], [&] { return ci_ssw_kdb(input, tau2[kKdb], level); });
    return out;
}

}  // namespace smdmeta
