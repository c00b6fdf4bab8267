#include <cmath>

#include "smdmeta/errors.hpp"
#include "smdmeta/tau2.hpp"

namespace smdmeta {
namespace {

Tau2Result from_root(const QRoot& root, Tau2Method method) {
    switch (root.status) {
        case RootStatus::truncated:
            return {0.0, method, Tau2Status::truncated_at_zero, root.iterations};
        case RootStatus::unbounded:
            throw NonConvergence(std::string(to_string(method)) +
                                     ": Q stays above its target up to tau2 = 1e7",
                                 0.0, kTau2Cap);
        case RootStatus::interior:
            break;
    }
    return {root.tau2, method, Tau2Status::interior, root.iterations};
}

Tau2Result clamp_moment(double raw, Tau2Method method) {
    if (raw <= 0.0) return {0.0, method, Tau2Status::truncated_at_zero, 0};
    return {raw, method, Tau2Status::interior, 0};
}

// One undamped REML fixed-point update.
double reml_update(const MetaInput& input, double tau2) {
    const auto fit = iv_weighted_mean(input, tau2);
    KahanSum num;
    KahanSum w2;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double w = fit.weights[i];
        const double d = input[i].g() - fit.mean;
        num += w * w * (d * d - input[i].v2());
        w2 += w * w;
    }
    return std::max(0.0, num.value() / w2.value() + 1.0 / fit.sum_w);
}

}  // namespace

std::string_view to_string(Tau2Method m) {
    switch (m) {
        case Tau2Method::DL: return "DL";
        case Tau2Method::REML: return "REML";
        case Tau2Method::MP: return "MP";
        case Tau2Method::J: return "J";
        case Tau2Method::KDB: return "KDB";
    }
    return "?";
}

std::string_view to_string(Tau2Status s) {
    switch (s) {
        case Tau2Status::interior: return "interior";
        case Tau2Status::truncated_at_zero: return "truncated_at_zero";
        case Tau2Status::max_iter: return "max_iter";
    }
    return "?";
}

std::string_view to_string(Tau2IntervalMethod m) {
    switch (m) {
        case Tau2IntervalMethod::QP: return "QP";
        case Tau2IntervalMethod::BJ: return "BJ";
        case Tau2IntervalMethod::J: return "J";
        case Tau2IntervalMethod::PL: return "PL";
        case Tau2IntervalMethod::KDB: return "KDB";
    }
    return "?";
}

Tau2Result tau2_dl(const MetaInput& input) {
    KahanSum s1;
    KahanSum s2;
    for (const auto& s : input.studies()) {
        const double w = 1.0 / s.v2();
        s1 += w;
        s2 += w * w;
    }
    const double denom = s1.value() - s2.value() / s1.value();
    if (!(denom > 0.0)) throw InvariantError("DL: degenerate weight denominator");
    const double k = static_cast<double>(input.size());
    return clamp_moment((q_statistic(input, 0.0) - (k - 1.0)) / denom, Tau2Method::DL);
}

Tau2Result tau2_mp(const MetaInput& input) {
    const double k = static_cast<double>(input.size());
    return from_root(solve_q_equals(input, k - 1.0), Tau2Method::MP);
}

Tau2Result tau2_kdb(const MetaInput& input) {
    return from_root(solve_q_equals(input, corrected_expected_q(input)), Tau2Method::KDB);
}

Tau2Result tau2_jackson(const MetaInput& input) {
    const auto g = input.effects();
    std::vector<double> u;
    u.reserve(input.size());
    for (const auto& s : input.studies()) u.push_back(1.0 / std::sqrt(s.v2()));
    const double q_gen = weighted_q(g, u);

    KahanSum total;
    for (double x : u) total += x;
    KahanSum sum_c;
    KahanSum sum_cv;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double c = u[i] - u[i] * u[i] / total.value();
        sum_c += c;
        sum_cv += c * input[i].v2();
    }
    return clamp_moment((q_gen - sum_cv.value()) / sum_c.value(), Tau2Method::J);
}

double restricted_loglik(const MetaInput& input, double tau2) {
    const auto fit = iv_weighted_mean(input, tau2);
    KahanSum log_var;
    KahanSum q;
    for (std::size_t i = 0; i < input.size(); ++i) {
        log_var += std::log(input[i].v2() + tau2);
        const double d = input[i].g() - fit.mean;
        q += fit.weights[i] * d * d;
    }
    return -0.5 * (log_var.value() + std::log(fit.sum_w) + q.value());
}

double restricted_score(const MetaInput& input, double tau2) {
    // d/dtau2 of restricted_loglik
    const auto fit = iv_weighted_mean(input, tau2);
    KahanSum sw2;
    KahanSum sw;
    KahanSum sw2r;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double w = fit.weights[i];
        const double d = input[i].g() - fit.mean;
        sw += w;
        sw2 += w * w;
        sw2r += w * w * d * d;
    }
    return 0.5 * (-sw.value() + sw2.value() / fit.sum_w + sw2r.value());
}

Tau2Result tau2_reml(const MetaInput& input) {
    constexpr int kMaxIter = 200;
    double tau2 = tau2_dl(input).value;
    double ll = restricted_loglik(input, tau2);

    for (int iter = 1; iter <= kMaxIter; ++iter) {
        double step = reml_update(input, tau2) - tau2;
        double next = tau2 + step;
        double next_ll = restricted_loglik(input, next);
        for (int halving = 0; halving < 30 && next_ll < ll; ++halving) {
            step *= 0.5;
            next = tau2 + step;
            next_ll = restricted_loglik(input, next);
        }
        const bool done = std::abs(next - tau2) <= 1e-8 * (1.0 + tau2);
        tau2 = next;
        ll = next_ll;
        if (done) {
            const auto status = tau2 == 0.0 ? Tau2Status::truncated_at_zero : Tau2Status::interior;
            return {tau2, Tau2Method::REML, status, iter};
        }
    }
    return {tau2, Tau2Method::REML, Tau2Status::max_iter, kMaxIter};
}

Tau2Result estimate_tau2(const MetaInput& input, Tau2Method method) {
    switch (method) {
        case Tau2Method::DL: return tau2_dl(input);
        case Tau2Method::REML: return tau2_reml(input);
        case Tau2Method::MP: return tau2_mp(input);
        case Tau2Method::J: return tau2_jackson(input);
        case Tau2Method::KDB: return tau2_kdb(input);
    }
    throw DomainError("unknown tau2 method");
}

}  // namespace smdmeta
