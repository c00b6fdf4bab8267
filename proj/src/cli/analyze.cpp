#include <array>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "smdmeta/cli.hpp"
#include "smdmeta/errors.hpp"

namespace smdmeta::cli {
namespace {

using json = nlohmann::ordered_json;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::size_t index_of(Tau2Method m) { return static_cast<std::size_t>(m); }

// Everything analyze computes, with per-method failures kept rather than
// aborting the whole report.
struct Analysis {
    double q = 0.0;
    std::array<std::optional<Tau2Result>, kNumTau2> tau2;
    std::vector<std::pair<Tau2IntervalMethod, std::optional<Tau2Interval>>> tau2_ci;
    std::vector<std::pair<EffectEstimator, std::optional<EffectResult>>> effects;
    std::vector<std::pair<EffectIntervalMethod, std::optional<EffectInterval>>> effect_ci;
    std::vector<std::string> failures;
};

Analysis compute(const MetaInput& input, const AnalysisRequest& req) {
    Analysis a;
    a.q = q_statistic(input, 0.0);
    for (std::size_t i = 0; i < kNumTau2; ++i) {
        const Tau2Method m = kTau2Methods[i];
        try {
            auto r = estimate_tau2(input, m);
            if (r.status == Tau2Status::max_iter) {
                a.failures.push_back("tau2 " + std::string(to_string(m)) + ": no convergence in " +
                                     std::to_string(r.iterations) + " iterations");
            } else {
                a.tau2[i] = r;
            }
        } catch (const NonConvergence& e) {
            a.failures.push_back("tau2 " + std::string(to_string(m)) + ": " + e.what());
        }
    }
    for (auto m : req.tau2_intervals) {
        try {
            a.tau2_ci.emplace_back(m, tau2_interval(input, m, req.level));
        } catch (const NonConvergence& e) {
            a.tau2_ci.emplace_back(m, std::nullopt);
            a.failures.push_back("tau2 interval " + std::string(to_string(m)) + ": " + e.what());
        }
    }
    for (auto m : req.tau2_methods) {
        const auto& t = a.tau2[index_of(m)];
        a.effects.emplace_back(iv_estimator_for(m),
                               t ? std::optional<EffectResult>(effect_iv(input, *t)) : std::nullopt);
    }
    const auto& kdb = a.tau2[index_of(Tau2Method::KDB)];
    const auto& dl = a.tau2[index_of(Tau2Method::DL)];
    a.effects.emplace_back(EffectEstimator::SSW,
                           kdb ? std::optional<EffectResult>(effect_ssw(input, kdb->value)) : std::nullopt);

    for (auto m : req.effect_intervals) {
        std::optional<EffectInterval> ci;
        switch (m) {
            case EffectIntervalMethod::HKSJ:
                if (dl) ci = ci_hksj(input, *dl, req.level);
                break;
            case EffectIntervalMethod::HKSJ_KDB:
                if (kdb) ci = ci_hksj(input, *kdb, req.level);
                break;
            case EffectIntervalMethod::SSW_KDB:
                if (kdb) ci = ci_ssw_kdb(input, *kdb, req.level);
                break;
            default:
                for (auto t : kTau2Methods) {
                    if (z_interval_for(t) == m && a.tau2[index_of(t)]) {
                        ci = ci_z(input, *a.tau2[index_of(t)], req.level);
                    }
                }
                break;
        }
        a.effect_ci.emplace_back(m, ci);
    }
    return a;
}

std::string tau2_ci_flags(const Tau2Interval& ci) {
    std::string flags;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!flags.empty()) flags += ' ';
        flags += name;
    };
    add(ci.lo_truncated, "lo_truncated");
    add(ci.hi_truncated, "hi_truncated");
    add(ci.hi_infinite, "hi_infinite");
    add(ci.flat_likelihood, "flat_likelihood");
    return flags;
}

void print_text(std::ostream& out, const MetaInput& input, const AnalysisRequest& req, const Analysis& a) {
    out << "studies: " << input.size() << "  level: " << num(req.level) << "  Q: " << num(a.q) << "\n\n";

    out << "tau2 estimates\n";
    out << "  " << pad("method", 10) << pad("estimate", 14) << "status\n";
    for (auto m : req.tau2_methods) {
        const auto& t = a.tau2[index_of(m)];
        out << "  " << pad(std::string(to_string(m)), 10);
        if (t) {
            out << pad(num(t->value), 14) << to_string(t->status) << '\n';
        } else {
            out << pad("-", 14) << "failed\n";
        }
    }

    out << "\ntau2 confidence intervals\n";
    out << "  " << pad("method", 10) << pad("lower", 14) << pad("upper", 14) << "flags\n";
    for (const auto& [m, ci] : a.tau2_ci) {
        out << "  " << pad(std::string(to_string(m)), 10);
        if (!ci) {
            out << pad("-", 14) << pad("-", 14) << "failed\n";
            continue;
        }
        out << pad(num(ci->lo), 14) << pad(ci->hi_infinite ? "inf" : num(ci->hi), 14) << tau2_ci_flags(*ci)
            << '\n';
    }

    out << "\neffect estimates\n";
    out << "  " << pad("estimator", 10) << pad("estimate", 14) << "se\n";
    for (const auto& [e, r] : a.effects) {
        out << "  " << pad(std::string(to_string(e)), 10);
        if (r) {
            out << pad(num(r->value), 14) << num(std::sqrt(r->variance)) << '\n';
        } else {
            out << pad("-", 14) << "failed\n";
        }
    }

    out << "\neffect confidence intervals\n";
    out << "  " << pad("method", 10) << pad("lower", 14) << pad("upper", 14) << "flags\n";
    for (const auto& [m, ci] : a.effect_ci) {
        out << "  " << pad(std::string(to_string(m)), 10);
        if (!ci) {
            out << pad("-", 14) << pad("-", 14) << "failed\n";
            continue;
        }
        out << pad(num(ci->lo()), 14) << pad(num(ci->hi()), 14) << (ci->degenerate ? "degenerate" : "")
            << '\n';
    }

    if (!a.failures.empty()) {
        out << "\nnon-convergence\n";
        for (const auto& f : a.failures) out << "  " << f << '\n';
    }
}

void print_json(std::ostream& out, const MetaInput& input, const AnalysisRequest& req, const Analysis& a) {
    json doc;
    doc["studies"] = input.size();
    doc["level"] = req.level;
    doc["q"] = a.q;

    json tau2 = json::array();
    for (auto m : req.tau2_methods) {
        const auto& t = a.tau2[index_of(m)];
        json row{{"method", to_string(m)}};
        if (t) {
            row["estimate"] = t->value;
            row["status"] = to_string(t->status);
            row["truncated"] = t->status == Tau2Status::truncated_at_zero;
            row["iterations"] = t->iterations;
        } else {
            row["estimate"] = nullptr;
            row["status"] = "failed";
        }
        tau2.push_back(std::move(row));
    }
    doc["tau2"] = std::move(tau2);

    json tau2_ci = json::array();
    for (const auto& [m, ci] : a.tau2_ci) {
        json row{{"method", to_string(m)}};
        if (ci) {
            row["lower"] = ci->lo;
            row["upper"] = ci->hi_infinite ? json(nullptr) : json(ci->hi);
            row["hi_infinite"] = ci->hi_infinite;
            row["lo_truncated"] = ci->lo_truncated;
            row["hi_truncated"] = ci->hi_truncated;
            row["flat_likelihood"] = ci->flat_likelihood;
        } else {
            row["failed"] = true;
        }
        tau2_ci.push_back(std::move(row));
    }
    doc["tau2_intervals"] = std::move(tau2_ci);

    json effects = json::array();
    for (const auto& [e, r] : a.effects) {
        json row{{"estimator", to_string(e)}};
        if (r) {
            row["estimate"] = r->value;
            row["se"] = std::sqrt(r->variance);
            row["weights"] = r->weights;
        } else {
            row["failed"] = true;
        }
        effects.push_back(std::move(row));
    }
    doc["effect"] = std::move(effects);

    json effect_ci = json::array();
    for (const auto& [m, ci] : a.effect_ci) {
        json row{{"method", to_string(m)}};
        if (ci) {
            row["center"] = ci->center;
            row["half_width"] = ci->half_width;
            row["lower"] = ci->lo();
            row["upper"] = ci->hi();
            row["degenerate"] = ci->degenerate;
        } else {
            row["failed"] = true;
        }
        effect_ci.push_back(std::move(row));
    }
    doc["effect_intervals"] = std::move(effect_ci);
    doc["failures"] = a.failures;
    out << doc.dump(2) << '\n';
}

}  // namespace

int cmd_analyze(const AnalysisRequest& request, std::ostream& out, std::ostream& err) {
    if (!(request.level > 0.5 && request.level < 1.0)) {
        err << "error: --level must lie in (0.5, 1)\n";
        return kExitInput;
    }
    if (request.tau2_methods.empty() && request.tau2_intervals.empty() && request.effect_intervals.empty()) {
        err << "error: no methods requested\n";
        return kExitInput;
    }
    try {
        std::optional<MetaInput> input;
        if (request.input == "-") {
            input.emplace(read_meta_csv(std::cin));
        } else {
            std::ifstream f(request.input);
            if (!f) {
                err << "error: cannot open '" << request.input << "'\n";
                return kExitInput;
            }
            input.emplace(read_meta_csv(f));
        }
        const Analysis a = compute(*input, request);
        if (request.format == OutputFormat::json) {
            print_json(out, *input, request, a);
        } else {
            print_text(out, *input, request, a);
        }
        if (!a.failures.empty()) {
            err << a.failures.size() << " method(s) did not converge\n";
            return kExitNonConvergence;
        }
        return kExitOk;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const InvariantError& e) {
        err << "invalid data: " << e.what() << '\n';
        return kExitInvariant;
    } catch (const DomainError& e) {
        err << "invalid data: " << e.what() << '\n';
        return kExitInvariant;
    } catch (const NonConvergence& e) {
        err << "non-convergence: " << e.what() << '\n';
        return kExitNonConvergence;
    }
}

}  // namespace smdmeta::cli
