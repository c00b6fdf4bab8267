#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

#include "smdmeta/cli.hpp"
#include "smdmeta/errors.hpp"

namespace smdmeta::cli {
namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    return s;
}

template <class E, std::size_t N>
std::vector<E> parse_methods(const std::vector<std::string>& names, const E (&all)[N], const char* flag) {
    std::vector<E> out;
    for (const auto& name : names) {
        const auto it = std::find_if(std::begin(all), std::end(all),
                                     [&](E e) { return upper(std::string(to_string(e))) == upper(name); });
        if (it == std::end(all)) throw InputError(std::string(flag) + ": unknown method '" + name + "'");
        out.push_back(*it);
    }
    return out;
}

std::vector<int> parse_int_levels(const std::string& text, const char* flag) {
    std::vector<int> out;
    for (double v : parse_levels(text)) {
        if (std::abs(v - std::round(v)) > 1e-9) {
            throw InputError(std::string(flag) + ": '" + text + "' must list integers");
        }
        out.push_back(static_cast<int>(std::lround(v)));
    }
    return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Random-effects meta-analysis of standardized mean differences"};
    app.name("smdmeta");
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Estimate tau^2 and the overall SMD for a CSV of studies");
    std::string analyze_input;
    std::vector<std::string> tau2_names;
    std::vector<std::string> tau2_ci_names;
    std::vector<std::string> effect_ci_names;
    double level = 0.95;
    std::string format = "text";
    analyze->add_option("input", analyze_input, "CSV file ('-' for stdin)")->required();
    analyze->add_option("--tau2-methods", tau2_names, "Subset of DL,REML,MP,J,KDB")->delimiter(',');
    analyze->add_option("--tau2-intervals", tau2_ci_names, "Subset of QP,BJ,J,PL,KDB")->delimiter(',');
    analyze->add_option("--effect-intervals", effect_ci_names,
                        "Subset of Z-DL,Z-REML,Z-MP,Z-J,Z-KDB,HKSJ,HKSJ-KDB,SSW-KDB")
        ->delimiter(',');
    analyze->add_option("--level", level, "Confidence level in (0.5, 1)")->capture_default_str();
    analyze->add_option("--format", format, "text or json")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run the Monte-Carlo grid and write long-format CSV");
    std::string deltas, tau2s, ks, ns, nbars, qs, out_path;
    int reps = 2000;
    int chunks = 10;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::uint64_t seed = 1;
    bool allow_custom = false;
    bool use_full_grid = false;
    simulate->add_option("--delta", deltas, "Levels, e.g. 0,0.5 or 0(0.5)2");
    simulate->add_option("--tau2", tau2s, "Levels, e.g. 0(0.5)2.5");
    simulate->add_option("--k", ks, "Numbers of studies");
    simulate->add_option("--n", ns, "Equal study sizes");
    simulate->add_option("--nbar", nbars, "Average sizes of the unequal sets");
    simulate->add_option("--q", qs, "Control-arm proportions");
    simulate->add_flag("--full-grid", use_full_grid, "Use every published level for fields not given");
    simulate->add_option("--reps", reps, "Replicates per cell")->capture_default_str();
    simulate->add_option("--chunks", chunks, "Chunks per cell (must divide reps)")->capture_default_str();
    simulate->add_option("--threads", threads, "Worker threads");
    simulate->add_option("--seed", seed, "Master seed")->capture_default_str();
    simulate->add_option("--out", out_path, "Output CSV (stdout if omitted)");
    simulate->add_flag("--allow-custom", allow_custom, "Accept levels outside the published design");

    // plot
    auto* plot = app.add_subcommand("plot", "Draw 4 x 3 panel SVG figures from simulation results");
    PlotRequest plot_req;
    std::string family = "equal-a";
    plot->add_option("input", plot_req.input, "Results CSV from simulate")->required();
    plot->add_option("--metric", plot_req.metric,
                     "tau2_bias, tau2_truncation, tau2_coverage, effect_bias, effect_mse, "
                     "effect_coverage, effect_degenerate or mse_ratio")
        ->required();
    plot->add_option("--delta", plot_req.delta, "Figure delta")->capture_default_str();
    plot->add_option("--q", plot_req.q, "Figure q")->capture_default_str();
    plot->add_option("--family", family, "equal-a (n 20-250), equal-b (n 30-70) or unequal")
        ->check(CLI::IsMember({"equal-a", "equal-b", "unequal"}))
        ->capture_default_str();
    plot->add_flag("--all", plot_req.all, "Every figure the results cover");
    plot->add_option("--out", plot_req.out_dir, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (analyze->parsed()) {
            AnalysisRequest req;
            req.input = analyze_input;
            if (!tau2_names.empty()) req.tau2_methods = parse_methods(tau2_names, kTau2Methods, "--tau2-methods");
            if (!tau2_ci_names.empty()) {
                req.tau2_intervals = parse_methods(tau2_ci_names, kTau2IntervalMethods, "--tau2-intervals");
            }
            if (!effect_ci_names.empty()) {
                req.effect_intervals =
                    parse_methods(effect_ci_names, kEffectIntervalMethods, "--effect-intervals");
            }
            req.level = level;
            req.format = format == "json" ? OutputFormat::json : OutputFormat::text;
            return cmd_analyze(req, out, err);
        }
        if (simulate->parsed()) {
            SimulateRequest req;
            GridConfig& g = req.grid;
            if (!use_full_grid && deltas.empty() && tau2s.empty() && ks.empty() && ns.empty() && nbars.empty() &&
                qs.empty()) {
                throw InputError("give grid levels (--delta, --tau2, --k, --n/--nbar, --q) or --full-grid");
            }
            if (!deltas.empty()) g.deltas = parse_levels(deltas);
            if (!tau2s.empty()) g.tau2s = parse_levels(tau2s);
            if (!ks.empty()) g.ks = parse_int_levels(ks, "--k");
            if (!qs.empty()) g.qs = parse_levels(qs);
            if (!ns.empty() || !nbars.empty()) {
                g.equal_ns = ns.empty() ? std::vector<int>{} : parse_int_levels(ns, "--n");
                g.unequal_nbars = nbars.empty() ? std::vector<int>{} : parse_int_levels(nbars, "--nbar");
            }
            g.reps = reps;
            g.chunks = chunks;
            g.seed = seed;
            g.allow_custom = allow_custom;
            req.threads = threads;
            req.out = out_path;
            return cmd_simulate(req, out, err);
        }
        if (plot->parsed()) {
            plot_req.family = family == "unequal"   ? SizeFamily::unequal
                              : family == "equal-b" ? SizeFamily::equal_b
                                                    : SizeFamily::equal_a;
            return cmd_plot(plot_req, out, err);
        }
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}

}  // namespace smdmeta::cli
