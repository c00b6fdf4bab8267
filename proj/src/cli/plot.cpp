#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "smdmeta/cli.hpp"
#include "smdmeta/errors.hpp"

namespace smdmeta::cli {
namespace {

constexpr int kKs[] = {5, 10, 30};

constexpr double kPanelW = 260.0;
constexpr double kPanelH = 170.0;
constexpr double kGapX = 40.0;
constexpr double kGapY = 50.0;
constexpr double kLeft = 70.0;
constexpr double kTop = 60.0;
constexpr double kLegendW = 150.0;

struct LineStyle {
    const char* color;
    const char* dash;  // empty for solid
    double width;
};

// Fixed per estimator so figures stay comparable across runs.
LineStyle style_for(const std::string& estimator) {
    static const std::map<std::string, LineStyle> styles{
        {"DL", {"#1f77b4", "", 1.5}},        {"REML", {"#ff7f0e", "", 1.5}},
        {"MP", {"#2ca02c", "", 1.5}},        {"J", {"#d62728", "", 1.5}},
        {"KDB", {"#9467bd", "", 2.5}},       {"SSW", {"#8c564b", "", 2.5}},
        {"QP", {"#17becf", "", 1.5}},        {"BJ", {"#e377c2", "", 1.5}},
        {"PL", {"#7f7f7f", "", 1.5}},        {"Z-DL", {"#1f77b4", "6,3", 1.5}},
        {"Z-REML", {"#ff7f0e", "6,3", 1.5}}, {"Z-MP", {"#2ca02c", "6,3", 1.5}},
        {"Z-J", {"#d62728", "6,3", 1.5}},    {"Z-KDB", {"#9467bd", "6,3", 2.0}},
        {"HKSJ", {"#bcbd22", "", 1.5}},      {"HKSJ-KDB", {"#bcbd22", "2,2", 2.0}},
        {"SSW-KDB", {"#8c564b", "", 2.5}},   {"SSW/KDB", {"#9467bd", "", 2.0}},
        {"SSW/MP", {"#2ca02c", "6,3", 2.0}},
    };
    if (auto it = styles.find(estimator); it != styles.end()) return it->second;
    return {"#000000", "1,3", 1.0};
}

std::optional<double> reference_line(std::string_view metric) {
    if (metric.ends_with("coverage")) return 0.95;
    if (metric.ends_with("bias")) return 0.0;
    if (metric == "mse_ratio") return 1.0;
    return std::nullopt;
}

const std::vector<int>& family_levels(SizeFamily f) {
    static const std::vector<int> a{20, 40, 100, 250};
    static const std::vector<int> b{30, 50, 60, 70};
    static const std::vector<int> u{30, 60, 100, 160};
    switch (f) {
        case SizeFamily::equal_a: return a;
        case SizeFamily::equal_b: return b;
        case SizeFamily::unequal: return u;
    }
    return a;
}

SizePattern family_pattern(SizeFamily f) {
    return f == SizeFamily::unequal ? SizePattern::unequal : SizePattern::equal;
}

std::optional<SizeFamily> family_of(SizePattern pattern, int n) {
    for (auto f : {SizeFamily::equal_a, SizeFamily::equal_b, SizeFamily::unequal}) {
        const auto& levels = family_levels(f);
        if (family_pattern(f) == pattern && std::find(levels.begin(), levels.end(), n) != levels.end()) {
            return f;
        }
    }
    return std::nullopt;
}

bool same(double a, double b) { return std::abs(a - b) <= 1e-9; }

std::string f2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Tick step from {1, 2, 5} x 10^k giving at most ~6 ticks.
double nice_step(double span) {
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) return m * mag;
    }
    return 10.0 * mag;
}

std::string figure_name(std::string_view metric, double delta, double q, SizeFamily family) {
    return std::string(metric) + "_delta" + label(delta) + "_q" + label(q) + "_" +
           std::string(to_string(family)) + ".svg";
}

}  // namespace

std::string_view to_string(SizeFamily f) {
    switch (f) {
        case SizeFamily::equal_a: return "equal-a";
        case SizeFamily::equal_b: return "equal-b";
        case SizeFamily::unequal: return "unequal";
    }
    return "?";
}

std::string render_figure(const std::vector<ResultsRow>& rows, std::string_view metric, double delta,
                          double q, SizeFamily family) {
    const auto& levels = family_levels(family);
    const SizePattern pattern = family_pattern(family);

    // panel (size row, K column) -> estimator -> tau2 -> value
    using Series = std::map<double, double>;
    std::map<std::pair<int, int>, std::map<std::string, Series>> panels;
    std::vector<std::string> estimators;
    std::set<double> xs;
    for (const auto& r : rows) {
        if (r.metric != metric || !same(r.delta, delta) || !same(r.q, q) || r.pattern != pattern) continue;
        const auto row_it = std::find(levels.begin(), levels.end(), r.n_bar);
        const auto col_it = std::find(std::begin(kKs), std::end(kKs), r.k);
        if (row_it == levels.end() || col_it == std::end(kKs)) continue;
        const std::pair<int, int> key{static_cast<int>(row_it - levels.begin()),
                                      static_cast<int>(col_it - std::begin(kKs))};
        panels[key][r.estimator][r.tau2] = r.value;
        if (std::find(estimators.begin(), estimators.end(), r.estimator) == estimators.end()) {
            estimators.push_back(r.estimator);
        }
        xs.insert(r.tau2);
    }

    std::vector<std::string> missing;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        for (std::size_t j = 0; j < std::size(kKs); ++j) {
            if (!panels.count({static_cast<int>(i), static_cast<int>(j)})) {
                missing.push_back((pattern == SizePattern::equal ? "n=" : "nbar=") + std::to_string(levels[i]) +
                                  " K=" + std::to_string(kKs[j]));
            }
        }
    }
    if (!missing.empty()) {
        std::string msg = "figure " + figure_name(metric, delta, q, family) + " is missing " +
                          std::to_string(missing.size()) + " panel(s):";
        for (const auto& m : missing) msg += "\n  " + m;
        throw InputError(msg);
    }

    const auto ref = reference_line(metric);
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -y_lo;
    for (const auto& [key, by_est] : panels) {
        for (const auto& [est, series] : by_est) {
            for (const auto& [x, y] : series) {
                if (!std::isfinite(y)) continue;
                y_lo = std::min(y_lo, y);
                y_hi = std::max(y_hi, y);
            }
        }
    }
    if (ref) {
        y_lo = std::min(y_lo, *ref);
        y_hi = std::max(y_hi, *ref);
    }
    if (!std::isfinite(y_lo)) {
        y_lo = 0.0;
        y_hi = 1.0;
    }
    if (y_hi - y_lo < 1e-9) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    const double step = nice_step(y_hi - y_lo);
    y_lo = std::floor(y_lo / step) * step;
    y_hi = std::ceil(y_hi / step) * step;
    const double x_lo = *xs.begin();
    const double x_hi = xs.size() > 1 ? *xs.rbegin() : x_lo + 1.0;

    const double width = kLeft + 3 * (kPanelW + kGapX) + kLegendW;
    const double height = kTop + static_cast<double>(levels.size()) * (kPanelH + kGapY) + 20.0;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f2(width) << "\" height=\"" << f2(height)
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << f2(width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << xml_escape(metric) << ", delta = " << label(delta) << ", q = " << label(q) << ", "
        << to_string(family) << " sizes</text>\n";

    for (std::size_t i = 0; i < levels.size(); ++i) {
        for (std::size_t j = 0; j < std::size(kKs); ++j) {
            const double px = kLeft + static_cast<double>(j) * (kPanelW + kGapX);
            const double py = kTop + static_cast<double>(i) * (kPanelH + kGapY);
            auto sx = [&](double x) { return px + (x - x_lo) / (x_hi - x_lo) * kPanelW; };
            auto sy = [&](double y) { return py + kPanelH - (y - y_lo) / (y_hi - y_lo) * kPanelH; };

            svg << "<g>\n";
            svg << "<text x=\"" << f2(px + kPanelW / 2) << "\" y=\"" << f2(py - 8)
                << "\" text-anchor=\"middle\">" << (pattern == SizePattern::equal ? "n = " : "nbar = ")
                << levels[i] << ", K = " << kKs[j] << "</text>\n";
            svg << "<rect x=\"" << f2(px) << "\" y=\"" << f2(py) << "\" width=\"" << f2(kPanelW)
                << "\" height=\"" << f2(kPanelH) << "\" fill=\"none\" stroke=\"#444\"/>\n";
            for (double t = y_lo; t <= y_hi + step * 1e-6; t += step) {
                svg << "<line x1=\"" << f2(px - 4) << "\" y1=\"" << f2(sy(t)) << "\" x2=\"" << f2(px)
                    << "\" y2=\"" << f2(sy(t)) << "\" stroke=\"#444\"/>\n";
                svg << "<text x=\"" << f2(px - 6) << "\" y=\"" << f2(sy(t) + 4) << "\" text-anchor=\"end\">"
                    << label(std::abs(t) < step * 1e-6 ? 0.0 : t) << "</text>\n";
            }
            for (double x : xs) {
                svg << "<line x1=\"" << f2(sx(x)) << "\" y1=\"" << f2(py + kPanelH) << "\" x2=\"" << f2(sx(x))
                    << "\" y2=\"" << f2(py + kPanelH + 4) << "\" stroke=\"#444\"/>\n";
                svg << "<text x=\"" << f2(sx(x)) << "\" y=\"" << f2(py + kPanelH + 16)
                    << "\" text-anchor=\"middle\">" << label(x) << "</text>\n";
            }
            if (ref) {
                svg << "<line class=\"reference\" x1=\"" << f2(px) << "\" y1=\"" << f2(sy(*ref)) << "\" x2=\""
                    << f2(px + kPanelW) << "\" y2=\"" << f2(sy(*ref))
                    << "\" stroke=\"#000\" stroke-dasharray=\"1,3\" data-value=\"" << label(*ref) << "\"/>\n";
            }
            const auto& by_est = panels.at({static_cast<int>(i), static_cast<int>(j)});
            for (const auto& est : estimators) {
                auto it = by_est.find(est);
                if (it == by_est.end()) continue;
                const LineStyle st = style_for(est);
                svg << "<polyline fill=\"none\" stroke=\"" << st.color << "\" stroke-width=\"" << f2(st.width)
                    << "\"";
                if (*st.dash) svg << " stroke-dasharray=\"" << st.dash << "\"";
                svg << " data-estimator=\"" << xml_escape(est) << "\" points=\"";
                bool first = true;
                for (const auto& [x, y] : it->second) {
                    if (!std::isfinite(y)) continue;
                    svg << (first ? "" : " ") << f2(sx(x)) << ',' << f2(sy(y));
                    first = false;
                }
                svg << "\"/>\n";
            }
            svg << "</g>\n";
        }
    }
    svg << "<text x=\"" << f2(kLeft + 1.5 * (kPanelW + kGapX)) << "\" y=\"" << f2(height - 6)
        << "\" text-anchor=\"middle\">tau^2</text>\n";

    const double lx = kLeft + 3 * (kPanelW + kGapX);
    double ly = kTop + 10;
    for (const auto& est : estimators) {
        const LineStyle st = style_for(est);
        svg << "<line x1=\"" << f2(lx) << "\" y1=\"" << f2(ly) << "\" x2=\"" << f2(lx + 30) << "\" y2=\""
            << f2(ly) << "\" stroke=\"" << st.color << "\" stroke-width=\"" << f2(st.width) << "\"";
        if (*st.dash) svg << " stroke-dasharray=\"" << st.dash << "\"";
        svg << "/>\n<text x=\"" << f2(lx + 36) << "\" y=\"" << f2(ly + 4) << "\">" << xml_escape(est)
            << "</text>\n";
        ly += 18;
    }
    svg << "</svg>\n";
    return svg.str();
}

int cmd_plot(const PlotRequest& request, std::ostream& out, std::ostream& err) {
    try {
        if (request.metric.empty()) throw InputError("--metric is required");
        std::ifstream f(request.input);
        if (!f) throw InputError("cannot open '" + request.input + "'");
        const auto rows = read_results_csv(f);

        std::vector<std::tuple<double, double, SizeFamily>> figures;
        if (request.all) {
            std::set<std::tuple<double, double, int>> seen;
            for (const auto& r : rows) {
                if (r.metric != request.metric) continue;
                if (auto fam = family_of(r.pattern, r.n_bar)) {
                    if (seen.insert({r.delta, r.q, static_cast<int>(*fam)}).second) {
                        figures.emplace_back(r.delta, r.q, *fam);
                    }
                }
            }
            if (figures.empty()) throw InputError("no rows for metric '" + request.metric + "'");
        } else {
            figures.emplace_back(request.delta, request.q, request.family);
        }

        std::vector<std::pair<std::string, std::string>> rendered;
        std::string problems;
        for (const auto& [delta, q, family] : figures) {
            try {
                rendered.emplace_back(figure_name(request.metric, delta, q, family),
                                      render_figure(rows, request.metric, delta, q, family));
            } catch (const InputError& e) {
                problems += std::string(e.what()) + '\n';
            }
        }
        if (!problems.empty()) {
            err << "error: " << problems;
            return kExitInput;
        }
        std::filesystem::create_directories(request.out_dir);
        for (const auto& [name, content] : rendered) {
            const auto path = (std::filesystem::path(request.out_dir) / name).string();
            write_file_atomically(path, content);
            out << path << '\n';
        }
        return kExitOk;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

}  // namespace smdmeta::cli
