#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "smdmeta/cli.hpp"
#include "smdmeta/errors.hpp"

namespace smdmeta::cli {
namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record; double-quoted fields may contain commas and "".
std::vector<std::string> split_record(const std::string& line, std::size_t row) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw InputError("row " + std::to_string(row) + ": unterminated quoted field");
    fields.push_back(trim(cur));
    return fields;
}

std::string where(std::size_t row, std::string_view column) {
    return "row " + std::to_string(row) + ", column " + std::string(column);
}

double parse_real(const std::string& text, std::size_t row, std::string_view column) {
    if (text.empty()) throw InputError(where(row, column) + ": empty value");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE) {
        throw InputError(where(row, column) + ": '" + text + "' is not a number");
    }
    return v;
}

long long parse_integer(const std::string& text, std::size_t row, std::string_view column) {
    if (text.empty()) throw InputError(where(row, column) + ": empty value");
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (end != text.c_str() + text.size() || errno == ERANGE) {
        throw InputError(where(row, column) + ": '" + text + "' is not an integer");
    }
    return v;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

const std::vector<std::string> kRawColumns{"mean_t", "sd_t", "mean_c", "sd_c"};
const std::vector<std::string> kPrecomputedColumns{"g", "var_g"};

// How a data row reports its study: the four arm summaries, the precomputed
// pair, or both (cross-checked).
enum class RowStyle { raw, precomputed };

}  // namespace

MetaInput read_meta_csv(std::istream& in) {
    std::string line;
    std::size_t row = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        header = split_record(line, row);
    }
    if (header.empty()) throw InputError("input is empty: expected a header row");

    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto& name = header[i];
        const bool known = name == "study_id" || name == "n_t" || name == "n_c" ||
                           std::count(kRawColumns.begin(), kRawColumns.end(), name) ||
                           std::count(kPrecomputedColumns.begin(), kPrecomputedColumns.end(), name);
        if (!known) throw InputError(where(row, std::to_string(i + 1)) + ": unknown column '" + name + "'");
        if (!col.emplace(name, i).second) {
            throw InputError(where(row, name) + ": duplicate column");
        }
    }
    for (const char* required : {"study_id", "n_t", "n_c"}) {
        if (!col.count(required)) throw InputError(std::string("missing required column '") + required + "'");
    }
    auto has_all = [&](const std::vector<std::string>& names) {
        return std::all_of(names.begin(), names.end(), [&](const auto& n) { return col.count(n) > 0; });
    };
    const bool raw_columns = has_all(kRawColumns);
    const bool pre_columns = has_all(kPrecomputedColumns);
    if (!raw_columns && !pre_columns) {
        throw InputError("need either mean_t, sd_t, mean_c, sd_c or g, var_g columns");
    }

    std::vector<Study> studies;
    std::optional<RowStyle> file_style;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_record(line, row);
        if (fields.size() != header.size()) {
            throw InputError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(fields.size()));
        }
        auto field = [&](const std::string& name) -> const std::string& { return fields[col.at(name)]; };
        auto filled = [&](const std::vector<std::string>& names, bool present) {
            if (!present) return std::size_t{0};
            return static_cast<std::size_t>(std::count_if(
                names.begin(), names.end(), [&](const auto& n) { return !field(n).empty(); }));
        };
        const std::size_t raw_count = filled(kRawColumns, raw_columns);
        const std::size_t pre_count = filled(kPrecomputedColumns, pre_columns);
        if (raw_count != 0 && raw_count != kRawColumns.size()) {
            throw InputError("row " + std::to_string(row) + ": incomplete arm summaries");
        }
        if (pre_count != 0 && pre_count != kPrecomputedColumns.size()) {
            throw InputError("row " + std::to_string(row) + ": g and var_g must both be given");
        }
        if (raw_count == 0 && pre_count == 0) {
            throw InputError("row " + std::to_string(row) + ": no effect data");
        }
        const RowStyle style = raw_count ? RowStyle::raw : RowStyle::precomputed;
        if (file_style && *file_style != style) {
            throw InputError("row " + std::to_string(row) +
                             ": mixes arm summaries and precomputed g across rows");
        }
        file_style = style;

        const long long n_t = parse_integer(field("n_t"), row, "n_t");
        const long long n_c = parse_integer(field("n_c"), row, "n_c");
        if (n_t < 2 || n_c < 2) {
            throw InvariantError("row " + std::to_string(row) + ": each arm needs at least 2 subjects");
        }
        if (n_t > 100000000 || n_c > 100000000) {
            throw InputError("row " + std::to_string(row) + ": arm size out of range");
        }
        const int nt = static_cast<int>(n_t);
        const int nc = static_cast<int>(n_c);

        try {
            if (style == RowStyle::raw) {
                const ArmSummary t{nt, parse_real(field("mean_t"), row, "mean_t"),
                                   parse_real(field("sd_t"), row, "sd_t")};
                const ArmSummary c{nc, parse_real(field("mean_c"), row, "mean_c"),
                                   parse_real(field("sd_c"), row, "sd_c")};
                Study s = hedges_g(t, c);
                if (pre_count) {
                    const double g = parse_real(field("g"), row, "g");
                    const double v = parse_real(field("var_g"), row, "var_g");
                    if (std::abs(g - s.g()) > 1e-6 || std::abs(v - s.v2()) > 1e-6) {
                        throw InputError("row " + std::to_string(row) +
                                         ": g/var_g disagree with the arm summaries (expected g=" +
                                         fmt(s.g()) + ", var_g=" + fmt(s.v2()) + ")");
                    }
                }
                studies.push_back(s);
            } else {
                studies.emplace_back(nt, nc, parse_real(field("g"), row, "g"),
                                     parse_real(field("var_g"), row, "var_g"));
            }
        } catch (const InvariantError& e) {
            throw InvariantError("row " + std::to_string(row) + ": " + e.what());
        }
    }
    return MetaInput(std::move(studies));
}

std::vector<ResultsRow> results_rows(const CellReport& report) {
    std::vector<ResultsRow> rows;
    const SimCell& c = report.cell;
    auto add = [&](std::string_view estimator, std::string_view metric, double value, double se) {
        rows.push_back({c.delta, c.tau2, c.k, c.pattern, c.n, c.q, std::string(estimator),
                        std::string(metric), value, se, c.reps, c.seed});
    };
    auto add_metric = [&](std::string_view estimator, std::string_view metric, const Metric& m) {
        add(estimator, metric, m.value, m.mc_se);
    };
    auto add_failed = [&](std::string_view estimator, std::string_view metric, const Metric& m) {
        add(estimator, metric, static_cast<double>(m.failed), 0.0);
    };

    for (std::size_t i = 0; i < kNumTau2; ++i) {
        const auto name = to_string(kTau2Methods[i]);
        add_metric(name, "tau2_bias", report.tau2_bias[i]);
        add_metric(name, "tau2_truncation", report.tau2_truncation[i]);
        add_failed(name, "tau2_failed", report.tau2_bias[i]);
    }
    for (std::size_t i = 0; i < kNumTau2Ci; ++i) {
        const auto name = to_string(kTau2IntervalMethods[i]);
        add_metric(name, "tau2_coverage", report.tau2_coverage[i]);
        add_failed(name, "tau2_ci_failed", report.tau2_coverage[i]);
    }
    for (std::size_t i = 0; i < kNumEffect; ++i) {
        const auto name = to_string(kEffectEstimators[i]);
        add_metric(name, "effect_bias", report.effect_bias[i]);
        add_metric(name, "effect_mse", report.effect_mse[i]);
        add_failed(name, "effect_failed", report.effect_bias[i]);
    }
    for (std::size_t i = 0; i < kNumEffectCi; ++i) {
        const auto name = to_string(kEffectIntervalMethods[i]);
        add_metric(name, "effect_coverage", report.effect_coverage[i]);
        add_metric(name, "effect_degenerate", report.effect_degenerate[i]);
        add_failed(name, "effect_ci_failed", report.effect_coverage[i]);
    }
    add_metric("SSW/KDB", "mse_ratio", report.mse_ratio_ssw_kdb);
    add_metric("SSW/MP", "mse_ratio", report.mse_ratio_ssw_mp);
    return rows;
}

void write_results_csv(std::ostream& out, const std::vector<CellReport>& reports) {
    out << kResultsHeader << '\n';
    for (const auto& report : reports) {
        for (const auto& r : results_rows(report)) {
            out << fmt(r.delta) << ',' << fmt(r.tau2) << ',' << r.k << ',' << to_string(r.pattern) << ','
                << r.n_bar << ',' << fmt(r.q) << ',' << r.estimator << ',' << r.metric << ','
                << fmt(r.value) << ',' << fmt(r.mc_se) << ',' << r.reps << ',' << r.seed << '\n';
        }
    }
}

std::vector<ResultsRow> read_results_csv(std::istream& in) {
    std::string line;
    std::size_t row = 0;
    std::vector<ResultsRow> rows;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        if (!seen_header) {
            if (trim(line) != kResultsHeader) {
                throw InputError("row " + std::to_string(row) + ": expected header '" +
                                 std::string(kResultsHeader) + "'");
            }
            seen_header = true;
            continue;
        }
        const auto f = split_record(line, row);
        if (f.size() != 12) {
            throw InputError("row " + std::to_string(row) + ": expected 12 fields, got " +
                             std::to_string(f.size()));
        }
        ResultsRow r;
        r.delta = parse_real(f[0], row, "delta");
        r.tau2 = parse_real(f[1], row, "tau2");
        r.k = static_cast<int>(parse_integer(f[2], row, "k"));
        if (f[3] == "equal") {
            r.pattern = SizePattern::equal;
        } else if (f[3] == "unequal") {
            r.pattern = SizePattern::unequal;
        } else {
            throw InputError(where(row, "pattern") + ": expected 'equal' or 'unequal'");
        }
        r.n_bar = static_cast<int>(parse_integer(f[4], row, "n_bar"));
        r.q = parse_real(f[5], row, "q");
        r.estimator = f[6];
        r.metric = f[7];
        r.value = parse_real(f[8], row, "value");
        r.mc_se = parse_real(f[9], row, "mc_se");
        r.reps = static_cast<int>(parse_integer(f[10], row, "reps"));
        r.seed = static_cast<std::uint64_t>(std::strtoull(f[11].c_str(), nullptr, 10));
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_file_atomically(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".partial";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw InputError("cannot open '" + tmp.string() + "' for writing");
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) {
            f.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw InputError("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw InputError("cannot rename output into '" + path + "'");
    }
}

}  // namespace smdmeta::cli
