#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <string>

#include "smdmeta/errors.hpp"
#include "smdmeta/simlab.hpp"

namespace smdmeta {
namespace {

const std::vector<double> kDesignDeltas{0.0, 0.2, 0.5, 1.0, 2.0};
const std::vector<double> kDesignTau2s{0.0, 0.5, 1.0, 1.5, 2.0, 2.5};
const std::vector<int> kDesignKs{5, 10, 30};
const std::vector<int> kDesignEqualNs{20, 40, 100, 250, 30, 50, 60, 70};
const std::vector<int> kDesignUnequalNbars{30, 60, 100, 160};
const std::vector<double> kDesignQs{0.5, 0.75};

// Unequal study-size sets, each used K/5 times.
std::vector<int> unequal_set(int nbar) {
    switch (nbar) {
        case 30: return {12, 16, 18, 20, 84};
        case 60: return {24, 32, 36, 40, 168};
        case 100: return {64, 72, 76, 80, 208};
        case 160: return {124, 132, 136, 140, 268};
        default: break;
    }
    throw InputError("no unequal study-size set for average size " + std::to_string(nbar));
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-9; }

template <class T>
bool listed(const std::vector<T>& allowed, T value) {
    return std::any_of(allowed.begin(), allowed.end(),
                       [&](T a) { return near(static_cast<double>(a), static_cast<double>(value)); });
}

template <class T>
void check_field(const std::vector<T>& values, const std::vector<T>& allowed, bool allow_custom,
                 const char* field) {
    for (T v : values) {
        if (!allow_custom && !listed(allowed, v)) {
            std::ostringstream msg;
            msg << "grid field '" << field << "': value " << v
                << " is not in the published design (use --allow-custom)";
            throw InputError(msg.str());
        }
    }
}

double parse_number(std::string_view text) {
    std::string s(text);
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw InputError("not a number: '" + s + "'");
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string_view to_string(SizePattern p) {
    return p == SizePattern::equal ? "equal" : "unequal";
}

GridConfig full_grid() {
    GridConfig config;
    config.deltas = kDesignDeltas;
    config.tau2s = kDesignTau2s;
    config.ks = kDesignKs;
    config.equal_ns = kDesignEqualNs;
    std::sort(config.equal_ns.begin(), config.equal_ns.end());
    config.unequal_nbars = kDesignUnequalNbars;
    config.qs = kDesignQs;
    return config;
}

std::vector<double> parse_levels(std::string_view text) {
    text = trim(text);
    std::vector<double> out;
    if (const auto open = text.find('('); open != std::string_view::npos) {
        const auto close = text.find(')', open);
        if (close == std::string_view::npos) throw InputError("unbalanced '(' in '" + std::string(text) + "'");
        const double start = parse_number(trim(text.substr(0, open)));
        const double step = parse_number(trim(text.substr(open + 1, close - open - 1)));
        const double stop = parse_number(trim(text.substr(close + 1)));
        if (!(step > 0.0) || stop < start) throw InputError("bad range '" + std::string(text) + "'");
        const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (long i = 0; i < count; ++i) {
            out.push_back(std::round((start + i * step) * 1e12) / 1e12);
        }
        return out;
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto piece = trim(text.substr(pos, comma == std::string_view::npos ? text.size() - pos : comma - pos));
        if (piece.empty()) throw InputError("empty value in list '" + std::string(text) + "'");
        out.push_back(parse_number(piece));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<SimCell> expand_grid(const GridConfig& config) {
    const bool custom = config.allow_custom;
    if (config.deltas.empty()) throw InputError("grid field 'delta': no values");
    if (config.tau2s.empty()) throw InputError("grid field 'tau2': no values");
    if (config.ks.empty()) throw InputError("grid field 'k': no values");
    if (config.qs.empty()) throw InputError("grid field 'q': no values");
    if (config.equal_ns.empty() && config.unequal_nbars.empty()) {
        throw InputError("grid field 'n': no study sizes (give --n or --nbar)");
    }
    check_field(config.deltas, kDesignDeltas, custom, "delta");
    check_field(config.tau2s, kDesignTau2s, custom, "tau2");
    check_field(config.ks, kDesignKs, custom, "k");
    check_field(config.equal_ns, kDesignEqualNs, custom, "n");
    check_field(config.unequal_nbars, kDesignUnequalNbars, false, "nbar");
    check_field(config.qs, kDesignQs, custom, "q");

    for (double t : config.tau2s) {
        if (!(t >= 0.0)) throw InputError("grid field 'tau2': values must be >= 0");
    }
    for (int k : config.ks) {
        if (k < 2) throw InputError("grid field 'k': values must be >= 2");
        if (!config.unequal_nbars.empty() && k % 5 != 0) {
            throw InputError("grid field 'k': unequal study sizes need K divisible by 5");
        }
    }
    for (double q : config.qs) {
        if (!(q > 0.0 && q < 1.0)) throw InputError("grid field 'q': values must lie in (0,1)");
    }
    if (config.reps < 1) throw InputError("grid field 'reps': must be positive");
    if (config.chunks < 1 || config.reps % config.chunks != 0) {
        throw InputError("grid field 'chunks': must divide reps");
    }

    auto sorted = [](auto v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const auto deltas = sorted(config.deltas);
    const auto tau2s = sorted(config.tau2s);
    const auto ks = sorted(config.ks);
    const auto ns = sorted(config.equal_ns);
    const auto nbars = sorted(config.unequal_nbars);
    const auto qs = sorted(config.qs);

    std::vector<SimCell> cells;
    for (double delta : deltas) {
        for (double tau2 : tau2s) {
            for (int k : ks) {
                auto push = [&](SizePattern pattern, int n) {
                    for (double q : qs) {
                        SimCell cell{delta, tau2, k, pattern, n, q, config.reps, config.chunks, config.seed};
                        for (const auto& s : study_sizes(cell)) {
                            if (s.n_t < 2 || s.n_c < 2 || s.n_t + s.n_c < 6) {
                                throw InputError("grid field 'n': size " + std::to_string(n) +
                                                 " leaves an arm with fewer than 2 subjects");
                            }
                        }
                        cells.push_back(cell);
                    }
                };
                for (int n : ns) push(SizePattern::equal, n);
                for (int n : nbars) push(SizePattern::unequal, n);
            }
        }
    }
    return cells;
}

std::vector<ArmSizes> study_sizes(const SimCell& cell) {
    std::vector<int> totals;
    if (cell.pattern == SizePattern::equal) {
        totals.assign(static_cast<std::size_t>(cell.k), cell.n);
    } else {
        if (cell.k % 5 != 0) throw InputError("unequal study sizes need K divisible by 5");
        const auto set = unequal_set(cell.n);
        for (int rep = 0; rep < cell.k / 5; ++rep) totals.insert(totals.end(), set.begin(), set.end());
    }
    std::vector<ArmSizes> sizes;
    sizes.reserve(totals.size());
    for (int n : totals) {
        const int n_t = static_cast<int>(std::ceil((1.0 - cell.q) * n - 1e-9));
        sizes.push_back({n_t, n - n_t});
    }
    return sizes;
}

}  // namespace smdmeta
