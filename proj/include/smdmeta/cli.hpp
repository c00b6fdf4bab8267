#pragma once

// Command-line surface. Every command is callable in-process with explicit
// output streams so tests can drive it without spawning a shell.

#include <cstdint>
#include <iosfwd>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smdmeta/simlab.hpp"

namespace smdmeta::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 2,
    kExitInvariant = 3,
    kExitNonConvergence = 4,
};

enum class OutputFormat { text, json };

struct AnalysisRequest {
    std::string input;  // CSV path, "-" for stdin
    std::vector<Tau2Method> tau2_methods{std::begin(kTau2Methods), std::end(kTau2Methods)};
    std::vector<Tau2IntervalMethod> tau2_intervals{std::begin(kTau2IntervalMethods),
                                                   std::end(kTau2IntervalMethods)};
    std::vector<EffectIntervalMethod> effect_intervals{std::begin(kEffectIntervalMethods),
                                                       std::end(kEffectIntervalMethods)};
    double level = 0.95;
    OutputFormat format = OutputFormat::text;
};

/// Reads the analysis CSV: study_id, n_t, n_c and either mean_t, sd_t,
/// mean_c, sd_c or g, var_g. Throws InputError (with row and column) for
/// malformed content, InvariantError for impossible data such as n < 2.
MetaInput read_meta_csv(std::istream& in);

int cmd_analyze(const AnalysisRequest& request, std::ostream& out, std::ostream& err);

struct SimulateRequest {
    GridConfig grid = full_grid();
    int threads = 1;
    std::string out;  // empty writes to the output stream
};

inline constexpr std::string_view kResultsHeader =
    "delta,tau2,k,pattern,n_bar,q,estimator,metric,value,mc_se,reps,seed";

struct ResultsRow {
    double delta = 0.0;
    double tau2 = 0.0;
    int k = 0;
    SizePattern pattern = SizePattern::equal;
    int n_bar = 0;
    double q = 0.0;
    std::string estimator;
    std::string metric;
    double value = 0.0;
    double mc_se = 0.0;
    int reps = 0;
    std::uint64_t seed = 0;
};

std::vector<ResultsRow> results_rows(const CellReport& report);
void write_results_csv(std::ostream& out, const std::vector<CellReport>& reports);
std::vector<ResultsRow> read_results_csv(std::istream& in);

int cmd_simulate(const SimulateRequest& request, std::ostream& out, std::ostream& err);

/// Sample-size families that share one figure: two equal-size sets and the
/// unequal set, four levels each.
enum class SizeFamily { equal_a, equal_b, unequal };
std::string_view to_string(SizeFamily f);

struct PlotRequest {
    std::string input;
    std::string metric;
    std::string out_dir = ".";
    // A single figure, or every figure the results cover when `all` is set.
    double delta = 0.0;
    double q = 0.5;
    SizeFamily family = SizeFamily::equal_a;
    bool all = false;
};

/// Renders one 4 x 3 panel figure as SVG. Throws InputError listing missing
/// panels when the rows do not cover all twelve.
std::string render_figure(const std::vector<ResultsRow>& rows, std::string_view metric,
                          double delta, double q, SizeFamily family);

int cmd_plot(const PlotRequest& request, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a command.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Writes `content` to `path` through a sibling temporary file and rename.
void write_file_atomically(const std::string& path, std::string_view content);

}  // namespace smdmeta::cli
