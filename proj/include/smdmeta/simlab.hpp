#pragma once

// Monte-Carlo engine: parameter grid, exact data generation, replication in
// deterministic chunks, and bias / coverage / MSE summaries.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "smdmeta/effect.hpp"

namespace smdmeta {

enum class SizePattern { equal, unequal };
std::string_view to_string(SizePattern p);

struct SimCell {
    double delta = 0.0;
    double tau2 = 0.0;
    int k = 5;
    SizePattern pattern = SizePattern::equal;
    int n = 20;  // study size, or the average size for the unequal pattern
    double q = 0.5;
    int reps = 2000;
    int chunks = 10;
    std::uint64_t seed = 1;
};

struct GridConfig {
    std::vector<double> deltas;
    std::vector<double> tau2s;
    std::vector<int> ks;
    std::vector<int> equal_ns;
    std::vector<int> unequal_nbars;
    std::vector<double> qs;
    int reps = 2000;
    int chunks = 10;
    std::uint64_t seed = 1;
    bool allow_custom = false;
};

/// The complete published design (2160 cells).
GridConfig full_grid();

/// Parses "0(0.5)2.5" (start, step, stop) or a comma list "0,0.5,1".
std::vector<double> parse_levels(std::string_view text);

/// Cartesian product ordered by delta, tau2, k, pattern/size, q.
/// Throws InputError naming the first offending field.
std::vector<SimCell> expand_grid(const GridConfig& config);

/// Arm sizes (n_t, n_c) of the K studies in a cell, n_t = ceil((1-q) n).
std::vector<ArmSizes> study_sizes(const SimCell& cell);

inline constexpr std::size_t kNumTau2 = std::size(kTau2Methods);
inline constexpr std::size_t kNumTau2Ci = std::size(kTau2IntervalMethods);
inline constexpr std::size_t kNumEffect = std::size(kEffectEstimators);
inline constexpr std::size_t kNumEffectCi = std::size(kEffectIntervalMethods);

/// Everything one simulated meta-analysis contributes to a cell's metrics.
/// Failed estimators carry ok = false and are excluded from the summaries.
struct ReplicateOutcome {
    std::array<double, kNumTau2> tau2{};
    std::array<bool, kNumTau2> tau2_ok{};
    std::array<bool, kNumTau2> tau2_truncated{};
    std::array<bool, kNumTau2Ci> tau2_cover{};
    std::array<bool, kNumTau2Ci> tau2_ci_ok{};
    std::array<double, kNumEffect> effect{};
    std::array<bool, kNumEffect> effect_ok{};
    std::array<bool, kNumEffectCi> effect_cover{};
    std::array<bool, kNumEffectCi> effect_ci_ok{};
    std::array<bool, kNumEffectCi> effect_degenerate{};
};

/// Runs every estimator on one meta-sample and scores it against the truth.
ReplicateOutcome evaluate_replicate(const MetaInput& input, double true_delta, double true_tau2,
                                    double level = 0.95);

/// Draws the meta-sample of replicate `rep` in `cell`.
MetaInput draw_meta_sample(const SimCell& cell, std::span<const ArmSizes> sizes, std::size_t rep);

/// Stream id for replicate `rep` of a cell; depends only on the cell's
/// coordinates, never on its grid position or chunking.
std::uint64_t replicate_stream_id(const SimCell& cell, std::size_t rep);

struct Metric {
    double value = 0.0;
    double mc_se = 0.0;
    std::size_t used = 0;    // replicates that entered the estimate
    std::size_t failed = 0;  // replicates excluded for non-convergence
};

struct CellReport {
    SimCell cell;
    std::array<Metric, kNumTau2> tau2_bias{};
    std::array<Metric, kNumTau2> tau2_truncation{};
    std::array<Metric, kNumTau2Ci> tau2_coverage{};
    std::array<Metric, kNumEffect> effect_bias{};
    std::array<Metric, kNumEffect> effect_mse{};
    std::array<Metric, kNumEffectCi> effect_coverage{};
    std::array<Metric, kNumEffectCi> effect_degenerate{};
    Metric mse_ratio_ssw_kdb;
    Metric mse_ratio_ssw_mp;
};

/// Summaries over aligned per-replicate values; `ok` masks excluded entries.
Metric bias_metric(std::span<const double> estimates, std::span<const bool> ok, double truth);
Metric mse_metric(std::span<const double> estimates, std::span<const bool> ok, double truth);
Metric proportion_metric(std::span<const bool> hits, std::span<const bool> ok);
Metric mse_ratio_metric(std::span<const double> numerator, std::span<const double> denominator,
                        std::span<const bool> ok, double truth);

CellReport summarize(const SimCell& cell, std::span<const ReplicateOutcome> outcomes);

CellReport run_cell(const SimCell& cell, int threads = 1);

/// Runs many cells, sharing `threads` workers across all (cell, chunk) tasks.
std::vector<CellReport> run_grid(const std::vector<SimCell>& cells, int threads = 1);

}  // namespace smdmeta
