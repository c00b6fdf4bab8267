#include <ostream>
#include <sstream>

#include "smdmeta/cli.hpp"
#include "smdmeta/errors.hpp"

namespace smdmeta::cli {
namespace {

std::size_t excluded_evaluations(const std::vector<CellReport>& reports) {
    std::size_t total = 0;
    for (const auto& r : reports) {
        for (const auto& m : r.tau2_bias) total += m.failed;
        for (const auto& m : r.tau2_coverage) total += m.failed;
        for (const auto& m : r.effect_coverage) total += m.failed;
    }
    return total;
}

}  // namespace

int cmd_simulate(const SimulateRequest& request, std::ostream& out, std::ostream& err) {
    try {
        if (request.threads < 1) throw InputError("--threads must be at least 1");
        const auto cells = expand_grid(request.grid);
        const auto reports = run_grid(cells, request.threads);

        std::ostringstream csv;
        write_results_csv(csv, reports);
        if (request.out.empty()) {
            out << csv.str();
        } else {
            write_file_atomically(request.out, csv.str());
        }

        if (const auto failed = excluded_evaluations(reports); failed > 0) {
            err << failed << " estimator evaluations were excluded for non-convergence"
                << " (see the *_failed rows)\n";
        }
        return kExitOk;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const InvariantError& e) {
        err << "invalid configuration: " << e.what() << '\n';
        return kExitInvariant;
    }
}

}  // namespace smdmeta::cli
