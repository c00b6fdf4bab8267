#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "smdmeta/simlab.hpp"

namespace smdmeta {
namespace {

// Cells in flight at once; bounds the per-replicate storage.
constexpr std::size_t kBatchCells = 32;

struct Task {
    std::size_t cell;
    std::size_t first;
    std::size_t last;
};

}  // namespace

CellReport run_cell(const SimCell& cell, int threads) {
    return run_grid({cell}, threads).front();
}

std::vector<CellReport> run_grid(const std::vector<SimCell>& cells, int threads) {
    const auto workers = static_cast<std::size_t>(std::max(threads, 1));
    std::vector<CellReport> reports;
    reports.reserve(cells.size());

    for (std::size_t begin = 0; begin < cells.size(); begin += kBatchCells) {
        const std::size_t end = std::min(cells.size(), begin + kBatchCells);

        // Every replicate owns a slot, so the reduction below sees the same
        // values in the same order whatever the chunking or thread count.
        std::vector<std::vector<ReplicateOutcome>> slots;
        std::vector<std::vector<ArmSizes>> sizes;
        std::vector<Task> tasks;
        for (std::size_t c = begin; c < end; ++c) {
            const auto& cell = cells[c];
            slots.emplace_back(static_cast<std::size_t>(cell.reps));
            sizes.push_back(study_sizes(cell));
            const auto per_chunk = static_cast<std::size_t>(cell.reps / cell.chunks);
            for (int chunk = 0; chunk < cell.chunks; ++chunk) {
                const std::size_t first = per_chunk * static_cast<std::size_t>(chunk);
                tasks.push_back({c - begin, first, first + per_chunk});
            }
        }

        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto work = [&] {
            try {
                for (std::size_t t = next++; t < tasks.size(); t = next++) {
                    const auto& task = tasks[t];
                    const auto& cell = cells[begin + task.cell];
                    for (std::size_t r = task.first; r < task.last; ++r) {
                        const auto input = draw_meta_sample(cell, sizes[task.cell], r);
                        slots[task.cell][r] = evaluate_replicate(input, cell.delta, cell.tau2);
                    }
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = tasks.size();
            }
        };

        if (workers == 1) {
            work();
        } else {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < std::min(workers, tasks.size()); ++w) pool.emplace_back(work);
        }
        if (failure) std::rethrow_exception(failure);

        for (std::size_t c = begin; c < end; ++c) {
            reports.push_back(summarize(cells[c], slots[c - begin]));
        }
    }
    return reports;
}

}  // namespace smdmeta
