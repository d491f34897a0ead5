#pragma once

// Parallel Monte Carlo over independent trajectories. Trajectory k always uses
// RandomStream(seed, k) and writes its result into slot k, so the output does
// not depend on the number of workers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

#include "qtraj/trajectory.hpp"

namespace qtraj {

inline unsigned resolve_workers(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(k) for k in [0, n) on up to `workers` threads and collects the
/// results in index order.
template <class Fn>
auto parallel_map(std::size_t n, unsigned workers, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
    using R = std::invoke_result_t<Fn&, std::size_t>;
    std::vector<R> out(n);
    const unsigned w = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(n, 1)));
    if (w <= 1) {
        for (std::size_t k = 0; k < n; ++k) out[k] = fn(k);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(w);
        for (unsigned i = 0; i < w; ++i) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < n; k = next++) {
                    try {
                        out[k] = fn(k);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                        next = n;
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

/// Compact per-trajectory result kept by ensemble runs.
struct TrajectorySummary {
    int initial_label = 0;
    std::optional<int> outcome;
    BlochState final_state;
    double work = 0.0;           ///< sum of dW (= P_W for m = 1)
    double feedback_work = 0.0;  ///< sum of dWF
    double heat = 0.0;           ///< sum of dQ
    double first_law_residual = 0.0;
    std::vector<double> excited;  ///< P_e at t = 0, dt, ..., tau
    std::vector<double> dWF;      ///< per-step increments, only when requested
    std::vector<double> dQ;
};

inline TrajectorySummary summarize(const TrajectoryRecord& rec, bool keep_increments) {
    TrajectorySummary s;
    s.initial_label = rec.initial_label;
    s.outcome = rec.final_outcome;
    s.final_state = rec.final_state();
    s.excited.reserve(rec.size() + 1);
    s.excited.push_back(excited_population(rec.initial_state));
    for (const auto& st : rec.states) s.excited.push_back(excited_population(st));
    double total = 0.0;
    for (const auto& l : rec.ledgers) {
        s.work += l.dW;
        s.feedback_work += l.dWF;
        s.heat += l.dQ;
        total += l.dW + l.dWF + l.dQ;
    }
    s.first_law_residual =
        std::abs(excited_population(s.final_state) - excited_population(rec.initial_state) - total);
    if (keep_increments) {
        s.dWF.reserve(rec.size());
        s.dQ.reserve(rec.size());
        for (const auto& l : rec.ledgers) {
            s.dWF.push_back(l.dWF);
            s.dQ.push_back(l.dQ);
        }
    }
    return s;
}

struct EnsembleRun {
    SimConfig config;
    FeedbackConfig feedback;
    std::vector<double> times;  ///< 0, dt, ..., tau
    std::vector<TrajectorySummary> trajectories;

    std::size_t size() const { return trajectories.size(); }
};

struct EnsembleOptions {
    unsigned workers = 1;
    /// Per-step dWF/dQ are kept for the first this-many trajectories.
    std::size_t keep_increments = 0;
};

inline EnsembleRun run_ensemble(const SimConfig& cfg, const FeedbackConfig& fb, std::size_t n_traj,
                                const EnsembleOptions& opt = {}) {
    cfg.validate();
    EnsembleRun run{cfg, fb, {}, {}};
    const std::size_t steps = cfg.steps();
    run.times.reserve(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) run.times.push_back(static_cast<double>(i) * cfg.dt);
    run.trajectories = parallel_map(n_traj, opt.workers, [&](std::size_t k) {
        RandomStream rng(cfg.seed, k);
        return summarize(simulate_trajectory(cfg, fb, rng), k < opt.keep_increments);
    });
    return run;
}

}  // namespace qtraj
