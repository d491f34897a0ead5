#pragma once

#include <vector>

#include "qtraj/ensemble.hpp"
#include "qtraj/feedback.hpp"
#include "qtraj/thermo.hpp"

namespace qtraj {

/// Rabi contrast of the ground-start ensemble P00(t).
inline double ensemble_contrast(const EnsembleRun& run, double t_lo = 2.0, double t_hi = 8.0) {
    const auto p00 = population_series(run, 0);
    return rabi_contrast(run.times, p00.mean, run.config.omega_r, t_lo, t_hi);
}

struct ContrastMap {
    std::vector<double> gains;
    std::vector<double> offsets;
    std::vector<std::vector<double>> contrast;  ///< contrast[offset index][gain index]
    std::size_t best_gain = 0;
    std::size_t best_offset = 0;

    double best_contrast() const { return contrast[best_offset][best_gain]; }
};

/// Phase-locked feedback contrast over a gain/offset grid. Every grid point
/// uses the same seed, so differences between cells are not seed noise.
inline ContrastMap sweep_gain_offset(const std::vector<double>& gains, const std::vector<double>& offsets,
                                     const SimConfig& cfg, FeedbackConfig fb, std::size_t n_traj,
                                     unsigned workers = 1) {
    if (gains.empty() || offsets.empty()) throw StatsError("sweep ranges must be non-empty");
    ContrastMap map{gains, offsets, {}, 0, 0};
    fb.mode = FeedbackMode::phase_locked;
    double best = -1.0;
    for (std::size_t b = 0; b < offsets.size(); ++b) {
        std::vector<double> row;
        for (std::size_t a = 0; a < gains.size(); ++a) {
            fb.gain = gains[a];
            fb.offset = offsets[b];
            const double c = ensemble_contrast(run_ensemble(cfg, fb, n_traj, {workers, 0}), 2.0, cfg.tau);
            row.push_back(c);
            if (c > best) {
                best = c;
                map.best_gain = a;
                map.best_offset = b;
            }
        }
        map.contrast.push_back(std::move(row));
    }
    return map;
}

}  // namespace qtraj
