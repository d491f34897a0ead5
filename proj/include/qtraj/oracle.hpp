#pragma once

// Deterministic references for the Monte Carlo engine: the unconditional
// (Lindblad) Bloch dynamics and closed-system two-point measurement sampling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "qtraj/bloch.hpp"
#include "qtraj/config.hpp"
#include "qtraj/sme.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj {

struct LindbladSolution {
    std::vector<double> times;
    std::vector<double> x_mean;
    std::vector<double> z_mean;

    std::vector<double> excited() const {
        std::vector<double> pe(z_mean.size());
        std::transform(z_mean.begin(), z_mean.end(), pe.begin(), [](double z) { return 0.5 * (1.0 - z); });
        return pe;
    }
};

/// Integrates dz/dt = W x + gamma (1 - z), dx/dt = -W z - gamma x / 2 with
/// classical RK4, using at most dt/10 per internal step, and reports the
/// solution on t_grid (which must be non-decreasing and start at or after 0).
inline LindbladSolution lindblad_evolve(const BlochState& initial, const SimConfig& cfg,
                                        std::span<const double> t_grid) {
    const double W = cfg.omega_r;
    const double g = cfg.gamma;
    auto rhs = [&](double x, double z, double& dx, double& dz) {
        dx = -W * z - 0.5 * g * x;
        dz = W * x + g * (1.0 - z);
    };
    const double h_max = cfg.dt / 10.0;

    LindbladSolution sol;
    double x = initial.x, z = initial.z, t = 0.0;
    for (double target : t_grid) {
        if (target < t - 1e-12) throw StatsError("lindblad_evolve: time grid must be non-decreasing");
        const double span = target - t;
        const auto n = static_cast<long>(std::ceil(span / h_max - 1e-9));
        if (n > 0) {
            const double h = span / static_cast<double>(n);
            for (long i = 0; i < n; ++i) {
                double k1x, k1z, k2x, k2z, k3x, k3z, k4x, k4z;
                rhs(x, z, k1x, k1z);
                rhs(x + 0.5 * h * k1x, z + 0.5 * h * k1z, k2x, k2z);
                rhs(x + 0.5 * h * k2x, z + 0.5 * h * k2z, k3x, k3z);
                rhs(x + h * k3x, z + h * k3z, k4x, k4z);
                x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
                z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
            }
        }
        t = std::max(t, target);
        sol.times.push_back(target);
        sol.x_mean.push_back(x);
        sol.z_mean.push_back(z);
    }
    return sol;
}

/// One two-point measurement on the closed driven qubit: n ~ Gibbs(beta),
/// m ~ closed_rabi_probabilities(omega, tau)(., n). Returns E_m - E_n.
inline int closed_two_point_sample(double beta, double omega, double tau, RandomStream& rng) {
    const int n = rng.uniform() < gibbs_excited_weight(beta) ? 1 : 0;
    const TransitionMatrix tm = closed_rabi_probabilities(omega, tau);
    const double flip = n == 0 ? tm.p10 : tm.p01;
    const int m = rng.uniform() < flip ? 1 - n : n;
    return m - n;
}

/// max_t |mean - oracle| / stderr. Points with zero standard error count as 0
/// when they match to 1e-12 and as infinity otherwise.
inline double ensemble_vs_oracle(std::span<const double> times, std::span<const double> mean,
                                 std::span<const double> error, std::span<const double> oracle_times,
                                 std::span<const double> oracle_values) {
    if (times.size() != mean.size() || times.size() != error.size() || times.size() != oracle_times.size() ||
        oracle_times.size() != oracle_values.size())
        throw StatsError("ensemble_vs_oracle: grid sizes differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (std::abs(times[i] - oracle_times[i]) > 1e-9) throw StatsError("ensemble_vs_oracle: grids differ");
        const double diff = std::abs(mean[i] - oracle_values[i]);
        double z = 0.0;
        if (error[i] > 0.0)
            z = diff / error[i];
        else if (diff > 1e-12)
            z = std::numeric_limits<double>::infinity();
        worst = std::max(worst, z);
    }
    return worst;
}

}  // namespace qtraj
