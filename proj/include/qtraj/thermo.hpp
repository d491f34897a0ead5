#pragma once

// Thermodynamic observables built from trajectory ledgers: transition
// probability decompositions, first-law checks, two-point work statistics,
// Jarzynski averages, efficacy, Rabi contrast and correlations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qtraj/bloch.hpp"
#include "qtraj/config.hpp"
#include "qtraj/ensemble.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj {

/// Path-dependent decomposition of tr[Pi_m rho_tau] for a run started in n.
struct TransitionLedger {
    double P_W = 0.0;
    double P_Q = 0.0;
    double P_F = 0.0;
    double P_total = 0.0;
    int n = 0;
    int m = 0;

    double P0() const { return n == m ? 1.0 : 0.0; }
    double decomposition_residual() const { return std::abs(P_total - (P0() + P_W + P_Q + P_F)); }
};

inline TransitionLedger accumulate(const TrajectorySummary& s, int m) {
    // The ledger tracks Pi_1; Pi_0 = 1 - Pi_1 flips every increment.
    const double sign = m == 1 ? 1.0 : -1.0;
    return {sign * s.work, sign * s.heat, sign * s.feedback_work, population(s.final_state, m), s.initial_label, m};
}

inline TransitionLedger accumulate(const TrajectoryRecord& rec, int m) {
    const double sign = m == 1 ? 1.0 : -1.0;
    TransitionLedger t;
    for (const auto& l : rec.ledgers) {
        t.P_W += l.dP_W;
        t.P_Q += l.dP_Q;
        t.P_F += l.dP_F;
    }
    t.P_W *= sign;
    t.P_Q *= sign;
    t.P_F *= sign;
    t.P_total = population(rec.final_state(), m);
    t.n = rec.initial_label;
    t.m = m;
    return t;
}

/// |Delta U from states - sum of (dW + dWF + dQ)| in units of hbar w_q.
inline double first_law_residual(const TrajectoryRecord& rec) {
    double total = 0.0;
    for (const auto& l : rec.ledgers) total += l.dW + l.dWF + l.dQ;
    return std::abs(internal_energy(rec.final_state()) - internal_energy(rec.initial_state) - total);
}

struct Estimate {
    double value = 0.0;
    double error = 0.0;  ///< standard error
};

/// Mean of tr[Pi_m rho_tau] over runs prepared in n, or the frequency of
/// projective outcome m when use_outcomes is set.
inline Estimate transition_probability(std::span<const TrajectorySummary> runs, int m, int n,
                                       bool use_outcomes = false) {
    if (runs.empty()) throw StatsError("transition probability of an empty ensemble");
    double sum = 0.0;
    double sum2 = 0.0;
    for (const auto& r : runs) {
        if (r.initial_label != n) throw StatsError("ensemble contains a run not prepared in the requested state");
        double v = 0.0;
        if (use_outcomes) {
            if (!r.outcome) throw StatsError("run has no projective outcome");
            v = *r.outcome == m ? 1.0 : 0.0;
        } else {
            v = population(r.final_state, m);
        }
        sum += v;
        sum2 += v * v;
    }
    const double N = static_cast<double>(runs.size());
    const double mean = sum / N;
    const double var = runs.size() > 1 ? std::max(0.0, (sum2 - N * mean * mean) / (N - 1.0)) : 0.0;
    return {mean, std::sqrt(var / N)};
}

struct SeriesEstimate {
    std::vector<double> mean;
    std::vector<double> error;
};

/// Ensemble mean and standard error of tr[Pi_m rho(t)] on the run's time grid.
inline SeriesEstimate population_series(const EnsembleRun& run, int m) {
    if (run.trajectories.empty()) throw StatsError("population series of an empty ensemble");
    const std::size_t T = run.times.size();
    std::vector<double> sum(T, 0.0), sum2(T, 0.0);
    for (const auto& tr : run.trajectories) {
        for (std::size_t i = 0; i < T; ++i) {
            const double v = m == 1 ? tr.excited[i] : 1.0 - tr.excited[i];
            sum[i] += v;
            sum2[i] += v * v;
        }
    }
    const double N = static_cast<double>(run.size());
    SeriesEstimate out{std::vector<double>(T), std::vector<double>(T)};
    for (std::size_t i = 0; i < T; ++i) {
        const double mean = sum[i] / N;
        const double var = N > 1 ? std::max(0.0, (sum2[i] - N * mean * mean) / (N - 1.0)) : 0.0;
        out.mean[i] = mean;
        out.error[i] = std::sqrt(var / N);
    }
    return out;
}

/// Work distribution of a two-point energy measurement on a qubit whose initial
/// and final Hamiltonians coincide. Support is {-1, 0, +1} (hbar w_q).
struct WorkDistribution {
    std::array<double, 3> support{-1.0, 0.0, 1.0};
    std::array<double, 3> probabilities{0.0, 1.0, 0.0};
    double beta = 0.0;
};

inline std::array<double, 2> gibbs_weights(double beta) {
    const double pe = gibbs_excited_weight(beta);
    return {1.0 - pe, pe};
}

inline WorkDistribution two_point_work_distribution(double beta, const TransitionMatrix& t) {
    constexpr double tol = 1e-9;
    for (double p : {t.p00, t.p11, t.p10, t.p01})
        if (!(p >= -tol && p <= 1.0 + tol)) throw StatsError("transition probability outside [0, 1]");
    if (std::abs(t.p00 + t.p10 - 1.0) > tol || std::abs(t.p11 + t.p01 - 1.0) > tol)
        throw StatsError("transition probabilities are not normalized per initial state");
    const auto [pg, pe] = gibbs_weights(beta);
    WorkDistribution wd;
    wd.beta = beta;
    wd.probabilities = {pe * t.p01, pg * t.p00 + pe * t.p11, pg * t.p10};
    return wd;
}

/// <exp(-beta W)> over the distribution.
inline double jarzynski_average(const WorkDistribution& wd) {
    double acc = 0.0;
    for (std::size_t i = 0; i < 3; ++i) acc += wd.probabilities[i] * std::exp(-wd.beta * wd.support[i]);
    return acc;
}

/// gamma_q = tr[exp(-A_f) E(rho_0 exp(A_i))] with A_i = A_f = -beta sigma_z / 2,
/// where E applied to the identity has diagonal (C00, C11).
inline double efficacy_from_coefficients(double c00, double c11, double beta) {
    const double up = std::exp(0.5 * beta);
    const double down = std::exp(-0.5 * beta);
    return (up * c00 + down * c11) / (up + down);
}

struct EfficacyResult {
    std::vector<double> times;
    std::vector<double> gamma_q;
    std::vector<double> error;
    std::vector<double> c00;
    std::vector<double> c11;
};

namespace detail {

inline void check_efficacy_inputs(const EnsembleRun& ground, const EnsembleRun& excited) {
    if (ground.trajectories.empty() || excited.trajectories.empty())
        throw StatsError("efficacy needs non-empty ground and excited ensembles");
    if (!same_dynamics(ground.config, excited.config) || ground.times.size() != excited.times.size())
        throw StatsError("ground and excited ensembles were simulated with different configurations");
    for (const auto& t : ground.trajectories)
        if (t.initial_label != 0) throw StatsError("ground ensemble contains an excited preparation");
    for (const auto& t : excited.trajectories)
        if (t.initial_label != 1) throw StatsError("excited ensemble contains a ground preparation");
}

inline std::vector<double> mean_ground_population(const EnsembleRun& run, std::span<const std::size_t> idx) {
    std::vector<double> acc(run.times.size(), 0.0);
    for (std::size_t k : idx) {
        const auto& pe = run.trajectories[k].excited;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += 1.0 - pe[i];
    }
    for (double& v : acc) v /= static_cast<double>(idx.size());
    return acc;
}

}  // namespace detail

/// Efficacy from equally weighted ground- and excited-start trajectories.
/// Standard errors come from a bootstrap over both ensembles.
inline EfficacyResult efficacy_from_trajectories(const EnsembleRun& ground, const EnsembleRun& excited,
                                                 double beta, std::size_t n_boot = 1000,
                                                 std::uint64_t seed = 0x5eed) {
    detail::check_efficacy_inputs(ground, excited);
    const std::size_t T = ground.times.size();
    auto iota = [](std::size_t n) {
        std::vector<std::size_t> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = i;
        return v;
    };
    const auto all_g = iota(ground.size());
    const auto all_e = iota(excited.size());
    const auto rho00_g = detail::mean_ground_population(ground, all_g);
    const auto rho00_e = detail::mean_ground_population(excited, all_e);

    EfficacyResult out;
    out.times = ground.times;
    out.gamma_q.resize(T);
    out.c00.resize(T);
    out.c11.resize(T);
    out.error.assign(T, 0.0);
    for (std::size_t i = 0; i < T; ++i) {
        out.c00[i] = rho00_g[i] + rho00_e[i];
        out.c11[i] = (1.0 - rho00_g[i]) + (1.0 - rho00_e[i]);
        out.gamma_q[i] = efficacy_from_coefficients(out.c00[i], out.c11[i], beta);
    }

    if (n_boot < 2) return out;
    RandomStream rng(seed, 0);
    std::vector<double> sum(T, 0.0), sum2(T, 0.0);
    std::vector<std::size_t> ig(ground.size()), ie(excited.size());
    for (std::size_t b = 0; b < n_boot; ++b) {
        for (auto& k : ig) k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(ground.size()));
        for (auto& k : ie) k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(excited.size()));
        const auto g = detail::mean_ground_population(ground, ig);
        const auto e = detail::mean_ground_population(excited, ie);
        for (std::size_t i = 0; i < T; ++i) {
            const double v = efficacy_from_coefficients(g[i] + e[i], 2.0 - g[i] - e[i], beta);
            sum[i] += v;
            sum2[i] += v * v;
        }
    }
    const double B = static_cast<double>(n_boot);
    for (std::size_t i = 0; i < T; ++i) {
        const double mean = sum[i] / B;
        out.error[i] = std::sqrt(std::max(0.0, (sum2[i] - B * mean * mean) / (B - 1.0)));
    }
    return out;
}

/// Efficacy read off the work distribution built from simulated projective
/// energy measurements: every trajectory is read out once at each time with an
/// independent draw, as if runs of every duration had been performed.
/// Errors are binomial.
inline EfficacyResult efficacy_from_work_distribution(const EnsembleRun& ground, const EnsembleRun& excited,
                                                      double beta, std::uint64_t seed = 0xdecaf) {
    detail::check_efficacy_inputs(ground, excited);
    const std::size_t T = ground.times.size();
    auto frequency = [&](const EnsembleRun& run, int m, std::uint64_t salt) {
        std::vector<double> hits(T, 0.0);
        for (std::size_t k = 0; k < run.size(); ++k) {
            RandomStream rng(seed ^ salt, k);
            const auto& pe = run.trajectories[k].excited;
            for (std::size_t i = 0; i < T; ++i) {
                const int outcome = rng.uniform() < pe[i] ? 1 : 0;
                if (outcome == m) hits[i] += 1.0;
            }
        }
        for (double& h : hits) h /= static_cast<double>(run.size());
        return hits;
    };
    const auto p00 = frequency(ground, 0, 0x9a11);
    const auto p11 = frequency(excited, 1, 0xe5c1);
    const double slope = std::tanh(0.5 * beta);
    const double Ng = static_cast<double>(ground.size());
    const double Ne = static_cast<double>(excited.size());

    EfficacyResult out;
    out.times = ground.times;
    for (std::size_t i = 0; i < T; ++i) {
        const TransitionMatrix tm{p00[i], p11[i], 1.0 - p00[i], 1.0 - p11[i]};
        out.gamma_q.push_back(jarzynski_average(two_point_work_distribution(beta, tm)));
        out.c00.push_back(p00[i] + tm.p01);
        out.c11.push_back(p11[i] + tm.p10);
        const double v00 = p00[i] * (1.0 - p00[i]) / Ng;
        const double v11 = p11[i] * (1.0 - p11[i]) / Ne;
        out.error.push_back(slope * std::sqrt(v00 + v11));
    }
    return out;
}

/// Mean of (gamma_q - 1)^2 over samples with t <= t_max.
inline double mean_squared_deviation(const EfficacyResult& r, double t_max) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        if (r.times[i] > t_max + 1e-12) break;
        acc += (r.gamma_q[i] - 1.0) * (r.gamma_q[i] - 1.0);
        ++n;
    }
    if (n == 0) throw StatsError("no efficacy samples in the requested window");
    return acc / static_cast<double>(n);
}

/// Steady Rabi oscillation amplitude of P00(t) relative to the closed-system
/// amplitude 1/2. Fits c + a cos(omega t) + b sin(omega t) over [t_lo, t_hi].
inline double rabi_contrast(std::span<const double> times, std::span<const double> p00, double omega,
                            double t_lo = 2.0, double t_hi = 8.0) {
    if (times.size() != p00.size()) throw StatsError("time and series lengths differ");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= t_lo - 1e-12 && times[i] <= t_hi + 1e-12) idx.push_back(i);
    if (idx.size() < 4) throw StatsError("too few samples in the contrast window");
    const double span = times[idx.back()] - times[idx.front()];
    if (span * std::abs(omega) < 3.0 * 2.0 * std::numbers::pi)
        throw StatsError("contrast window covers fewer than three Rabi periods");

    Eigen::MatrixXd M(idx.size(), 3);
    Eigen::VectorXd y(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const double t = times[idx[r]];
        M(r, 0) = 1.0;
        M(r, 1) = std::cos(omega * t);
        M(r, 2) = std::sin(omega * t);
        y(r) = p00[idx[r]];
    }
    const Eigen::Vector3d c = M.colPivHouseholderQr().solve(y);
    return 2.0 * std::hypot(c(1), c(2));
}

/// Pearson correlation of a[i + lag] with b[i].
inline double pearson_r(std::span<const double> a, std::span<const double> b, std::size_t lag = 0) {
    if (a.size() != b.size()) throw StatsError("pearson_r: series lengths differ");
    if (lag >= a.size()) throw StatsError("pearson_r: lag exceeds series length");
    const std::size_t n = a.size() - lag;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i + lag];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i + lag] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw StatsError("pearson_r: zero variance");
    return sab / std::sqrt(saa * sbb);
}

/// Pearson r over samples pooled from several runs; the lag is applied within
/// each run before pooling.
inline double pooled_pearson(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                             std::size_t lag = 0) {
    if (a.size() != b.size()) throw StatsError("pooled_pearson: run counts differ");
    std::vector<double> pa, pb;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].size() != b[k].size()) throw StatsError("pooled_pearson: series lengths differ");
        for (std::size_t i = 0; i + lag < a[k].size(); ++i) {
            pa.push_back(a[k][i + lag]);
            pb.push_back(b[k][i]);
        }
    }
    if (pa.empty()) throw StatsError("pooled_pearson: no samples");
    return pearson_r(pa, pb, 0);
}

/// Per-step (dWF, dQ) correlation pooled over the runs that kept increments.
inline double feedback_heat_correlation(const EnsembleRun& run, std::size_t lag = 0) {
    std::vector<std::vector<double>> fw, q;
    for (const auto& t : run.trajectories) {
        if (t.dWF.empty()) continue;
        fw.push_back(t.dWF);
        q.push_back(t.dQ);
    }
    return pooled_pearson(fw, q, lag);
}

struct FirstLawBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double predicted = 0.0;  ///< mean path-dependent P00
    double observed = 0.0;   ///< frequency of outcome 0
    double error = 0.0;      ///< binomial standard error of `observed`
};

struct FirstLawBinning {
    std::vector<FirstLawBin> bins;
    double reduced_chi2 = 0.0;
    std::size_t used_bins = 0;
};

/// Bins ground-start runs by the path-dependent 1 + P_W + P_Q + P_F and
/// compares with projective outcome frequencies in each bin.
inline FirstLawBinning first_law_binning(std::span<const TrajectorySummary> runs, std::size_t n_bins = 10,
                                         std::size_t min_count = 20) {
    FirstLawBinning out;
    out.bins.resize(n_bins);
    std::vector<double> var(n_bins, 0.0);
    for (std::size_t b = 0; b < n_bins; ++b) {
        out.bins[b].lo = static_cast<double>(b) / static_cast<double>(n_bins);
        out.bins[b].hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
    }
    for (const auto& r : runs) {
        if (r.initial_label != 0 || !r.outcome) continue;
        const auto led = accumulate(r, 0);
        const double p = std::clamp(led.P0() + led.P_W + led.P_Q + led.P_F, 0.0, 1.0);
        const std::size_t b = std::min(n_bins - 1, static_cast<std::size_t>(p * static_cast<double>(n_bins)));
        auto& bin = out.bins[b];
        ++bin.count;
        bin.predicted += p;
        bin.observed += *r.outcome == 0 ? 1.0 : 0.0;
        var[b] += p * (1.0 - p);
    }
    double chi2 = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        auto& bin = out.bins[b];
        if (bin.count == 0) continue;
        const double n = static_cast<double>(bin.count);
        bin.predicted /= n;
        bin.observed /= n;
        bin.error = std::sqrt(var[b]) / n;
        if (bin.count < min_count || bin.error == 0.0) continue;
        chi2 += (bin.observed - bin.predicted) * (bin.observed - bin.predicted) / (bin.error * bin.error);
        ++out.used_bins;
    }
    if (out.used_bins == 0) throw StatsError("first-law binning: no populated bins");
    out.reduced_chi2 = chi2 / static_cast<double>(out.used_bins);
    return out;
}

}  // namespace qtraj
