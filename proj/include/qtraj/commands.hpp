#pragma once

// Experiment commands behind the CLI. Each writes its data files into
// settings.out_dir plus a manifest.json describing the run. Timing appears only
// in the manifest, so every other output is byte-identical across reruns and
// worker counts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "qtraj/ensemble.hpp"
#include "qtraj/io.hpp"
#include "qtraj/oracle.hpp"
#include "qtraj/sweep.hpp"
#include "qtraj/thermo.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj {

using json = nlohmann::json;

/// Collects the files written by one command and emits the manifest last.
class OutputSet {
public:
    OutputSet(std::string command, const RunSettings& settings)
        : command_(std::move(command)),
          settings_(settings),
          dir_(settings.out_dir),
          id_(run_id(command_, settings)),
          start_(std::chrono::steady_clock::now()) {
        std::filesystem::create_directories(dir_);
    }

    const std::string& id() const { return id_; }
    std::filesystem::path path(const std::string& name) const { return dir_ / name; }

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(path(name), std::ios::binary);
        if (!out) throw ConfigError("cannot write '" + path(name).string() + "'");
        out << content;
        files_.push_back(name);
    }

    /// Reports carry the manifest reference and run id.
    void write_json(const std::string& name, json body) {
        body["manifest"] = "manifest.json";
        body["run_id"] = id_;
        write(name, body.dump(2) + "\n");
    }

    void count(std::size_t trajectories, std::size_t steps_each) {
        trajectories_ += trajectories;
        steps_ += trajectories * steps_each;
    }

    void finish() {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json m{{"command", command_},
               {"run_id", id_},
               {"version", QTRAJ_VERSION},
               {"seed", settings_.seed},
               {"workers", resolve_workers(settings_.workers)},
               {"config", to_json(settings_)},
               {"out_dir", settings_.out_dir},
               {"outputs", files_},
               {"trajectories", trajectories_},
               {"total_steps", steps_},
               {"wall_clock_s", secs}};
        std::ofstream out(path("manifest.json"), std::ios::binary);
        out << m.dump(2) << "\n";
    }

private:
    std::string command_;
    RunSettings settings_;
    std::filesystem::path dir_;
    std::string id_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> files_;
    std::size_t trajectories_ = 0;
    std::size_t steps_ = 0;
};

namespace detail {

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::vector<double> inclusive_range(double lo, double hi, double step, const std::string& what) {
    if (!(step > 0.0) || hi < lo) throw ConfigError(what + ": need step > 0 and max >= min");
    std::vector<double> v;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) v.push_back(lo + static_cast<double>(i) * step);
    return v;
}

/// Ensemble-vs-Lindblad comparison on every `stride`-th grid point.
inline double oracle_z_score(const EnsembleRun& run, std::size_t stride, const BlochState& initial) {
    const auto pe = population_series(run, 1);
    std::vector<double> t, mean, err;
    for (std::size_t i = 0; i < run.times.size(); i += stride) {
        t.push_back(run.times[i]);
        mean.push_back(pe.mean[i]);
        err.push_back(pe.error[i]);
    }
    const auto sol = lindblad_evolve(initial, run.config, t);
    return ensemble_vs_oracle(t, mean, err, sol.times, sol.excited());
}

inline std::size_t stride_for(double spacing, double dt) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spacing / dt)));
}

}  // namespace detail

/// Single trajectory: trajectory.csv (t, x, z, dV, dW, dWF, dQ, dU) and a
/// trajectory.json summary.
inline int cmd_trajectory(const RunSettings& settings, std::ostream& log = std::cout) {
    const SimConfig cfg = settings.sim();
    const FeedbackConfig fb = settings.feedback();
    OutputSet out("trajectory", settings);

    RandomStream rng(cfg.seed, 0);
    const TrajectoryRecord rec = simulate_trajectory(cfg, fb, rng);
    std::ostringstream csv;
    write_trajectory_csv(csv, rec);
    out.write("trajectory.csv", csv.str());

    const auto led = accumulate(rec, 0);
    json body{{"initial_label", rec.initial_label},
              {"final_outcome", rec.final_outcome ? json(*rec.final_outcome) : json(nullptr)},
              {"final_state", {{"x", rec.final_state().x}, {"z", rec.final_state().z}}},
              {"first_law_residual", first_law_residual(rec)},
              {"P00_decomposition", {{"P_W", led.P_W}, {"P_Q", led.P_Q}, {"P_F", led.P_F}, {"P_total", led.P_total}}},
              {"sim", to_json(cfg)},
              {"feedback", to_json(fb)}};
    out.write_json("trajectory.json", body);
    out.count(1, rec.size());
    out.finish();
    log << fmt::format("trajectory: {} steps written to {}\n", rec.size(), out.path("trajectory.csv").string());
    return 0;
}

/// Ensemble statistics: p00.csv (ensemble P00 with the unconditional
/// reference), scatter.csv (per-run decomposition of the final P00), and
/// report.json (contrast, correlations, first-law checks).
inline int cmd_ensemble(const RunSettings& settings, std::ostream& log = std::cout) {
    if (settings.n_traj < 1) throw ConfigError("n_traj must be >= 1");
    const SimConfig cfg = settings.sim();
    const FeedbackConfig fb = settings.feedback();
    OutputSet out("ensemble", settings);

    const std::size_t keep = std::min<std::size_t>(settings.n_traj, 200);
    const EnsembleRun run = run_ensemble(cfg, fb, settings.n_traj, {settings.workers, keep});
    out.count(run.size(), cfg.steps());

    const auto p00 = population_series(run, 0);
    const BlochState start = cfg.initial == Preparation::excited ? BlochState::excited() : BlochState::ground();
    const auto lind = lindblad_evolve(start, cfg, run.times).excited();
    {
        std::ostringstream s;
        CsvWriter csv(s);
        csv.row({"t", "p00", "p00_err", "p00_unconditional"});
        for (std::size_t i = 0; i < run.times.size(); ++i)
            csv.field(run.times[i]).field(p00.mean[i]).field(p00.error[i]).field(1.0 - lind[i]).end();
        out.write("p00.csv", s.str());
    }
    {
        std::ostringstream s;
        CsvWriter csv(s);
        csv.row({"k", "n", "outcome", "P_W", "P_Q", "P_F", "P_total"});
        for (std::size_t k = 0; k < run.size(); ++k) {
            const auto& tr = run.trajectories[k];
            const auto led = accumulate(tr, 0);
            csv.field(k).field(tr.initial_label).field(tr.outcome ? std::to_string(*tr.outcome) : std::string{});
            csv.field(led.P_W).field(led.P_Q).field(led.P_F).field(led.P_total).end();
        }
        out.write("scatter.csv", s.str());
    }

    json report{{"n_traj", run.size()}, {"sim", to_json(cfg)}, {"feedback", to_json(fb)}};
    double max_residual = 0.0;
    double sum_w = 0.0, sum_q = 0.0, sum_f = 0.0;
    for (const auto& tr : run.trajectories) {
        max_residual = std::max(max_residual, tr.first_law_residual);
        const auto led = accumulate(tr, 0);
        sum_w += led.P_W;
        sum_q += led.P_Q;
        sum_f += led.P_F;
    }
    const double N = static_cast<double>(run.size());
    report["first_law_max_residual"] = max_residual;
    report["mean_decomposition"] = {{"P_W", sum_w / N}, {"P_Q", sum_q / N}, {"P_F", sum_f / N}};

    for (int n : {0, 1}) {
        std::vector<TrajectorySummary> group;
        for (const auto& tr : run.trajectories)
            if (tr.initial_label == n) group.push_back(tr);
        if (group.empty()) continue;
        const auto st = transition_probability(group, 0, n);
        json entry{{"state", {{"value", st.value}, {"error", st.error}}}, {"count", group.size()}};
        if (cfg.sample_outcome) {
            const auto oc = transition_probability(group, 0, n, true);
            entry["outcomes"] = {{"value", oc.value}, {"error", oc.error}};
        }
        report["P0" + std::to_string(n)] = entry;
    }

    try {
        report["contrast"] = rabi_contrast(run.times, p00.mean, cfg.omega_r, 2.0, cfg.tau);
    } catch (const StatsError& e) {
        report["contrast"] = nullptr;
        report["contrast_note"] = e.what();
    }
    if (fb.mode != FeedbackMode::none) {
        json corr;
        for (std::size_t lag : {std::size_t{0}, std::size_t{1}, fb.delay_steps}) {
            try {
                corr["lag_" + std::to_string(lag)] = feedback_heat_correlation(run, lag);
            } catch (const StatsError&) {
                corr["lag_" + std::to_string(lag)] = nullptr;
            }
        }
        report["feedback_heat_pearson"] = corr;
    }
    if (cfg.sample_outcome && cfg.initial != Preparation::excited) {
        try {
            const auto bins = first_law_binning(run.trajectories);
            report["first_law_binning_reduced_chi2"] = bins.reduced_chi2;
        } catch (const StatsError& e) {
            report["first_law_binning_reduced_chi2"] = nullptr;
        }
    }
    out.write_json("report.json", report);
    out.finish();
    log << fmt::format("ensemble: {} trajectories, P00(tau) = {:.4f} +/- {:.4f}\n", run.size(),
                       p00.mean.back(), p00.error.back());
    return 0;
}

/// Generalized Jarzynski efficacy per eta, from both the state-based and the
/// sampled-outcome estimator.
inline int cmd_jarzynski(const RunSettings& settings, std::ostream& log = std::cout) {
    if (!(settings.beta > 0.0)) throw ConfigError("beta must be > 0");
    if (settings.eta_list.empty()) throw ConfigError("eta_list must be non-empty");
    if (settings.n_per_prep < 1) throw ConfigError("n_per_prep must be >= 1");
    RunSettings base = settings;
    base.tau_us = settings.window_us;
    OutputSet out("jarzynski", settings);

    std::ostringstream s;
    CsvWriter csv(s);
    csv.row({"eta", "t", "gamma_traj", "err_traj", "gamma_work", "err_work"});
    json per_eta = json::array();
    for (double eta : settings.eta_list) {
        RunSettings rs = base;
        rs.eta = eta;
        SimConfig g = rs.sim();
        g.initial = Preparation::ground;
        SimConfig e = g;
        e.initial = Preparation::excited;
        e.seed = g.seed + 0x9e3779b97f4a7c15ULL;
        const FeedbackConfig fb = rs.feedback();
        const auto rg = run_ensemble(g, fb, settings.n_per_prep, {settings.workers, 0});
        const auto re = run_ensemble(e, fb, settings.n_per_prep, {settings.workers, 0});
        out.count(2 * settings.n_per_prep, g.steps());
        const auto traj = efficacy_from_trajectories(rg, re, settings.beta, settings.bootstrap, settings.seed);
        const auto work = efficacy_from_work_distribution(rg, re, settings.beta, settings.seed);
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            csv.field(eta).field(traj.times[i]).field(traj.gamma_q[i]).field(traj.error[i]);
            csv.field(work.gamma_q[i]).field(work.error[i]).end();
            const double dev = std::abs(traj.gamma_q[i] - 1.0);
            const double ratio = traj.error[i] > 0.0 ? dev / traj.error[i]
                                 : (dev > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0);
            worst = std::max(worst, ratio);
        }
        per_eta.push_back({{"eta", eta},
                           {"gamma_q_0", traj.gamma_q.front()},
                           {"msd_traj", mean_squared_deviation(traj, settings.window_us)},
                           {"msd_work", mean_squared_deviation(work, settings.window_us)},
                           {"max_dev_over_err", detail::number_or_null(worst)}});
        log << fmt::format("jarzynski: eta={} msd={:.3g}\n", eta, per_eta.back()["msd_traj"].get<double>());
    }
    out.write("efficacy.csv", s.str());
    out.write_json("report.json", {{"beta", settings.beta},
                                   {"window_us", settings.window_us},
                                   {"n_per_prep", settings.n_per_prep},
                                   {"feedback", to_json(base.feedback())},
                                   {"per_eta", per_eta}});
    out.finish();
    return 0;
}

/// Phase-locked contrast over the gain/offset grid: sweep.csv and sweep.json.
inline int cmd_sweep(const RunSettings& settings, std::ostream& log = std::cout) {
    const auto gains = detail::inclusive_range(settings.gain_min_per_us, settings.gain_max_per_us,
                                               settings.gain_step_per_us, "sweep gain range");
    const auto offsets =
        detail::inclusive_range(settings.offset_min, settings.offset_max, settings.offset_step, "sweep offset range");
    const SimConfig cfg = settings.sim();
    const FeedbackConfig fb = settings.feedback();
    OutputSet out("sweep", settings);
    const auto map = sweep_gain_offset(gains, offsets, cfg, fb, settings.sweep_n_traj, settings.workers);
    out.count(gains.size() * offsets.size() * settings.sweep_n_traj, cfg.steps());

    std::ostringstream s;
    CsvWriter csv(s);
    csv.row({"gain_per_us", "offset", "contrast"});
    for (std::size_t b = 0; b < offsets.size(); ++b)
        for (std::size_t a = 0; a < gains.size(); ++a) csv.field(gains[a]).field(offsets[b]).field(map.contrast[b][a]).end();
    out.write("sweep.csv", s.str());
    out.write_json("sweep.json", {{"best_gain_per_us", gains[map.best_gain]},
                                  {"best_offset", offsets[map.best_offset]},
                                  {"best_contrast", map.best_contrast()},
                                  {"delay_steps", fb.delay_steps},
                                  {"n_traj", settings.sweep_n_traj}});
    out.finish();
    log << fmt::format("sweep: best A = {} /us, B = {}, contrast {:.3f}\n", gains[map.best_gain],
                       offsets[map.best_offset], map.best_contrast());
    return 0;
}

/// Invariant suite. Returns 0 when every check passes, 1 otherwise; the
/// report goes to verify.json and to `log`.
inline int cmd_verify(const RunSettings& settings, std::ostream& log = std::cout) {
    const SimConfig cfg = settings.sim();
    const FeedbackConfig fb = settings.feedback();
    OutputSet out("verify", settings);
    json checks = json::array();
    bool ok = true;
    auto record = [&](const std::string& name, bool pass, json detail) {
        ok = ok && pass;
        detail["name"] = name;
        detail["pass"] = pass;
        checks.push_back(detail);
        log << fmt::format("{} {}\n", pass ? "PASS" : "FAIL", name);
    };

    {
        const auto run = run_ensemble(cfg, fb, settings.n_traj, {settings.workers, 0});
        out.count(run.size(), cfg.steps());
        double worst = 0.0;
        for (const auto& tr : run.trajectories) worst = std::max(worst, tr.first_law_residual);
        record("first_law", worst < 1e-8, {{"max_residual", worst}, {"tolerance", 1e-8}});
    }
    {
        SimConfig c = cfg;
        c.initial = Preparation::ground;
        const auto run = run_ensemble(c, FeedbackConfig{}, settings.n_traj, {settings.workers, 0});
        out.count(run.size(), c.steps());
        const double z = detail::oracle_z_score(run, detail::stride_for(0.1, c.dt), BlochState::ground());
        record("oracle_agreement", z < 4.0, {{"max_z", detail::number_or_null(z)}, {"threshold", 4.0}});
    }
    {
        SimConfig c = cfg;
        c.gamma = 0.0;
        c.initial = Preparation::ground;
        c.tau = 400 * c.dt;
        RandomStream rng(c.seed, 0);
        const auto rec = simulate_trajectory(c, FeedbackConfig{}, rng);
        out.count(1, rec.size());
        double err = 0.0, heat = 0.0;
        for (std::size_t i = 0; i < rec.size(); ++i) {
            const auto tm = closed_rabi_probabilities(0.5 * c.omega_r, rec.times[i]);
            err = std::max(err, std::abs(ground_population(rec.states[i]) - tm.p00));
            heat = std::max(heat, std::abs(rec.ledgers[i].dQ));
        }
        record("unitary_limit", err < 1e-6 && heat == 0.0, {{"max_probability_error", err}, {"max_abs_dQ", heat}});
    }
    {
        SimConfig c = cfg;
        c.eta = 1.0;
        c.tau = 1000 * c.dt;
        const auto n = std::min<std::size_t>(settings.n_traj, 20);
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            RandomStream rng(c.seed, k);
            const auto rec = simulate_trajectory(c, fb, rng);
            for (const auto& s : rec.states) worst = std::max(worst, std::abs(1.0 - s.norm()));
        }
        out.count(n, c.steps());
        record("purity_eta_1", worst < 1e-6, {{"max_norm_defect", worst}, {"trajectories", n}});
    }
    out.write_json("verify.json", {{"pass", ok}, {"checks", checks}});
    out.finish();
    return ok ? 0 : 1;
}

}  // namespace qtraj
