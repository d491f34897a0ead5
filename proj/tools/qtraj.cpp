#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qtraj/commands.hpp"

namespace {

struct Overrides {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_traj;
    std::optional<double> eta, gamma, omega, dt, tau, delay, gain, offset;
    std::optional<std::string> feedback, out_dir;
    std::optional<unsigned> workers;

    qtraj::RunSettings resolve() const {
        qtraj::RunSettings s = config ? qtraj::load_settings(*config) : qtraj::RunSettings{};
        if (seed) s.seed = *seed;
        if (n_traj) s.n_traj = *n_traj;
        if (eta) s.eta = *eta;
        if (gamma) s.gamma_per_us = *gamma;
        if (omega) s.omega_mhz = *omega;
        if (dt) s.dt_ns = *dt;
        if (tau) s.tau_us = *tau;
        if (delay) s.delay_ns = *delay;
        if (gain) s.gain_per_us = *gain;
        if (offset) s.offset = *offset;
        if (feedback) s.mode = qtraj::parse_feedback_mode(*feedback);
        if (out_dir) s.out_dir = *out_dir;
        if (workers) s.workers = *workers;
        return s;
    }
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--n-traj", o.n_traj, "number of trajectories");
    cmd->add_option("--eta", o.eta, "detection efficiency");
    cmd->add_option("--gamma-per-us", o.gamma, "decay rate (1/us)");
    cmd->add_option("--omega-mhz", o.omega, "Rabi frequency W/2pi (MHz)");
    cmd->add_option("--dt-ns", o.dt, "time step (ns)");
    cmd->add_option("--tau-us", o.tau, "protocol duration (us)");
    cmd->add_option("--feedback", o.feedback, "feedback law")->check(CLI::IsMember({"none", "pll", "optimal"}));
    cmd->add_option("--delay-ns", o.delay, "feedback loop delay (ns)");
    cmd->add_option("--gain", o.gain, "phase-locked gain A (1/us)");
    cmd->add_option("--offset", o.offset, "phase-locked offset B");
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    cmd->add_option("--workers", o.workers, "worker threads (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monitored qubit trajectories and their thermodynamics"};
    app.require_subcommand(1);
    Overrides o;
    using Command = int (*)(const qtraj::RunSettings&, std::ostream&);
    const std::pair<const char*, Command> table[] = {
        {"trajectory", qtraj::cmd_trajectory}, {"ensemble", qtraj::cmd_ensemble},
        {"jarzynski", qtraj::cmd_jarzynski},   {"sweep", qtraj::cmd_sweep},
        {"verify", qtraj::cmd_verify}};
    const char* help[] = {"simulate one trajectory", "ensemble statistics and contrast",
                          "generalized Jarzynski efficacy", "gain/offset contrast sweep", "run the invariant suite"};
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < std::size(table); ++i) {
        subs.push_back(app.add_subcommand(table[i].first, help[i]));
        add_common(subs.back(), o);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        const qtraj::RunSettings settings = o.resolve();
        for (std::size_t i = 0; i < subs.size(); ++i)
            if (subs[i]->parsed()) return table[i].second(settings, std::cout);
    } catch (const qtraj::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
