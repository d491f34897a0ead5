#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "qtraj/bloch.hpp"
#include "qtraj/config.hpp"
#include "qtraj/feedback.hpp"
#include "qtraj/sme.hpp"

namespace qtraj {

/// Conditional evolution of one monitored run. Entry i of every array refers to
/// the step ending at times[i] = (i + 1) dt.
struct TrajectoryRecord {
    int initial_label = 0;
    BlochState initial_state;
    std::vector<double> times;
    std::vector<BlochState> states;
    std::vector<HomodyneSample> samples;
    std::vector<StepLedger> ledgers;
    std::optional<int> final_outcome;

    std::size_t size() const { return states.size(); }
    const BlochState& final_state() const { return states.empty() ? initial_state : states.back(); }
};

/// Excited-state weight of the Gibbs state at inverse temperature beta.
inline double gibbs_excited_weight(double beta) { return 1.0 / (1.0 + std::exp(beta)); }

namespace detail {

inline int draw_initial_label(const SimConfig& cfg, RandomStream& rng) {
    // Both uniforms are always consumed so the noise stream does not depend on
    // the preparation.
    const double u_prep = rng.uniform();
    const double u_error = rng.uniform();
    int label = 0;
    switch (cfg.initial) {
        case Preparation::ground: label = 0; break;
        case Preparation::excited: label = 1; break;
        case Preparation::thermal: label = u_prep < gibbs_excited_weight(cfg.beta) ? 1 : 0; break;
    }
    if (u_error < cfg.prep_error) label = 1 - label;
    return label;
}

}  // namespace detail

inline TrajectoryRecord simulate_trajectory(const SimConfig& cfg, const FeedbackConfig& fb, RandomStream& rng) {
    cfg.validate();
    TrajectoryRecord rec;
    rec.initial_label = detail::draw_initial_label(cfg, rng);
    rec.initial_state = rec.initial_label == 0 ? BlochState::ground() : BlochState::excited();

    const std::size_t n = cfg.steps();
    rec.times.reserve(n);
    rec.states.reserve(n);
    rec.samples.reserve(n);
    rec.ledgers.reserve(n);

    FeedbackController controller(fb, cfg, rec.initial_label);
    BlochState s = rec.initial_state;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * cfg.dt;
        const HomodyneSample smp = sample_homodyne(s, cfg, rng);
        const StepResult step = split_step(s, smp, cfg.omega_r, cfg, [&](const BlochState& predicted, const HomodyneSample& h) {
            return controller.angle(predicted, h, t);
        });
        s = step.state;
        rec.times.push_back(static_cast<double>(i + 1) * cfg.dt);
        rec.states.push_back(s);
        rec.samples.push_back(smp);
        rec.ledgers.push_back(step.ledger);
    }
    if (cfg.sample_outcome) rec.final_outcome = rng.uniform() < excited_population(s) ? 1 : 0;
    return rec;
}

inline TrajectoryRecord simulate_trajectory(const SimConfig& cfg, RandomStream& rng) {
    return simulate_trajectory(cfg, FeedbackConfig{}, rng);
}

}  // namespace qtraj
