#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qtraj/feedback.hpp"
#include "qtraj/trajectory.hpp"

using namespace qtraj;
constexpr double pi = std::numbers::pi;

TEST(DelayLine, ZeroDelayPassesThrough) {
    DelayLine line(0);
    EXPECT_EQ(apply_delay(line, 3.5), 3.5);
    EXPECT_EQ(line.pending_sum(), 0.0);
}

TEST(DelayLine, ConstantInputAppearsAfterDelay) {
    DelayLine line(5);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(line.push(2.0), 0.0);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(line.push(2.0), 2.0);
    EXPECT_EQ(line.pending_sum(), 10.0);
}

TEST(PhaseLocked, Examples) {
    const SimConfig sim;
    FeedbackConfig fb{FeedbackMode::phase_locked, 34.0, -1.0, std::nullopt, 0};
    EXPECT_EQ(phase_locked_control({0.0, 0.0}, 0.37, fb, sim), 0.0);
    EXPECT_NEAR(phase_locked_control({0.1, 0.0}, 0.0, fb, sim), 0.0, 1e-15);
    EXPECT_NEAR(phase_locked_control({0.1, 0.0}, 0.25, fb, sim), 34.0 * (std::cos(sim.omega_r * 0.25) - 1.0) * 0.1,
                1e-12);
}

TEST(PhaseLocked, ReferencePhaseFollowsPreparation) {
    const SimConfig sim;
    const FeedbackConfig fb;
    EXPECT_EQ(reference_phase(fb, sim, 0), 0.0);
    EXPECT_EQ(reference_phase(fb, sim, 1), pi);
    FeedbackConfig fixed = fb;
    fixed.phi = 0.3;
    EXPECT_EQ(reference_phase(fixed, sim, 1), 0.3);
}

TEST(Optimal, Examples) {
    const BlochState s = rotate_y(BlochState::ground(), 1.0);
    EXPECT_NEAR(optimal_control(s, 1.0), 0.0, 1e-15);
    const double theta = optimal_control(s, 1.1);
    EXPECT_NEAR(theta, 0.1, 1e-12);
    EXPECT_LT(std::abs(wrap_angle(bloch_phase(rotate_y(s, theta)) - 1.1)), 1e-12);
}

TEST(Optimal, PureTrajectoryStaysOnClosedPhase) {
    SimConfig c;
    c.eta = 1.0;
    c.tau = 2.0;
    c.sample_outcome = false;
    FeedbackConfig fb;
    fb.mode = FeedbackMode::optimal;
    fb.delay_steps = 0;
    RandomStream rng(31, 0);
    const auto rec = simulate_trajectory(c, fb, rng);
    for (std::size_t i = 0; i < rec.size(); ++i) {
        ASSERT_NEAR(wrap_angle(bloch_phase(rec.states[i]) - c.omega_r * rec.times[i]), 0.0, 1e-9);
        ASSERT_NEAR(rec.states[i].norm(), 1.0, 1e-9);
    }
}

TEST(FeedbackMode, ParseAndPrint) {
    for (auto m : {FeedbackMode::none, FeedbackMode::phase_locked, FeedbackMode::optimal})
        EXPECT_EQ(parse_feedback_mode(to_string(m)), m);
    EXPECT_THROW(parse_feedback_mode("bang-bang"), ConfigError);
}
