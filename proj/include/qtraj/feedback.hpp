#pragma once

// Feedback laws acting on the drive amplitude: the phase-locked loop that
// multiplies the homodyne record with a reference oscillator, and the ideal
// phase-keeping rotation that needs the tracked state in real time.

#include <cstddef>
#include <deque>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>

#include "qtraj/bloch.hpp"
#include "qtraj/config.hpp"
#include "qtraj/sme.hpp"

namespace qtraj {

enum class FeedbackMode { none, phase_locked, optimal };

inline std::string to_string(FeedbackMode m) {
    switch (m) {
        case FeedbackMode::none: return "none";
        case FeedbackMode::phase_locked: return "pll";
        case FeedbackMode::optimal: return "optimal";
    }
    return "none";
}

inline FeedbackMode parse_feedback_mode(const std::string& s) {
    if (s == "none" || s == "off") return FeedbackMode::none;
    if (s == "pll" || s == "phase_locked") return FeedbackMode::phase_locked;
    if (s == "optimal") return FeedbackMode::optimal;
    throw ConfigError("unknown feedback mode '" + s + "' (expected none, pll or optimal)");
}

struct FeedbackConfig {
    FeedbackMode mode = FeedbackMode::none;
    double gain = 34.0;    ///< A, per-sample multiplier of dV (1/us)
    double offset = -1.0;  ///< B
    /// Reference phase. Unset means 0 for a ground-state start and pi for an
    /// excited start.
    std::optional<double> phi;
    std::size_t delay_steps = 0;
};

/// Fixed-length FIFO: the value pushed at step i comes out at step i + delay.
class DelayLine {
public:
    explicit DelayLine(std::size_t delay_steps = 0) : buffer_(delay_steps, 0.0) {}

    double push(double value) {
        if (buffer_.empty()) return value;
        buffer_.push_back(value);
        const double out = buffer_.front();
        buffer_.pop_front();
        return out;
    }

    /// Sum of the values queued but not yet released.
    double pending_sum() const { return std::accumulate(buffer_.begin(), buffer_.end(), 0.0); }
    std::size_t delay() const { return buffer_.size(); }

private:
    std::deque<double> buffer_;
};

inline double apply_delay(DelayLine& line, double omega_f_now) { return line.push(omega_f_now); }

inline double reference_phase(const FeedbackConfig& fb, const SimConfig& sim, int initial_label) {
    if (fb.phi) return *fb.phi;
    return (initial_label == 1 ? std::numbers::pi : 0.0) + sim.phi;
}

/// Phase-locked feedback drive, Omega_F = A (cos(W t + phi) + B) dV, where t is
/// the start of the sample's interval. With A = sqrt(eta)/dt and B = -1 this is
/// the law obtained by replacing z with its closed-evolution value in the
/// heat-cancelling condition.
inline double phase_locked_control(const HomodyneSample& smp, double t, const FeedbackConfig& fb,
                                   const SimConfig& sim, double phi = 0.0) {
    return fb.gain * (std::cos(sim.omega_r * t + phi) + fb.offset) * smp.dV;
}

/// Rotation that puts the state back on the target oscillation phase.
inline double optimal_control(const BlochState& s_actual, double target_phase) {
    return wrap_angle(target_phase - bloch_phase(s_actual));
}

/// Per-trajectory controller. Owns its delay line; one instance per trajectory.
class FeedbackController {
public:
    FeedbackController(const FeedbackConfig& fb, const SimConfig& sim, int initial_label)
        : fb_(fb), sim_(sim), phi_(reference_phase(fb, sim, initial_label)), line_(fb.delay_steps) {}

    FeedbackMode mode() const { return fb_.mode; }

    /// Feedback rotation angle for the step starting at t_start. `predicted` is
    /// the state the step ends in without feedback.
    double angle(const BlochState& predicted, const HomodyneSample& smp, double t_start) {
        switch (fb_.mode) {
            case FeedbackMode::none:
                return 0.0;
            case FeedbackMode::phase_locked:
                return apply_delay(line_, phase_locked_control(smp, t_start, fb_, sim_, phi_)) * sim_.dt;
            case FeedbackMode::optimal: {
                // Corrections already in flight are discounted so that each
                // phase error is corrected once, however long the loop delay.
                const double target = sim_.omega_r * (t_start + sim_.dt) + phi_;
                const double theta =
                    wrap_angle(optimal_control(predicted, target) - line_.pending_sum() * sim_.dt);
                return apply_delay(line_, theta / sim_.dt) * sim_.dt;
            }
        }
        return 0.0;
    }

private:
    FeedbackConfig fb_;
    SimConfig sim_;
    double phi_;
    DelayLine line_;
};

}  // namespace qtraj
