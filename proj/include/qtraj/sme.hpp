#pragma once

// Homodyne-monitored qubit: record sampling, the Ito stochastic master
// equation in Bloch form, and the split step that books every energy change
// as work (unitary drive and feedback rotations) or heat (relaxation and
// measurement back-action).

#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "qtraj/bloch.hpp"
#include "qtraj/config.hpp"

namespace qtraj {

/// One digitized homodyne increment. dV = sqrt(eta) gamma x dt + sqrt(gamma) dX
/// with dX ~ N(0, dt), so Var[dV] = gamma dt.
struct HomodyneSample {
    double dV = 0.0;
    double dX = 0.0;
};

/// Per-step energy ledger in units of hbar w_q. The dP_* entries are the
/// matching contributions to tr[Pi_1 rho]; they equal the energy increments
/// because E_1 - E_0 = 1.
struct StepLedger {
    double dW = 0.0;   ///< drive work
    double dWF = 0.0;  ///< feedback work
    double dQ = 0.0;   ///< heat
    double dU = 0.0;   ///< total change of internal energy
    double dP_W = 0.0;
    double dP_F = 0.0;
    double dP_Q = 0.0;
};

struct StepResult {
    BlochState state;
    StepLedger ledger;
};

/// Seeded Gaussian/uniform source. One stream per trajectory; the stream for
/// trajectory k depends only on (seed, k).
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t index) : engine_(mix(seed, index)) {}

    double gaussian() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    std::mt19937_64& engine() { return engine_; }

private:
    static std::uint64_t splitmix(std::uint64_t v) {
        v += 0x9e3779b97f4a7c15ULL;
        v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
        v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
        return v ^ (v >> 31);
    }
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
        return splitmix(splitmix(seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x8bb84b93962eacc9ULL));
    }

    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline HomodyneSample make_homodyne(const BlochState& s, const SimConfig& cfg, double dX) {
    return {std::sqrt(cfg.eta) * cfg.gamma * s.x * cfg.dt + std::sqrt(cfg.gamma) * dX, dX};
}

inline HomodyneSample sample_homodyne(const BlochState& s, const SimConfig& cfg, RandomStream& rng) {
    return make_homodyne(s, cfg, std::sqrt(cfg.dt) * rng.gaussian());
}

/// Pulls a state that overshot the unit disk back onto it.
inline BlochState renormalize(const BlochState& s) {
    const double n2 = s.norm_squared();
    if (n2 <= 1.0) return s;
    const double n = std::sqrt(n2);
    return {s.x / n, s.z / n};
}

namespace detail {

inline void check_blowup(const BlochState& s) {
    if (!(std::abs(s.x) <= 1.5 && std::abs(s.z) <= 1.5))
        throw NumericalBlowup("Bloch vector left the unit disk (x=" + std::to_string(s.x) +
                              ", z=" + std::to_string(s.z) + "); reduce dt");
}

inline bool is_pure(const BlochState& s) { return std::abs(s.norm() - 1.0) < kBlochTolerance; }

}  // namespace detail

/// One full Ito-Euler step of the Bloch-form master equation with total drive
/// rate omega_total (drive plus feedback):
///   dz = W x dt + gamma (1 - z) dt + sqrt(eta) x (1 - z) I
///   dx = -W z dt - gamma/2 x dt + sqrt(eta) (1 - z - x^2) I
/// with the innovation I = dV - gamma sqrt(eta) x dt.
inline BlochState ito_step(const BlochState& s, const HomodyneSample& smp, double omega_total,
                           const SimConfig& cfg) {
    const double dt = cfg.dt;
    const double se = std::sqrt(cfg.eta);
    const double innovation = smp.dV - cfg.gamma * se * s.x * dt;
    const BlochState next{
        s.x - omega_total * s.z * dt - 0.5 * cfg.gamma * s.x * dt + se * (1.0 - s.z - s.x * s.x) * innovation,
        s.z + omega_total * s.x * dt + cfg.gamma * (1.0 - s.z) * dt + se * s.x * (1.0 - s.z) * innovation};
    detail::check_blowup(next);
    return renormalize(next);
}

/// Nonunitary part of a step: relaxation towards the ground state (integrated
/// exactly over dt) plus the Ito measurement back-action driven by
/// `innovation`. At eta = 1 a pure input stays pure.
inline BlochState measurement_substep(const BlochState& s, double innovation, const SimConfig& cfg) {
    if (cfg.gamma == 0.0) return s;
    const double decay = std::exp(-cfg.gamma * cfg.dt);
    const double half_decay = std::exp(-0.5 * cfg.gamma * cfg.dt);
    const double k = std::sqrt(cfg.eta) * innovation;
    const BlochState next{s.x * half_decay + k * (1.0 - s.z - s.x * s.x),
                          1.0 - (1.0 - s.z) * decay + k * s.x * (1.0 - s.z)};
    if (cfg.eta == 1.0 && detail::is_pure(s)) {
        const double n = next.norm();
        if (n > 0.0 && std::isfinite(n)) return {next.x / n, next.z / n};
    }
    detail::check_blowup(next);
    return renormalize(next);
}

namespace detail {

/// Splits the population change of one rotation between drive and feedback in
/// proportion to their angles. For a vanishing total angle the derivative
/// dP_e/dtheta = -x/2 of the pre-rotation state takes over.
inline std::pair<double, double> attribute_rotation(double dPe, double theta_drive, double theta_fb,
                                                    const BlochState& before) {
    const double theta = theta_drive + theta_fb;
    const double slope = std::abs(theta) > 1e-12 ? dPe / theta : -0.5 * before.x;
    if (theta_fb == 0.0) return {dPe, 0.0};
    if (theta_drive == 0.0) return {0.0, dPe};
    return {slope * theta_drive, slope * theta_fb};
}

}  // namespace detail

/// One time step split into unitary and nonunitary sub-steps.
///
/// The drive rotation is applied in two halves around the nonunitary
/// sub-step, and the feedback rotation is applied together with the second
/// half, after the measurement back-action it responds to. `feedback` is called
/// with the state the step would end in without feedback and returns the
/// feedback rotation angle for this step.
///
/// The ledger satisfies dU = dW + dWF + dQ up to rounding.
template <class FeedbackFn>
StepResult split_step(const BlochState& s, const HomodyneSample& smp, double omega_drive,
                      const SimConfig& cfg, FeedbackFn&& feedback) {
    const double half_drive = 0.5 * omega_drive * cfg.dt;
    StepLedger led;

    const BlochState s1 = rotate_y(s, half_drive);
    led.dW = excited_population(s1) - excited_population(s);

    const double innovation = smp.dV - std::sqrt(cfg.eta) * cfg.gamma * s.x * cfg.dt;
    const BlochState s2 = measurement_substep(s1, innovation, cfg);
    led.dQ = excited_population(s2) - excited_population(s1);

    const double theta_fb = feedback(rotate_y(s2, half_drive), smp);
    const BlochState s3 = rotate_y(s2, half_drive + theta_fb);
    const auto [dw, dwf] =
        detail::attribute_rotation(excited_population(s3) - excited_population(s2), half_drive, theta_fb, s2);
    led.dW += dw;
    led.dWF = dwf;

    led.dU = excited_population(s3) - excited_population(s);
    led.dP_W = led.dW;
    led.dP_F = led.dWF;
    led.dP_Q = led.dQ;
    return {s3, led};
}

/// Split step with a feedback drive rate fixed in advance.
inline StepResult split_step(const BlochState& s, const HomodyneSample& smp, double omega_drive,
                             double omega_fb, const SimConfig& cfg) {
    return split_step(s, smp, omega_drive, cfg,
                      [&](const BlochState&, const HomodyneSample&) { return omega_fb * cfg.dt; });
}

}  // namespace qtraj
