#pragma once

// Two-level system restricted to the x-z plane of the Bloch sphere.
//
// Convention: z = +1 is the ground state |0>. The qubit Hamiltonian is
// H = -(hbar w_q / 2) sigma_z, so with energies measured in units of hbar w_q
// the eigenvalues are E_0 = -1/2 (ground) and E_1 = +1/2 (excited), and the
// internal energy of a state is U = P_e - 1/2.

#include <cmath>
#include <numbers>

namespace qtraj {

inline constexpr double kBlochTolerance = 1e-9;

struct BlochState {
    double x = 0.0;  ///< <sigma_x>, equal to 2 Re rho_01
    double z = 1.0;  ///< <sigma_z>, +1 is the ground state

    static constexpr BlochState ground() { return {0.0, 1.0}; }
    static constexpr BlochState excited() { return {0.0, -1.0}; }

    double norm_squared() const { return x * x + z * z; }
    double norm() const { return std::hypot(x, z); }
    bool valid() const { return norm_squared() <= 1.0 + kBlochTolerance; }

    friend bool operator==(const BlochState&, const BlochState&) = default;
};

/// Energy bookkeeping in units of hbar w_q.
struct EnergyScale {
    double hbar_omega_q = 1.0;
    double beta = 0.0;  ///< inverse temperature in units of 1/(hbar w_q)

    static constexpr double ground_energy() { return -0.5; }
    static constexpr double excited_energy() { return 0.5; }
};

inline double excited_population(const BlochState& s) { return 0.5 * (1.0 - s.z); }
inline double ground_population(const BlochState& s) { return 0.5 * (1.0 + s.z); }

/// tr[Pi_m rho] for m in {0, 1}.
inline double population(const BlochState& s, int m) {
    return m == 0 ? ground_population(s) : excited_population(s);
}

/// Internal energy tr[H rho] in units of hbar w_q.
inline double internal_energy(const BlochState& s) { return excited_population(s) - 0.5; }

inline double purity(const BlochState& s) { return 0.5 * (1.0 + s.norm_squared()); }

/// Exact rotation about y. For small theta this reproduces
/// dz = theta * x, dx = -theta * z, so a drive of angular rate W applied for dt
/// is rotate_y(s, W * dt). The norm is preserved exactly.
inline BlochState rotate_y(const BlochState& s, double theta) {
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    return {s.x * c - s.z * sn, s.z * c + s.x * sn};
}

/// Oscillation phase in the x-z plane, measured so that rotate_y(s, a) advances
/// it by a. The ground state has phase 0 and the excited state phase pi.
inline double bloch_phase(const BlochState& s) { return std::atan2(-s.x, s.z); }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::remainder(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    return a;
}

/// P[m][n] style transition probabilities between energy eigenstates; pXY is
/// the probability of ending in X having started in Y.
struct TransitionMatrix {
    double p00 = 1.0;
    double p11 = 1.0;
    double p10 = 0.0;
    double p01 = 0.0;

    double operator()(int m, int n) const {
        if (m == 0) return n == 0 ? p00 : p01;
        return n == 0 ? p10 : p11;
    }
};

/// Closed-system Rabi transition probabilities P00 = P11 = cos^2(omega t).
/// Note that omega here is half the Bloch rotation rate: a drive rotating the
/// Bloch vector at rate W gives closed_rabi_probabilities(W / 2, t).
inline TransitionMatrix closed_rabi_probabilities(double omega, double t) {
    const double c = std::cos(omega * t);
    const double s = std::sin(omega * t);
    return {c * c, c * c, s * s, s * s};
}

}  // namespace qtraj
