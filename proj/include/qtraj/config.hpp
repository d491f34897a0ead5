#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qtraj {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an integration step leaves the Bloch disk by more than the
/// renormalization can sensibly absorb, which means dt is too coarse.
class NumericalBlowup : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StatsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Preparation { ground, excited, thermal };

/// Physical and numerical parameters. Times are in microseconds and rates in
/// inverse microseconds.
struct SimConfig {
    double gamma = 1.7;                        ///< radiative decay rate
    double omega_r = 2.0 * std::numbers::pi;   ///< Bloch rotation rate of the drive (rad/us)
    double eta = 0.35;                         ///< detection quantum efficiency
    double dt = 0.02;                          ///< step
    double tau = 8.0;                          ///< protocol duration
    double phi = 0.0;                          ///< extra reference phase (rad)
    std::uint64_t seed = 1;
    Preparation initial = Preparation::ground;
    double beta = 3.5;             ///< used when initial == thermal
    double prep_error = 0.0;       ///< probability the preparation lands in the other eigenstate
    bool sample_outcome = true;    ///< draw a projective outcome at tau

    std::size_t steps() const { return static_cast<std::size_t>(std::llround(tau / dt)); }

    void validate() const {
        if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
        if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
        if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
        if (!(tau >= 0.0)) throw ConfigError("tau must be >= 0");
        if (!std::isfinite(omega_r)) throw ConfigError("omega_r must be finite");
        const double n = tau / dt;
        if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
            throw ConfigError("tau must be an integer multiple of dt");
        if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
        if (!(prep_error >= 0.0 && prep_error <= 1.0)) throw ConfigError("prep_error must lie in [0, 1]");
    }
};

/// True when two configurations describe the same dynamics, ignoring the
/// preparation and the seed.
inline bool same_dynamics(const SimConfig& a, const SimConfig& b) {
    return a.gamma == b.gamma && a.omega_r == b.omega_r && a.eta == b.eta && a.dt == b.dt &&
           a.tau == b.tau && a.phi == b.phi;
}

inline std::string to_string(Preparation p) {
    switch (p) {
        case Preparation::ground: return "ground";
        case Preparation::excited: return "excited";
        case Preparation::thermal: return "thermal";
    }
    return "ground";
}

inline Preparation parse_preparation(const std::string& s) {
    if (s == "ground" || s == "0") return Preparation::ground;
    if (s == "excited" || s == "1") return Preparation::excited;
    if (s == "thermal") return Preparation::thermal;
    throw ConfigError("unknown initial state '" + s + "' (expected ground, excited or thermal)");
}

}  // namespace qtraj
