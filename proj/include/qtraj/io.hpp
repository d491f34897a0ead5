#pragma once

// Run settings, the key = value configuration format, and CSV/JSON writers.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "qtraj/config.hpp"
#include "qtraj/feedback.hpp"
#include "qtraj/trajectory.hpp"

#ifndef QTRAJ_VERSION
#define QTRAJ_VERSION "0.1.0"
#endif

namespace qtraj {

/// Everything a command needs, in the units used by the configuration file.
struct RunSettings {
    // [system]
    double gamma_per_us = 1.7;
    double omega_mhz = 1.0;  ///< Rabi frequency W / 2 pi
    double eta = 0.35;
    double dt_ns = 20.0;
    double tau_us = 8.0;
    double phi_rad = 0.0;
    double beta = 3.5;
    Preparation initial = Preparation::ground;
    double prep_error = 0.0;
    // [feedback]
    FeedbackMode mode = FeedbackMode::none;
    double gain_per_us = 34.0;
    double offset = -1.0;
    double delay_ns = 100.0;
    std::optional<double> feedback_phi_rad;
    // [run]
    std::uint64_t seed = 1;
    std::size_t n_traj = 10000;
    unsigned workers = 0;
    std::string out_dir = "qtraj-out";
    bool sample_outcome = true;
    // [jarzynski]
    std::vector<double> eta_list{0.35, 0.6, 0.8, 1.0};
    std::size_t n_per_prep = 500;
    double window_us = 1.0;
    std::size_t bootstrap = 1000;
    // [sweep]
    double gain_min_per_us = 10.0;
    double gain_max_per_us = 70.0;
    double gain_step_per_us = 10.0;
    double offset_min = -2.0;
    double offset_max = 0.5;
    double offset_step = 0.5;
    std::size_t sweep_n_traj = 1000;

    SimConfig sim() const {
        SimConfig c;
        c.gamma = gamma_per_us;
        c.omega_r = 2.0 * std::numbers::pi * omega_mhz;
        c.eta = eta;
        c.dt = dt_ns * 1e-3;
        c.tau = tau_us;
        c.phi = phi_rad;
        c.seed = seed;
        c.initial = initial;
        c.beta = beta;
        c.prep_error = prep_error;
        c.sample_outcome = sample_outcome;
        c.validate();
        return c;
    }

    std::size_t delay_steps() const {
        const double n = delay_ns / dt_ns;
        if (!(n >= 0.0) || std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
            throw ConfigError("feedback delay_ns must be a non-negative multiple of dt_ns");
        return static_cast<std::size_t>(std::llround(n));
    }

    FeedbackConfig feedback() const {
        FeedbackConfig f;
        f.mode = mode;
        f.gain = gain_per_us;
        f.offset = offset;
        f.phi = feedback_phi_rad;
        f.delay_steps = delay_steps();
        return f;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected a number, got '" + v + "'");
    }
}

inline std::uint64_t parse_unsigned(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
        const unsigned long long d = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected a non-negative integer, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& v, const std::string& where) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(where + ": expected true or false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& v, const std::string& where) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), where));
    if (out.empty()) throw ConfigError(where + ": empty list");
    return out;
}

}  // namespace detail

/// Applies one `section.key = value` assignment. `where` prefixes diagnostics.
inline void apply_setting(RunSettings& s, const std::string& section, const std::string& key,
                          const std::string& value, const std::string& where) {
    using namespace detail;
    const std::string id = section + "." + key;
    const std::string at = where + " (" + id + ")";
    auto num = [&] { return parse_double(value, at); };
    auto uint = [&] { return parse_unsigned(value, at); };
    try {
        if (id == "system.gamma_per_us") s.gamma_per_us = num();
        else if (id == "system.omega_mhz") s.omega_mhz = num();
        else if (id == "system.eta") s.eta = num();
        else if (id == "system.dt_ns") s.dt_ns = num();
        else if (id == "system.tau_us") s.tau_us = num();
        else if (id == "system.phi_rad") s.phi_rad = num();
        else if (id == "system.beta") s.beta = num();
        else if (id == "system.initial") s.initial = parse_preparation(value);
        else if (id == "system.prep_error") s.prep_error = num();
        else if (id == "feedback.mode") s.mode = parse_feedback_mode(value);
        else if (id == "feedback.gain_per_us") s.gain_per_us = num();
        else if (id == "feedback.offset") s.offset = num();
        else if (id == "feedback.delay_ns") s.delay_ns = num();
        else if (id == "feedback.phi_rad") s.feedback_phi_rad = num();
        else if (id == "run.seed") s.seed = uint();
        else if (id == "run.n_traj") s.n_traj = uint();
        else if (id == "run.workers") s.workers = static_cast<unsigned>(uint());
        else if (id == "run.out_dir") s.out_dir = value;
        else if (id == "run.sample_outcome") s.sample_outcome = parse_bool(value, at);
        else if (id == "jarzynski.eta_list") s.eta_list = parse_list(value, at);
        else if (id == "jarzynski.n_per_prep") s.n_per_prep = uint();
        else if (id == "jarzynski.window_us") s.window_us = num();
        else if (id == "jarzynski.bootstrap") s.bootstrap = uint();
        else if (id == "sweep.gain_min_per_us") s.gain_min_per_us = num();
        else if (id == "sweep.gain_max_per_us") s.gain_max_per_us = num();
        else if (id == "sweep.gain_step_per_us") s.gain_step_per_us = num();
        else if (id == "sweep.offset_min") s.offset_min = num();
        else if (id == "sweep.offset_max") s.offset_max = num();
        else if (id == "sweep.offset_step") s.offset_step = num();
        else if (id == "sweep.n_traj") s.sweep_n_traj = uint();
        else throw ConfigError(where + ": unknown key '" + id + "'");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(where, 0) == 0) throw;
        throw ConfigError(at + ": " + msg);
    }
}

/// Parses the key = value format: `[section]` headers, `#` or `;` comments,
/// one assignment per line.
inline void parse_settings(std::istream& in, RunSettings& s, const std::string& name = "config") {
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string where = name + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        if (section.empty()) throw ConfigError(where + ": assignment outside a section");
        apply_setting(s, section, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), where);
    }
}

inline RunSettings load_settings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    RunSettings s;
    parse_settings(in, s, path);
    return s;
}

/// Shortest round-trip representation; stable across runs.
inline std::string fmt_num(double v) { return fmt::format("{}", v); }

/// RFC 4180 writer: CRLF line ends, fields quoted only when needed.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    CsvWriter& field(const std::string& v) {
        sep();
        if (v.find_first_of(",\"\r\n") == std::string::npos) {
            out_ << v;
        } else {
            out_ << '"';
            for (char c : v) {
                if (c == '"') out_ << '"';
                out_ << c;
            }
            out_ << '"';
        }
        return *this;
    }
    CsvWriter& field(double v) { return field(fmt_num(v)); }
    CsvWriter& field(long long v) { return field(std::to_string(v)); }
    CsvWriter& field(std::size_t v) { return field(std::to_string(v)); }
    CsvWriter& field(int v) { return field(std::to_string(v)); }

    CsvWriter& row(std::initializer_list<std::string> headers) {
        for (const auto& h : headers) field(h);
        return end();
    }
    CsvWriter& end() {
        out_ << "\r\n";
        first_ = true;
        return *this;
    }

private:
    void sep() {
        if (!first_) out_ << ',';
        first_ = false;
    }
    std::ostream& out_;
    bool first_ = true;
};

/// One row per step: t, x, z, dV, dW, dWF, dQ, dU.
inline void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& rec) {
    CsvWriter csv(out);
    csv.row({"t", "x", "z", "dV", "dW", "dWF", "dQ", "dU"});
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const auto& s = rec.states[i];
        const auto& l = rec.ledgers[i];
        csv.field(rec.times[i]).field(s.x).field(s.z).field(rec.samples[i].dV);
        csv.field(l.dW).field(l.dWF).field(l.dQ).field(l.dU).end();
    }
}

inline nlohmann::json to_json(const SimConfig& c) {
    return {{"gamma_per_us", c.gamma}, {"omega_r_rad_per_us", c.omega_r}, {"eta", c.eta},
            {"dt_us", c.dt},          {"tau_us", c.tau},                  {"phi_rad", c.phi},
            {"seed", c.seed},         {"initial", to_string(c.initial)},  {"beta", c.beta},
            {"prep_error", c.prep_error}, {"sample_outcome", c.sample_outcome}};
}

inline nlohmann::json to_json(const FeedbackConfig& f) {
    nlohmann::json j{{"mode", to_string(f.mode)},
                     {"gain_per_us", f.gain},
                     {"offset", f.offset},
                     {"delay_steps", f.delay_steps}};
    j["phi_rad"] = f.phi ? nlohmann::json(*f.phi) : nlohmann::json(nullptr);
    return j;
}

/// Everything that influences results. The output directory and the worker
/// count are deliberately absent.
inline nlohmann::json to_json(const RunSettings& s) {
    nlohmann::json j;
    j["system"] = {{"gamma_per_us", s.gamma_per_us}, {"omega_mhz", s.omega_mhz}, {"eta", s.eta},
                   {"dt_ns", s.dt_ns}, {"tau_us", s.tau_us}, {"phi_rad", s.phi_rad}, {"beta", s.beta},
                   {"initial", to_string(s.initial)}, {"prep_error", s.prep_error}};
    j["feedback"] = {{"mode", to_string(s.mode)}, {"gain_per_us", s.gain_per_us}, {"offset", s.offset},
                     {"delay_ns", s.delay_ns}};
    j["feedback"]["phi_rad"] = s.feedback_phi_rad ? nlohmann::json(*s.feedback_phi_rad) : nlohmann::json(nullptr);
    j["run"] = {{"seed", s.seed}, {"n_traj", s.n_traj}, {"sample_outcome", s.sample_outcome}};
    j["jarzynski"] = {{"eta_list", s.eta_list}, {"n_per_prep", s.n_per_prep}, {"window_us", s.window_us},
                      {"bootstrap", s.bootstrap}};
    j["sweep"] = {{"gain_min_per_us", s.gain_min_per_us}, {"gain_max_per_us", s.gain_max_per_us},
                  {"gain_step_per_us", s.gain_step_per_us}, {"offset_min", s.offset_min},
                  {"offset_max", s.offset_max}, {"offset_step", s.offset_step}, {"n_traj", s.sweep_n_traj}};
    return j;
}

/// FNV-1a over the canonical settings dump; identifies a run configuration.
inline std::string run_id(const std::string& command, const RunSettings& s) {
    const std::string text = command + "\n" + to_json(s).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

}  // namespace qtraj
