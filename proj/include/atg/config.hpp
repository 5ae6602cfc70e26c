#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "atg/learner.hpp"
#include "atg/rng.hpp"
#include "atg/serialize.hpp"
#include "atg/simworld.hpp"

namespace atg {

/// Everything one run needs: learner parameters, simulator parameters, and
/// the action set.
struct FullConfig {
    LearnerConfig learner;
    sim::SimConfig sim;
    bool extended_actions = false;

    std::vector<ActionKind> kinds() const { return action_set(extended_actions); }

    void set_seed(std::uint64_t seed) {
        learner.seed = seed;
        sim.seed = seed;
    }

    void validate() const {
        learner.validate();
        sim.validate();
    }
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline double cfg_double(const std::string& field, const std::string& raw) {
    try {
        size_t used = 0;
        double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config field '" + field + "': bad number '" + raw + "'");
    }
}

inline long cfg_long(const std::string& field, const std::string& raw) {
    long v = 0;
    auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size()) {
        throw ConfigError("config field '" + field + "': bad integer '" + raw + "'");
    }
    return v;
}

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Parses `key = value` lines ('#' comments allowed). Unknown keys and
/// out-of-range values are rejected with the field named.
inline FullConfig parse_config(const std::string& text) {
    FullConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        }

        if (key == "actions") {
            if (val == "orbit") {
                cfg.extended_actions = false;
            } else if (val == "orbit+grasp") {
                cfg.extended_actions = true;
            } else {
                throw ConfigError("config field 'actions': expected orbit or orbit+grasp");
            }
        } else if (key == "seed") {
            cfg.set_seed(static_cast<std::uint64_t>(detail::cfg_long(key, val)));
        } else if (key == "alpha") {
            cfg.learner.alpha = detail::cfg_double(key, val);
        } else if (key == "gamma") {
            cfg.learner.gamma = detail::cfg_double(key, val);
        } else if (key == "epsilon_explore") {
            cfg.learner.epsilon_explore = detail::cfg_double(key, val);
        } else if (key == "r_max") {
            cfg.learner.r_max = detail::cfg_double(key, val);
        } else if (key == "epsilon_stop") {
            cfg.learner.epsilon_stop = detail::cfg_double(key, val);
        } else if (key == "max_actions") {
            cfg.learner.max_actions = detail::cfg_long(key, val);
        } else if (key == "lhs_strata_orbit") {
            cfg.learner.lhs_strata_orbit = static_cast<int>(detail::cfg_long(key, val));
        } else if (key == "lhs_strata_grasp") {
            cfg.learner.lhs_strata_grasp = static_cast<int>(detail::cfg_long(key, val));
        } else if (key == "thin_var") {
            cfg.learner.thin_var = detail::cfg_double(key, val);
        } else if (key == "wide_var") {
            cfg.learner.wide_var = detail::cfg_double(key, val);
        } else if (key == "orbit_radius") {
            cfg.sim.orbit_radius = detail::cfg_double(key, val);
        } else if (key == "cube_side") {
            cfg.sim.cube_side = detail::cfg_double(key, val);
        } else if (key == "sector_half_width") {
            cfg.sim.sector_half_width = detail::cfg_double(key, val);
        } else if (key == "act_noise_sigma") {
            cfg.sim.act_noise_sigma = detail::cfg_double(key, val);
        } else if (key == "obs_noise_sigma") {
            cfg.sim.obs_noise_sigma = detail::cfg_double(key, val);
        } else if (key == "grasp_tol_xy") {
            cfg.sim.grasp_tol_xy = detail::cfg_double(key, val);
        } else if (key == "grasp_tol_z") {
            cfg.sim.grasp_tol_z = detail::cfg_double(key, val);
        } else if (key == "residual_tol") {
            cfg.sim.residual_tol = detail::cfg_double(key, val);
        } else if (key == "kappa") {
            cfg.sim.kappa = detail::cfg_double(key, val);
        } else {
            throw ConfigError("config field '" + key + "': unknown key");
        }
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

/// Canonical text form; the hash of this string identifies the settings.
inline std::string serialize_config(const FullConfig& cfg) {
    std::string out;
    out += "actions = " + std::string(cfg.extended_actions ? "orbit+grasp" : "orbit") + "\n";
    out += "seed = " + std::to_string(cfg.learner.seed) + "\n";
    out += "alpha = " + fmt_double(cfg.learner.alpha) + "\n";
    out += "gamma = " + fmt_double(cfg.learner.gamma) + "\n";
    out += "epsilon_explore = " + fmt_double(cfg.learner.epsilon_explore) + "\n";
    out += "r_max = " + fmt_double(cfg.learner.r_max) + "\n";
    out += "epsilon_stop = " + fmt_double(cfg.learner.epsilon_stop) + "\n";
    out += "max_actions = " + std::to_string(cfg.learner.max_actions) + "\n";
    out += "lhs_strata_orbit = " + std::to_string(cfg.learner.lhs_strata_orbit) + "\n";
    out += "lhs_strata_grasp = " + std::to_string(cfg.learner.lhs_strata_grasp) + "\n";
    out += "thin_var = " + fmt_double(cfg.learner.thin_var) + "\n";
    out += "wide_var = " + fmt_double(cfg.learner.wide_var) + "\n";
    out += "orbit_radius = " + fmt_double(cfg.sim.orbit_radius) + "\n";
    out += "cube_side = " + fmt_double(cfg.sim.cube_side) + "\n";
    out += "sector_half_width = " + fmt_double(cfg.sim.sector_half_width) + "\n";
    out += "act_noise_sigma = " + fmt_double(cfg.sim.act_noise_sigma) + "\n";
    out += "obs_noise_sigma = " + fmt_double(cfg.sim.obs_noise_sigma) + "\n";
    out += "grasp_tol_xy = " + fmt_double(cfg.sim.grasp_tol_xy) + "\n";
    out += "grasp_tol_z = " + fmt_double(cfg.sim.grasp_tol_z) + "\n";
    out += "residual_tol = " + fmt_double(cfg.sim.residual_tol) + "\n";
    out += "kappa = " + fmt_double(cfg.sim.kappa) + "\n";
    return out;
}

/// Hex hash of the canonical config, written into artifact headers.
inline std::string config_hash(const FullConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(serialize_config(cfg))));
    return buf;
}

/// Standard provenance header for artifacts written by the tools.
inline std::string provenance(const FullConfig& cfg) {
    return "seed=" + std::to_string(cfg.learner.seed) + " config_hash=" + config_hash(cfg);
}

}  // namespace atg
