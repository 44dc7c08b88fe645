#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rml/engine.hpp"
#include "rml/errors.hpp"

namespace rml {

// Flat `key = value` config with optional [section] headers and # comments.
// Unknown keys are rejected; unspecified keys keep their built-in defaults.
// Every key can be overridden by an environment variable RMLSIM_<KEY>
// (uppercased).
namespace config_detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

struct KeyBinding {
    std::function<void(ScenarioConfig&, const std::string&)> apply;
};

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': not a number: '" + v + "'");
    }
}

inline long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long n = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': not an integer: '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError("config key '" + key + "': not a boolean: '" + v + "'");
}

inline const std::map<std::string, KeyBinding>& bindings() {
    static const std::map<std::string, KeyBinding> table = [] {
        std::map<std::string, KeyBinding> m;
        auto dbl = [&m](const std::string& key, double ScenarioConfig::*field) {
            m[key] = {[key, field](ScenarioConfig& c, const std::string& v) {
                c.*field = to_double(key, v);
            }};
        };
        auto num = [&m](const std::string& key, auto setter) {
            m[key] = {[key, setter](ScenarioConfig& c, const std::string& v) {
                setter(c, to_double(key, v));
            }};
        };
        auto integer = [&m](const std::string& key, auto setter) {
            m[key] = {[key, setter](ScenarioConfig& c, const std::string& v) {
                setter(c, to_long(key, v));
            }};
        };

        // terrain
        num("terrain_width", [](ScenarioConfig& c, double v) { c.terrain.width = v; });
        num("terrain_depth", [](ScenarioConfig& c, double v) { c.terrain.depth = v; });
        num("bs_x", [](ScenarioConfig& c, double v) { c.terrain.bs_position.x = v; });
        num("bs_y", [](ScenarioConfig& c, double v) { c.terrain.bs_position.y = v; });
        num("bs_height", [](ScenarioConfig& c, double v) { c.terrain.bs_height = v; });
        num("bs_coverage_radius",
            [](ScenarioConfig& c, double v) { c.terrain.bs_coverage_radius = v; });
        m["enb_position_preset"] = {[](ScenarioConfig& c, const std::string& v) {
            c.enb_position_preset = to_bool("enb_position_preset", v);
        }};

        // scenario
        integer("n_vehicles", [](ScenarioConfig& c, long v) { c.n_vehicles = static_cast<int>(v); });
        integer("n_blockages", [](ScenarioConfig& c, long v) { c.n_blockages = static_cast<int>(v); });
        dbl("sim_time_s", &ScenarioConfig::sim_time_s);
        dbl("dt_s", &ScenarioConfig::dt_s);
        dbl("interpacket_ms", &ScenarioConfig::interpacket_ms);
        dbl("train_frac", &ScenarioConfig::train_frac);
        dbl("map_refresh_s", &ScenarioConfig::map_refresh_s);
        integer("seed", [](ScenarioConfig& c, long v) { c.seed = static_cast<std::uint64_t>(v); });
        m["mode"] = {[](ScenarioConfig& c, const std::string& v) {
            if (v == "rml") c.mode = Mode::RML;
            else if (v == "baseline") c.mode = Mode::Baseline;
            else throw ParseError("config key 'mode': expected rml|baseline, got '" + v + "'");
        }};
        m["relay_policy"] = {[](ScenarioConfig& c, const std::string& v) {
            if (v == "learned") c.select_mode = SelectMode::Learned;
            else if (v == "greedy_nearest") c.select_mode = SelectMode::GreedyNearest;
            else throw ParseError("config key 'relay_policy': expected learned|greedy_nearest");
        }};

        // blockages
        num("blockage_half_x", [](ScenarioConfig& c, double v) { c.blockage_half_x = v; });
        num("blockage_half_y", [](ScenarioConfig& c, double v) { c.blockage_half_y = v; });
        num("blockage_height", [](ScenarioConfig& c, double v) { c.blockage_height = v; });
        num("blockage_deploy_radius",
            [](ScenarioConfig& c, double v) { c.blockage_deploy_radius = v; });
        num("epsilon_height", [](ScenarioConfig& c, double v) { c.threshold.epsilon_height = v; });

        // mobility
        m["speed_mode"] = {[](ScenarioConfig& c, const std::string& v) {
            if (v == "constant") c.mobility.constant_speed = true;
            else if (v == "uniform") c.mobility.constant_speed = false;
            else throw ParseError("config key 'speed_mode': expected constant|uniform");
        }};
        num("speed_const", [](ScenarioConfig& c, double v) { c.mobility.speed_const = v; });
        num("speed_min", [](ScenarioConfig& c, double v) { c.mobility.speed_min = v; });
        num("speed_max", [](ScenarioConfig& c, double v) { c.mobility.speed_max = v; });
        num("pause_s", [](ScenarioConfig& c, double v) { c.mobility.pause_s = v; });
        num("large_vehicle_fraction",
            [](ScenarioConfig& c, double v) { c.mobility.large_vehicle_fraction = v; });
        num("large_vehicle_height",
            [](ScenarioConfig& c, double v) { c.mobility.large_vehicle_height = v; });

        // channel
        num("tx_power_dbm", [](ScenarioConfig& c, double v) { c.channel.tx_power_dbm = v; });
        num("bandwidth_hz", [](ScenarioConfig& c, double v) { c.channel.bandwidth_hz = v; });
        num("pl0_db", [](ScenarioConfig& c, double v) { c.channel.pl0_db = v; });
        num("exponent_los", [](ScenarioConfig& c, double v) { c.channel.exponent_los = v; });
        num("exponent_nlos", [](ScenarioConfig& c, double v) { c.channel.exponent_nlos = v; });
        num("shadow_sigma_los_db",
            [](ScenarioConfig& c, double v) { c.channel.shadow_sigma_los_db = v; });
        num("shadow_sigma_nlos_db",
            [](ScenarioConfig& c, double v) { c.channel.shadow_sigma_nlos_db = v; });
        num("rx_threshold_dbm", [](ScenarioConfig& c, double v) { c.channel.rx_threshold_dbm = v; });
        num("data_rate_bps", [](ScenarioConfig& c, double v) { c.channel.data_rate_bps = v; });
        integer("packet_bytes", [](ScenarioConfig& c, long v) { c.channel.packet_bytes = static_cast<int>(v); });
        num("retry_timeout_ms", [](ScenarioConfig& c, double v) { c.channel.retry_timeout_ms = v; });
        num("relay_proc_ms", [](ScenarioConfig& c, double v) { c.channel.relay_proc_ms = v; });
        integer("max_retries", [](ScenarioConfig& c, long v) { c.channel.max_retries = static_cast<int>(v); });
        integer("queue_capacity", [](ScenarioConfig& c, long v) { c.channel.queue_capacity = static_cast<int>(v); });

        // policy
        integer("grid_cells_per_side",
                [](ScenarioConfig& c, long v) { c.policy.grid_cells_per_side = static_cast<int>(v); });
        integer("sector_count", [](ScenarioConfig& c, long v) { c.policy.sector_count = static_cast<int>(v); });
        integer("max_k", [](ScenarioConfig& c, long v) { c.policy.max_actions = static_cast<int>(v); });
        num("alpha", [](ScenarioConfig& c, double v) { c.policy.alpha = v; });
        num("gamma", [](ScenarioConfig& c, double v) { c.policy.gamma = v; });
        num("epsilon", [](ScenarioConfig& c, double v) { c.policy.epsilon_initial = v; });
        num("epsilon_decay", [](ScenarioConfig& c, double v) { c.policy.epsilon_decay = v; });
        num("epsilon_floor", [](ScenarioConfig& c, double v) { c.policy.epsilon_floor = v; });
        integer("replay_capacity",
                [](ScenarioConfig& c, long v) { c.policy.replay_capacity = static_cast<std::size_t>(v); });
        integer("batch", [](ScenarioConfig& c, long v) { c.policy.batch = static_cast<std::size_t>(v); });
        integer("reset_interval",
                [](ScenarioConfig& c, long v) { c.policy.reset_interval = static_cast<std::uint64_t>(v); });
        return m;
    }();
    return table;
}

}  // namespace config_detail

inline constexpr const char* kEnvPrefix = "RMLSIM_";

inline ScenarioConfig parse_config_text(std::istream& is, bool apply_env = true) {
    using namespace config_detail;
    ScenarioConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') continue;  // section headers are cosmetic
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        auto it = bindings().find(key);
        if (it == bindings().end())
            throw ParseError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second.apply(cfg, value);
    }
    if (apply_env) {
        for (const auto& [key, binding] : bindings()) {
            const std::string env_name = kEnvPrefix + upper(key);
            if (const char* v = std::getenv(env_name.c_str())) binding.apply(cfg, v);
        }
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig parse_config(const std::string& path, bool apply_env = true) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    return parse_config_text(f, apply_env);
}

}  // namespace rml
