#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rml/engine.hpp"
#include "rml/errors.hpp"

namespace rml {

enum class SweepAxis { Blockages, Vehicles };

struct SweepSpec {
    SweepAxis axis = SweepAxis::Blockages;
    std::vector<int> values;
    int fixed_value = 20;       // the non-swept count
    std::vector<std::uint64_t> seeds;
    ScenarioConfig base;        // everything not controlled by the sweep
    int jobs = 1;

    void validate() const {
        if (values.empty()) throw ValidationError("sweep: values must be nonempty");
        if (!std::is_sorted(values.begin(), values.end()) ||
            std::adjacent_find(values.begin(), values.end()) != values.end())
            throw ValidationError("sweep: values must be strictly increasing");
        if (seeds.empty()) throw ValidationError("sweep: seeds must be nonempty");
        if (jobs < 1) throw ValidationError("sweep: jobs must be >= 1");
    }
};

inline SweepSpec sweep_preset(const std::string& name, const ScenarioConfig& base,
                              int n_seeds) {
    SweepSpec spec;
    spec.base = base;
    for (int s = 1; s <= n_seeds; ++s) spec.seeds.push_back(static_cast<std::uint64_t>(s));
    if (name == "fig4-6") {
        spec.axis = SweepAxis::Blockages;
        spec.values = {2, 4, 6, 8, 10};
        spec.fixed_value = 20;  // vehicles
    } else if (name == "fig7-9") {
        spec.axis = SweepAxis::Vehicles;
        spec.values = {10, 20, 30, 40, 50};
        spec.fixed_value = 10;  // blockages
    } else {
        throw ValidationError("unknown sweep preset: " + name);
    }
    return spec;
}

struct SweepRow {
    SweepAxis axis = SweepAxis::Blockages;
    int value = 0;
    Mode mode = Mode::RML;
    int seed_count = 0;
    double pdr_mean = 0.0, pdr_sd = 0.0;
    double latency_ms_mean = 0.0, latency_ms_sd = 0.0;
    double throughput_mbps_mean = 0.0, throughput_mbps_sd = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;   // sorted by (value, mode)
    SweepSpec spec;
};

namespace sweep_detail {

inline void mean_sd(const std::vector<double>& xs, double& mean, double& sd) {
    const double n = static_cast<double>(xs.size());
    mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    sd = xs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
}

inline ScenarioConfig point_config(const SweepSpec& spec, int value, Mode mode,
                                   std::uint64_t seed) {
    ScenarioConfig cfg = spec.base;
    if (spec.axis == SweepAxis::Blockages) {
        cfg.n_blockages = value;
        cfg.n_vehicles = spec.fixed_value;
    } else {
        cfg.n_vehicles = value;
        cfg.n_blockages = spec.fixed_value;
    }
    cfg.mode = mode;
    cfg.seed = seed;
    return cfg;
}

}  // namespace sweep_detail

inline const char* mode_name(Mode m) { return m == Mode::RML ? "rml" : "baseline"; }
inline const char* axis_name(SweepAxis a) {
    return a == SweepAxis::Blockages ? "blockages" : "vehicles";
}

// Runs every (value, mode, seed) scenario, up to `jobs` at a time, and
// aggregates per point. Result rows are deterministic regardless of
// completion order.
inline SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    struct Point {
        int value;
        Mode mode;
        std::uint64_t seed;
    };
    std::vector<Point> points;
    for (int value : spec.values)
        for (Mode mode : {Mode::RML, Mode::Baseline})
            for (std::uint64_t seed : spec.seeds) points.push_back({value, mode, seed});

    std::vector<MetricsRecord> metrics(points.size());
    std::vector<std::string> failures(points.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= points.size()) return;
            const Point& p = points[i];
            try {
                metrics[i] =
                    run_scenario(sweep_detail::point_config(spec, p.value, p.mode, p.seed))
                        .metrics;
            } catch (const std::exception& e) {
                failures[i] = std::string(axis_name(spec.axis)) + "=" +
                              std::to_string(p.value) + " mode=" + mode_name(p.mode) +
                              " seed=" + std::to_string(p.seed) + ": " + e.what();
            }
        }
    };
    const int n_workers = std::min<int>(spec.jobs, static_cast<int>(points.size()));
    std::vector<std::thread> threads;
    for (int t = 1; t < n_workers; ++t) threads.emplace_back(worker);
    worker();
    for (std::thread& t : threads) t.join();
    for (const std::string& f : failures)
        if (!f.empty()) throw ConfigError("sweep point failed: " + f);

    SweepResult result;
    result.spec = spec;
    const std::size_t per_point = spec.seeds.size();
    std::size_t i = 0;
    for (int value : spec.values) {
        for (Mode mode : {Mode::RML, Mode::Baseline}) {
            std::vector<double> pdr, lat, thr;
            for (std::size_t s = 0; s < per_point; ++s, ++i) {
                pdr.push_back(metrics[i].pdr);
                lat.push_back(metrics[i].mean_latency_ms);
                thr.push_back(metrics[i].throughput_mbps);
            }
            SweepRow row;
            row.axis = spec.axis;
            row.value = value;
            row.mode = mode;
            row.seed_count = static_cast<int>(per_point);
            sweep_detail::mean_sd(pdr, row.pdr_mean, row.pdr_sd);
            sweep_detail::mean_sd(lat, row.latency_ms_mean, row.latency_ms_sd);
            sweep_detail::mean_sd(thr, row.throughput_mbps_mean, row.throughput_mbps_sd);
            result.rows.push_back(row);
        }
    }
    std::sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (a.value != b.value) return a.value < b.value;
        return static_cast<int>(a.mode) < static_cast<int>(b.mode);
    });
    return result;
}

enum class ResultFormat { Delimited, Structured };

inline nlohmann::json config_to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["terrain"] = {{"width", c.terrain.width},
                    {"depth", c.terrain.depth},
                    {"bs_x", c.terrain.bs_position.x},
                    {"bs_y", c.terrain.bs_position.y},
                    {"bs_height", c.terrain.bs_height},
                    {"bs_coverage_radius", c.terrain.bs_coverage_radius}};
    j["scenario"] = {{"n_vehicles", c.n_vehicles},
                     {"n_blockages", c.n_blockages},
                     {"mode", mode_name(c.mode)},
                     {"sim_time_s", c.sim_time_s},
                     {"dt_s", c.dt_s},
                     {"interpacket_ms", c.interpacket_ms},
                     {"train_frac", c.train_frac},
                     {"map_refresh_s", c.map_refresh_s},
                     {"seed", c.seed},
                     {"enb_position_preset", c.enb_position_preset},
                     {"relay_policy", c.select_mode == SelectMode::Learned
                                          ? "learned"
                                          : "greedy_nearest"}};
    j["blockage"] = {{"half_x", c.blockage_half_x},
                     {"half_y", c.blockage_half_y},
                     {"deploy_radius", c.blockage_deploy_radius},
                     {"height", c.blockage_height},
                     {"epsilon_height", c.threshold.epsilon_height},
                     {"temp_half", c.temp_blockage_half}};
    j["mobility"] = {{"constant_speed", c.mobility.constant_speed},
                     {"speed_const", c.mobility.speed_const},
                     {"speed_min", c.mobility.speed_min},
                     {"speed_max", c.mobility.speed_max},
                     {"pause_s", c.mobility.pause_s},
                     {"large_vehicle_fraction", c.mobility.large_vehicle_fraction},
                     {"large_vehicle_height", c.mobility.large_vehicle_height}};
    j["channel"] = {{"tx_power_dbm", c.channel.tx_power_dbm},
                    {"bandwidth_hz", c.channel.bandwidth_hz},
                    {"pl0_db", c.channel.pl0_db},
                    {"exponent_los", c.channel.exponent_los},
                    {"exponent_nlos", c.channel.exponent_nlos},
                    {"shadow_sigma_los_db", c.channel.shadow_sigma_los_db},
                    {"shadow_sigma_nlos_db", c.channel.shadow_sigma_nlos_db},
                    {"rx_threshold_dbm", c.channel.rx_threshold_dbm},
                    {"data_rate_bps", c.channel.data_rate_bps},
                    {"packet_bytes", c.channel.packet_bytes},
                    {"retry_timeout_ms", c.channel.retry_timeout_ms},
                    {"relay_proc_ms", c.channel.relay_proc_ms},
                    {"max_retries", c.channel.max_retries},
                    {"queue_capacity", c.channel.queue_capacity}};
    j["policy"] = {{"grid_cells_per_side", c.policy.grid_cells_per_side},
                   {"sector_count", c.policy.sector_count},
                   {"max_k", c.policy.max_actions},
                   {"alpha", c.policy.alpha},
                   {"gamma", c.policy.gamma},
                   {"epsilon", c.policy.epsilon_initial},
                   {"epsilon_decay", c.policy.epsilon_decay},
                   {"epsilon_floor", c.policy.epsilon_floor},
                   {"replay_capacity", c.policy.replay_capacity},
                   {"batch", c.policy.batch},
                   {"reset_interval", c.policy.reset_interval}};
    return j;
}

inline void write_results(const SweepResult& result, std::ostream& os, ResultFormat fmt) {
    if (result.rows.empty()) throw EmptyTrace("write_results: empty table");
    if (fmt == ResultFormat::Delimited) {
        os << "axis,value,mode,seed_count,pdr_mean,pdr_sd,latency_ms_mean,latency_ms_sd,"
              "throughput_mbps_mean,throughput_mbps_sd\n";
        char buf[320];
        for (const SweepRow& r : result.rows) {
            std::snprintf(buf, sizeof(buf), "%s,%d,%s,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                          axis_name(r.axis), r.value, mode_name(r.mode), r.seed_count,
                          r.pdr_mean, r.pdr_sd, r.latency_ms_mean, r.latency_ms_sd,
                          r.throughput_mbps_mean, r.throughput_mbps_sd);
            os << buf;
        }
        return;
    }
    nlohmann::json j;
    j["axis"] = axis_name(result.spec.axis);
    j["fixed_value"] = result.spec.fixed_value;
    j["seeds"] = result.spec.seeds;
    j["base_config"] = config_to_json(result.spec.base);
    j["rows"] = nlohmann::json::array();
    for (const SweepRow& r : result.rows) {
        j["rows"].push_back({{"axis", axis_name(r.axis)},
                             {"value", r.value},
                             {"mode", mode_name(r.mode)},
                             {"seed_count", r.seed_count},
                             {"pdr_mean", r.pdr_mean},
                             {"pdr_sd", r.pdr_sd},
                             {"latency_ms_mean", r.latency_ms_mean},
                             {"latency_ms_sd", r.latency_ms_sd},
                             {"throughput_mbps_mean", r.throughput_mbps_mean},
                             {"throughput_mbps_sd", r.throughput_mbps_sd}});
    }
    os << j.dump(2) << "\n";
}

inline void write_results_file(const SweepResult& result, const std::string& path,
                               ResultFormat fmt) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open output file: " + path);
    write_results(result, f, fmt);
}

// Reads the rows back from a structured summary; inverse of the Structured
// writer for the tabular part.
inline std::vector<SweepRow> read_structured_rows(std::istream& is) {
    nlohmann::json j;
    is >> j;
    std::vector<SweepRow> rows;
    for (const auto& rj : j.at("rows")) {
        SweepRow r;
        r.axis = rj.at("axis") == "blockages" ? SweepAxis::Blockages : SweepAxis::Vehicles;
        r.value = rj.at("value");
        r.mode = rj.at("mode") == "rml" ? Mode::RML : Mode::Baseline;
        r.seed_count = rj.at("seed_count");
        r.pdr_mean = rj.at("pdr_mean");
        r.pdr_sd = rj.at("pdr_sd");
        r.latency_ms_mean = rj.at("latency_ms_mean");
        r.latency_ms_sd = rj.at("latency_ms_sd");
        r.throughput_mbps_mean = rj.at("throughput_mbps_mean");
        r.throughput_mbps_sd = rj.at("throughput_mbps_sd");
        rows.push_back(r);
    }
    return rows;
}

}  // namespace rml
