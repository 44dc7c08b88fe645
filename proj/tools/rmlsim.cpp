// rmlsim — deterministic V2X mmWave relay simulator CLI.
//
//   rmlsim simulate --config PATH [--seed N] [--mode rml|baseline]
//                   [--blockages N] [--vehicles N] [--out DIR]
//   rmlsim sweep    --preset fig4-6|fig7-9 [--seeds N] [--jobs N] [--out DIR]
//   rmlsim validate --config PATH

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rml/config.hpp"
#include "rml/engine.hpp"
#include "rml/sweep.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_simulate(const std::string& config_path, int seed, const std::string& mode,
                 int blockages, int vehicles, const std::string& out_dir,
                 const std::string& load_policy, const std::string& save_policy) {
    rml::ScenarioConfig cfg =
        config_path.empty() ? rml::ScenarioConfig{} : rml::parse_config(config_path);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (mode == "rml") cfg.mode = rml::Mode::RML;
    else if (mode == "baseline") cfg.mode = rml::Mode::Baseline;
    else if (!mode.empty()) throw rml::ValidationError("--mode must be rml or baseline");
    if (blockages >= 0) cfg.n_blockages = blockages;
    if (vehicles >= 0) cfg.n_vehicles = vehicles;
    cfg.validate();

    rml::ScenarioRun run(cfg);
    if (!load_policy.empty()) {
        std::ifstream f(load_policy);
        if (!f) throw rml::IoError("cannot open policy snapshot: " + load_policy);
        run.policy().import_snapshot(f);
    }
    rml::RunResult result = run.run();
    if (!save_policy.empty()) {
        std::ofstream f(save_policy);
        if (!f) throw rml::IoError("cannot open policy snapshot for writing: " + save_policy);
        run.policy().export_snapshot(f);
    }

    fs::create_directories(out_dir);
    {
        std::ofstream trace(fs::path(out_dir) / "trace.csv");
        if (!trace) throw rml::IoError("cannot write trace file");
        rml::write_trace(result.records, trace);
    }
    {
        nlohmann::json j;
        j["config"] = rml::config_to_json(cfg);
        j["metrics"] = {{"pdr", result.metrics.pdr},
                        {"pdr_nlos", result.metrics.pdr_nlos},
                        {"mean_latency_ms", result.metrics.mean_latency_ms},
                        {"throughput_mbps", result.metrics.throughput_mbps},
                        {"messages_sent", result.metrics.messages_sent},
                        {"messages_delivered", result.metrics.messages_delivered}};
        std::ofstream mf(fs::path(out_dir) / "metrics.json");
        if (!mf) throw rml::IoError("cannot write metrics file");
        mf << j.dump(2) << "\n";
    }

    std::printf("mode=%s vehicles=%d blockages=%d seed=%llu\n", rml::mode_name(cfg.mode),
                cfg.n_vehicles, cfg.n_blockages, static_cast<unsigned long long>(cfg.seed));
    std::printf("pdr=%.4f pdr_nlos=%.4f mean_latency_ms=%.6f throughput_mbps=%.4f "
                "delivered=%ld/%ld\n",
                result.metrics.pdr, result.metrics.pdr_nlos, result.metrics.mean_latency_ms,
                result.metrics.throughput_mbps, result.metrics.messages_delivered,
                result.metrics.messages_sent);
    return 0;
}

int cmd_sweep(const std::string& preset, const std::string& config_path, int n_seeds,
              int jobs, const std::string& out_dir) {
    rml::ScenarioConfig base =
        config_path.empty() ? rml::ScenarioConfig{} : rml::parse_config(config_path);
    rml::SweepSpec spec = rml::sweep_preset(preset, base, n_seeds);
    spec.jobs = jobs;
    rml::SweepResult result = rml::run_sweep(spec);
    fs::create_directories(out_dir);
    rml::write_results_file(result, (fs::path(out_dir) / "results.csv").string(),
                            rml::ResultFormat::Delimited);
    rml::write_results_file(result, (fs::path(out_dir) / "results.json").string(),
                            rml::ResultFormat::Structured);
    for (const rml::SweepRow& r : result.rows)
        std::printf("%s=%d %-8s pdr=%.4f±%.4f latency_ms=%.4f±%.4f thr_mbps=%.4f±%.4f\n",
                    rml::axis_name(r.axis), r.value, rml::mode_name(r.mode), r.pdr_mean,
                    r.pdr_sd, r.latency_ms_mean, r.latency_ms_sd, r.throughput_mbps_mean,
                    r.throughput_mbps_sd);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic V2X mmWave relay-selection simulator"};
    app.require_subcommand(1);

    std::string config_path, mode, out_dir = ".", preset;
    std::string load_policy, save_policy;
    int seed = -1, blockages = -1, vehicles = -1, n_seeds = 10, jobs = 1;

    CLI::App* sim = app.add_subcommand("simulate", "Run one scenario");
    sim->add_option("--config", config_path, "Scenario config file")->required();
    sim->add_option("--seed", seed, "Override the config seed");
    sim->add_option("--mode", mode, "rml|baseline");
    sim->add_option("--blockages", blockages, "Override blockage count");
    sim->add_option("--vehicles", vehicles, "Override vehicle count");
    sim->add_option("--out", out_dir, "Output directory (trace.csv, metrics.json)");
    sim->add_option("--load-policy", load_policy, "Import a Q-table snapshot before running");
    sim->add_option("--save-policy", save_policy, "Export the Q-table snapshot after running");

    CLI::App* swp = app.add_subcommand("sweep", "Run an experiment sweep preset");
    swp->add_option("--preset", preset, "fig4-6|fig7-9")->required();
    swp->add_option("--config", config_path, "Base config file (optional)");
    swp->add_option("--seeds", n_seeds, "Number of seeds per point (1..N)");
    swp->add_option("--jobs", jobs, "Concurrent scenario runs");
    swp->add_option("--out", out_dir, "Output directory (results.csv, results.json)");

    CLI::App* val = app.add_subcommand("validate", "Parse and validate a config file");
    val->add_option("--config", config_path, "Scenario config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(config_path, seed, mode, blockages, vehicles, out_dir,
                                load_policy, save_policy);
        if (swp->parsed()) return cmd_sweep(preset, config_path, n_seeds, jobs, out_dir);
        if (val->parsed()) {
            rml::parse_config(config_path);
            std::printf("ok: %s\n", config_path.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
