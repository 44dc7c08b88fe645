#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rml/channel.hpp"
#include "rml/errors.hpp"
#include "rml/geometry.hpp"
#include "rml/mobility.hpp"
#include "rml/rml_core.hpp"
#include "rml/rng.hpp"

namespace rml {

enum class Mode { RML, Baseline };

struct ScenarioConfig {
    Terrain terrain;
    int n_vehicles = 20;
    int n_blockages = 10;
    Mode mode = Mode::RML;
    double sim_time_s = 50.0;
    double dt_s = 0.1;
    double interpacket_ms = 200.0;
    double train_frac = 0.2;        // leading fraction of sim time that trains
    double map_refresh_s = 1.0;
    std::uint64_t seed = 1;
    bool enb_position_preset = false; // eNB position keyed by blockage count
    SelectMode select_mode = SelectMode::Learned;
    ChannelParams channel;
    QPolicyParams policy;
    MobilityConfig mobility;
    BlockageThreshold threshold;
    double blockage_half_x = 25.0;
    double blockage_half_y = 25.0;
    double blockage_height = 10.0;
    // Radius of the core built-up area around the BS when the core is full
    // (see BlockagePlacementConfig); non-positive disables the zoning rule.
    double blockage_deploy_radius = 75.0;
    double temp_blockage_half = 2.5;  // large-vehicle footprint half width

    void validate() const {
        if (terrain.width <= 0.0 || terrain.depth <= 0.0)
            throw ValidationError("terrain dimensions must be positive");
        if (!terrain.contains(terrain.bs_position))
            throw ValidationError("bs_position must be inside the terrain");
        if (terrain.bs_coverage_radius <= 0.0)
            throw ValidationError("bs_coverage_radius must be positive");
        if (terrain.bs_height <= 0.0) throw ValidationError("bs_height must be positive");
        if (n_vehicles < 0) throw ValidationError("n_vehicles must be >= 0");
        if (n_blockages < 0) throw ValidationError("n_blockages must be >= 0");
        if (sim_time_s <= 0.0) throw ValidationError("sim_time_s must be positive");
        if (dt_s <= 0.0) throw ValidationError("dt_s must be positive");
        if (interpacket_ms <= 0.0) throw ValidationError("interpacket_ms must be positive");
        if (train_frac < 0.0 || train_frac > 1.0)
            throw ValidationError("train_frac must be in [0, 1]");
        if (channel.exponent_los < 1.0 || channel.exponent_nlos < 1.0)
            throw ValidationError("path loss exponents must be >= 1");
        if (channel.shadow_sigma_los_db < 0.0 || channel.shadow_sigma_nlos_db < 0.0)
            throw ValidationError("shadow sigma must be >= 0");
        if (channel.data_rate_bps <= 0.0) throw ValidationError("data_rate_bps must be positive");
        if (channel.packet_bytes <= 0) throw ValidationError("packet_bytes must be positive");
        if (channel.queue_capacity < 0) throw ValidationError("queue_capacity must be >= 0");
        if (channel.max_retries < 0) throw ValidationError("max_retries must be >= 0");
        if (policy.grid_cells_per_side < 1) throw ValidationError("grid_cells_per_side must be >= 1");
        if (policy.sector_count < 1 || policy.sector_count > 62)
            throw ValidationError("sector_count must be in [1, 62]");
        if (policy.max_actions < 1) throw ValidationError("max_actions must be >= 1");
        if (policy.epsilon_initial < 0.0 || policy.epsilon_initial > 1.0)
            throw ValidationError("epsilon must be in [0, 1]");
        if (mobility.speed_min < 0.1 || mobility.speed_max > 15.0 ||
            mobility.speed_min > mobility.speed_max)
            throw ValidationError("vehicle speed bounds must lie in [0.1, 15]");
        if (mobility.large_vehicle_fraction < 0.0 || mobility.large_vehicle_fraction > 1.0)
            throw ValidationError("large_vehicle_fraction must be in [0, 1]");
    }
};

// Optional eNB placement preset, keyed by blockage count.
inline Position enb_preset_position(int n_blockages) {
    switch (n_blockages) {
        case 2: return {55.0, 55.0};
        case 4: return {115.0, 115.0};
        case 6: return {175.0, 175.0};
        case 8: return {235.0, 235.0};
        case 10: return {295.0, 295.0};
        default: return {150.0, 150.0};
    }
}

struct BroadcastMessage {
    int id = 0;
    int payload_bytes = 1024;
    double created_at = 0.0;
};

enum class Outcome { Delivered, Failed };

struct DeliveryRecord {
    int message_id = 0;
    int vehicle_id = 0;
    double sent_at = 0.0;
    Outcome outcome = Outcome::Failed;
    double latency_ms = 0.0;  // only meaningful when delivered
    int hops = 1;
    int retries = 0;
    bool was_nlos = false;
};

struct MetricsRecord {
    double pdr = 0.0;
    double pdr_nlos = 0.0;
    double mean_latency_ms = 0.0;
    double throughput_mbps = 0.0;
    long messages_sent = 0;
    long messages_delivered = 0;
};

inline MetricsRecord compute_metrics(const std::vector<DeliveryRecord>& records,
                                     double sim_time_s, int packet_bytes) {
    if (records.empty()) throw EmptyTrace("compute_metrics: no delivery records");
    MetricsRecord m;
    long delivered = 0, nlos_sent = 0, nlos_delivered = 0;
    double latency_sum = 0.0;
    for (const DeliveryRecord& r : records) {
        if (r.outcome == Outcome::Delivered) {
            ++delivered;
            latency_sum += r.latency_ms;
        }
        if (r.was_nlos) {
            ++nlos_sent;
            if (r.outcome == Outcome::Delivered) ++nlos_delivered;
        }
    }
    m.messages_sent = static_cast<long>(records.size());
    m.messages_delivered = delivered;
    m.pdr = static_cast<double>(delivered) / static_cast<double>(m.messages_sent);
    m.pdr_nlos = nlos_sent > 0
                     ? static_cast<double>(nlos_delivered) / static_cast<double>(nlos_sent)
                     : 1.0;
    m.mean_latency_ms = delivered > 0 ? latency_sum / static_cast<double>(delivered) : 0.0;
    m.throughput_mbps =
        static_cast<double>(delivered) * packet_bytes * 8.0 / sim_time_s / 1e6;
    return m;
}

struct RunResult {
    MetricsRecord metrics;
    std::vector<DeliveryRecord> records;
};

class ScenarioRun {
public:
    explicit ScenarioRun(ScenarioConfig cfg) : cfg_(std::move(cfg)), rng_(0) {
        cfg_.validate();
        if (cfg_.enb_position_preset)
            cfg_.terrain.bs_position = enb_preset_position(cfg_.n_blockages);
        rng_ = Rng(cfg_.seed);
        BlockagePlacementConfig place;
        place.count = cfg_.n_blockages;
        place.half_width_x = cfg_.blockage_half_x;
        place.half_width_y = cfg_.blockage_half_y;
        place.height = cfg_.blockage_height;
        place.deployment_radius = cfg_.blockage_deploy_radius;
        buildings_ = place_blockages(cfg_.terrain, place, rng_);
        vehicles_ = rwp_init(cfg_.terrain, buildings_, cfg_.n_vehicles, cfg_.mobility, rng_);
        policy_ = QPolicy(cfg_.policy);
        map_.refresh(cfg_.terrain.bs_position, buildings_, cfg_.threshold, 0.0);
        pending_.assign(static_cast<std::size_t>(cfg_.n_vehicles), 0);
    }

    const std::vector<Blockage>& buildings() const { return buildings_; }
    const std::vector<Vehicle>& vehicles() const { return vehicles_; }
    QPolicy& policy() { return policy_; }
    double now() const { return now_; }

    // One broadcast emission: every vehicle gets exactly one DeliveryRecord.
    // LOS/NLOS roles are recomputed from the current geometry first.
    std::vector<DeliveryRecord> broadcast_step(const BroadcastMessage& msg) {
        const std::vector<Blockage> world = world_blockages();
        const BlockageIndex index(cfg_.terrain, world);
        std::vector<char> los(vehicles_.size(), 0);
        std::vector<int> los_ids;
        los_ids.reserve(vehicles_.size());
        int witness = -1;
        for (const Vehicle& v : vehicles_) {
            witness = index.blocked_id(cfg_.terrain.bs_position, cfg_.terrain.bs_height,
                                       v.position, v.antenna_height, -1, v.id, witness);
            if (witness < 0) {
                los[static_cast<std::size_t>(v.id)] = 1;
                los_ids.push_back(v.id);
            }
        }
        WorldView view{&cfg_.terrain, &world,        &vehicles_, &los,
                       &cfg_.channel, &index,        &los_ids};
        const std::vector<Position> perm_map = map_.permanent_positions();

        std::vector<DeliveryRecord> out;
        out.reserve(vehicles_.size());
        for (const Vehicle& v : vehicles_) {
            DeliveryRecord rec;
            rec.message_id = msg.id;
            rec.vehicle_id = v.id;
            rec.sent_at = msg.created_at;
            rec.was_nlos = !los[static_cast<std::size_t>(v.id)];
            int& pending = pending_[static_cast<std::size_t>(v.id)];
            ++pending;
            if (pending > cfg_.channel.queue_capacity) {
                rec.outcome = Outcome::Failed;  // queue drop
                --pending;
                out.push_back(rec);
                continue;
            }
            if (!rec.was_nlos) {
                deliver_direct(rec, v, LinkState::LOS);
            } else if (cfg_.mode == Mode::Baseline) {
                deliver_direct(rec, v, LinkState::NLOS);
            } else {
                deliver_relayed(rec, v, view, perm_map);
            }
            --pending;
            out.push_back(rec);
        }
        return out;
    }

    RunResult run() {
        RunResult result;
        const double interpacket_s = cfg_.interpacket_ms / 1000.0;
        const long n_steps = std::lround(cfg_.sim_time_s / cfg_.dt_s);
        const long total_msgs =
            static_cast<long>(std::floor(cfg_.sim_time_s / interpacket_s + 1e-9));
        long next_msg = 1;
        for (long step = 0; step < n_steps; ++step) {
            for (Vehicle& v : vehicles_)
                v = rwp_step(v, cfg_.terrain, buildings_, cfg_.dt_s, cfg_.mobility, rng_);
            now_ = static_cast<double>(step + 1) * cfg_.dt_s;
            if (now_ - map_.last_refresh_s >= cfg_.map_refresh_s - 1e-9)
                map_.refresh(cfg_.terrain.bs_position, buildings_, cfg_.threshold, now_);
            const bool was_training = training_;
            training_ = now_ <= cfg_.train_frac * cfg_.sim_time_s + 1e-9;
            if (was_training && !training_ && cfg_.mode == Mode::RML)
                policy_.set_epsilon_explore(0.0);  // freeze: exploit from here on
            while (next_msg <= total_msgs &&
                   static_cast<double>(next_msg) * interpacket_s <= now_ + 1e-9) {
                BroadcastMessage msg;
                msg.id = static_cast<int>(next_msg - 1);
                msg.payload_bytes = cfg_.channel.packet_bytes;
                msg.created_at = static_cast<double>(next_msg) * interpacket_s;
                std::vector<DeliveryRecord> recs = broadcast_step(msg);
                result.records.insert(result.records.end(), recs.begin(), recs.end());
                ++next_msg;
            }
            if (training_ && cfg_.mode == Mode::RML) policy_.replay_train(rng_);
        }
        result.metrics =
            compute_metrics(result.records, cfg_.sim_time_s, cfg_.channel.packet_bytes);
        return result;
    }

private:
    struct LegOutcome {
        bool success = false;
        int retries = 0;  // failed attempts before success, or max_retries
    };

    LegOutcome attempt_leg(double p) {
        LegOutcome leg;
        for (int attempt = 0; attempt <= cfg_.channel.max_retries; ++attempt) {
            if (rng_.bernoulli(p)) {
                leg.success = true;
                leg.retries = attempt;
                return leg;
            }
        }
        leg.retries = cfg_.channel.max_retries;
        return leg;
    }

    void deliver_direct(DeliveryRecord& rec, const Vehicle& v, LinkState state) {
        const double d = distance(cfg_.terrain.bs_position, v.position);
        const double p = link_success_prob(d, state, cfg_.channel);
        const LegOutcome leg = attempt_leg(p);
        rec.hops = 1;
        rec.retries = leg.retries;
        if (leg.success) {
            rec.outcome = Outcome::Delivered;
            rec.latency_ms = link_latency({d}, {leg.retries}, cfg_.channel);
        }
    }

    void deliver_relayed(DeliveryRecord& rec, const Vehicle& target, const WorldView& view,
                         const std::vector<Position>& perm_map) {
        // While the policy is still training, relay choices follow the plain
        // distance sweep (the pre-training policy); the learned policy takes
        // over once the warm-up window ends.
        const SelectMode mode_now = training_ && cfg_.select_mode == SelectMode::Learned
                                        ? SelectMode::GreedyNearest
                                        : cfg_.select_mode;
        RelayDecision decision =
            select_relay(view, target.id, perm_map, policy_, rng_, mode_now);
        rec.hops = 2;
        if (!decision.chosen_relay_id) {
            rec.hops = 1;
            return;  // no LOS relay sees the target
        }
        const Vehicle& relay =
            vehicles_[static_cast<std::size_t>(*decision.chosen_relay_id)];
        const double d1 = distance(cfg_.terrain.bs_position, relay.position);
        const double d2 = decision.d_v;
        const LegOutcome leg1 = attempt_leg(decision.p_bs_relay);
        LegOutcome leg2;
        if (leg1.success) leg2 = attempt_leg(decision.p_relay_target);
        const bool delivered = leg1.success && leg2.success;
        rec.retries = leg1.retries + leg2.retries;
        const double attempt_latency =
            link_latency({d1, d2}, {leg1.retries, leg2.retries}, cfg_.channel);
        if (delivered) {
            rec.outcome = Outcome::Delivered;
            rec.latency_ms = attempt_latency;
        }
        if (training_ && cfg_.select_mode == SelectMode::Learned) {
            const double reward = (delivered ? 1.0 : -1.0) - 0.1 * attempt_latency;
            policy_.update(decision.state_index, decision.action_index, reward,
                           decision.state_index, true);
        }
    }

    ScenarioConfig cfg_;
    Rng rng_;
    std::vector<Blockage> buildings_;
    std::vector<Vehicle> vehicles_;
    QPolicy policy_{QPolicyParams{}};
    BlockageMap map_;
    std::vector<int> pending_;
    double now_ = 0.0;
    bool training_ = true;

    std::vector<Blockage> world_blockages() const {
        std::vector<Blockage> world = buildings_;
        int next_id = static_cast<int>(buildings_.size());
        for (const Vehicle& v : vehicles_) {
            if (v.kind != VehicleKind::LargeVehicle) continue;
            Blockage b;
            b.id = next_id++;
            b.center = v.position;
            b.half_width_x = cfg_.temp_blockage_half;
            b.half_width_y = cfg_.temp_blockage_half;
            b.height = v.body_height;
            b.classification = BlockageClass::Temporary;
            b.owner_vehicle_id = v.id;
            world.push_back(b);
        }
        return world;
    }
};

inline RunResult run_scenario(const ScenarioConfig& cfg) { return ScenarioRun(cfg).run(); }

// Trace layout: message_id,vehicle_id,sent_at,outcome,latency_ms,hops,retries,was_nlos
inline void write_trace(const std::vector<DeliveryRecord>& records, std::ostream& os) {
    os << "message_id,vehicle_id,sent_at,outcome,latency_ms,hops,retries,was_nlos\n";
    char buf[160];
    for (const DeliveryRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.6g,%s,%.9g,%d,%d,%d\n", r.message_id,
                      r.vehicle_id, r.sent_at,
                      r.outcome == Outcome::Delivered ? "delivered" : "failed",
                      r.latency_ms, r.hops, r.retries, r.was_nlos ? 1 : 0);
        os << buf;
    }
}

}  // namespace rml
