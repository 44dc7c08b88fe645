#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rml/errors.hpp"
#include "rml/geometry.hpp"
#include "rml/rng.hpp"

namespace rml {

enum class VehicleKind { Car, LargeVehicle };

struct Vehicle {
    int id = 0;
    Position position;
    double antenna_height = 1.5;
    double body_height = 1.5;
    double speed = 15.0;
    Position waypoint;
    double pause_remaining = 0.0;
    VehicleKind kind = VehicleKind::Car;
};

struct MobilityConfig {
    double pause_s = 5.0;
    bool constant_speed = true;     // constant 15 m/s; else uniform in [min,max]
    double speed_const = 15.0;
    double speed_min = 0.1;
    double speed_max = 15.0;
    double large_vehicle_fraction = 0.2;
    double car_height = 1.5;
    double large_vehicle_height = 3.5;  // below the 16-ft permanent threshold
    int max_attempts = 10000;
};

namespace detail {

inline bool position_free(const Position& p, const Terrain& terrain,
                          const std::vector<Blockage>& blockages) {
    if (!terrain.contains(p)) return false;
    for (const Blockage& b : blockages)
        if (b.classification == BlockageClass::Permanent && b.footprint_contains(p))
            return false;
    return true;
}

inline Position draw_free_position(const Terrain& terrain,
                                   const std::vector<Blockage>& blockages, Rng& rng,
                                   int max_attempts) {
    for (int i = 0; i < max_attempts; ++i) {
        Position p{rng.uniform(0.0, terrain.width), rng.uniform(0.0, terrain.depth)};
        if (position_free(p, terrain, blockages)) return p;
    }
    throw PlacementFailed("mobility: no free position found");
}

}  // namespace detail

inline std::vector<Vehicle> rwp_init(const Terrain& terrain,
                                     const std::vector<Blockage>& blockages, int n,
                                     const MobilityConfig& cfg, Rng& rng) {
    if (n < 0) throw PlacementFailed("rwp_init: negative vehicle count");
    const int n_large =
        static_cast<int>(std::lround(cfg.large_vehicle_fraction * n));
    std::vector<Vehicle> vehicles;
    vehicles.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vehicle v;
        v.id = i;
        v.kind = i < n_large ? VehicleKind::LargeVehicle : VehicleKind::Car;
        v.body_height = v.kind == VehicleKind::LargeVehicle ? cfg.large_vehicle_height
                                                            : cfg.car_height;
        v.antenna_height = v.body_height;
        v.speed = cfg.constant_speed ? cfg.speed_const
                                     : rng.uniform(cfg.speed_min, cfg.speed_max);
        v.position = detail::draw_free_position(terrain, blockages, rng, cfg.max_attempts);
        v.waypoint = detail::draw_free_position(terrain, blockages, rng, cfg.max_attempts);
        vehicles.push_back(v);
    }
    return vehicles;
}

// Random waypoint with bounce: move toward the waypoint at `speed`; on arrival
// pause, then draw a fresh waypoint; on hitting a permanent footprint or the
// terrain border, revert to the pre-step position and re-waypoint immediately.
inline Vehicle rwp_step(Vehicle v, const Terrain& terrain,
                        const std::vector<Blockage>& blockages, double dt,
                        const MobilityConfig& cfg, Rng& rng) {
    if (v.pause_remaining > 0.0) {
        v.pause_remaining = std::max(0.0, v.pause_remaining - dt);
        if (v.pause_remaining == 0.0)
            v.waypoint = detail::draw_free_position(terrain, blockages, rng, cfg.max_attempts);
        return v;
    }
    const double dist = distance(v.position, v.waypoint);
    const double step_len = v.speed * dt;
    if (dist <= step_len) {
        // Arrival; the waypoint itself is always a free position.
        v.position = v.waypoint;
        v.pause_remaining = cfg.pause_s;
        return v;
    }
    Position next{v.position.x + (v.waypoint.x - v.position.x) / dist * step_len,
                  v.position.y + (v.waypoint.y - v.position.y) / dist * step_len};
    if (!detail::position_free(next, terrain, blockages)) {
        // bounce
        v.waypoint = detail::draw_free_position(terrain, blockages, rng, cfg.max_attempts);
        return v;
    }
    v.position = next;
    return v;
}

// Constant position model (the eNB).
template <typename Entity>
inline Entity constant_position_step(Entity e) {
    return e;
}

}  // namespace rml
