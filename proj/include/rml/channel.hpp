#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "rml/geometry.hpp"

namespace rml {

enum class LinkState { LOS, NLOS };

struct ChannelParams {
    double tx_power_dbm = 30.0;
    double bandwidth_hz = 2e8;        // informational: 28 GHz class carrier
    double pl0_db = 61.4;             // path loss at the 1 m reference
    double exponent_los = 2.0;
    double exponent_nlos = 3.3;
    double shadow_sigma_los_db = 4.0;
    double shadow_sigma_nlos_db = 8.0;
    double rx_threshold_dbm = -79.0;
    double data_rate_bps = 1e11;
    int packet_bytes = 1024;
    double retry_timeout_ms = 0.2;    // calibration knob, not physical
    double relay_proc_ms = 0.02;
    int max_retries = 3;
    int queue_capacity = 100;
};

struct LinkSample {
    double distance = 0.0;
    LinkState state = LinkState::LOS;
    double success_prob = 1.0;
};

// Log-distance path loss with a 1 m reference clamp.
inline double path_loss(double d, LinkState state, const ChannelParams& p) {
    const double n = state == LinkState::LOS ? p.exponent_los : p.exponent_nlos;
    return p.pl0_db + 10.0 * n * std::log10(std::max(d, 1.0));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P(received power >= threshold) under lognormal shadowing:
// Phi((tx - PL(d) - threshold) / sigma).
inline double link_success_prob(double d, LinkState state, const ChannelParams& p) {
    const double sigma =
        state == LinkState::LOS ? p.shadow_sigma_los_db : p.shadow_sigma_nlos_db;
    const double margin = p.tx_power_dbm - path_loss(d, state, p) - p.rx_threshold_dbm;
    if (sigma <= 0.0) return margin >= 0.0 ? 1.0 : 0.0;
    return normal_cdf(margin / sigma);
}

// End-to-end delivery latency over a serial hop chain, in ms. Each hop pays
// transmission + propagation plus its retry timeouts; intermediate relays add
// processing time.
inline double link_latency(const std::vector<double>& hop_distances_m,
                           const std::vector<int>& retries_per_hop,
                           const ChannelParams& p) {
    const std::size_t hops = hop_distances_m.size();
    const double t_tx_ms = 8.0 * p.packet_bytes / p.data_rate_bps * 1e3;
    double total = 0.0;
    for (std::size_t i = 0; i < hops; ++i) {
        const double t_prop_ms = hop_distances_m[i] / kSpeedOfLight * 1e3;
        const int retries = i < retries_per_hop.size() ? retries_per_hop[i] : 0;
        total += t_tx_ms + t_prop_ms + retries * p.retry_timeout_ms;
    }
    if (hops > 1) total += static_cast<double>(hops - 1) * p.relay_proc_ms;
    return total;
}

}  // namespace rml
