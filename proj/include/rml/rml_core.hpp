#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rml/channel.hpp"
#include "rml/errors.hpp"
#include "rml/geometry.hpp"
#include "rml/mobility.hpp"
#include "rml/rng.hpp"

namespace rml {

// ---------------------------------------------------------------------------
// Blockage identification
// ---------------------------------------------------------------------------

struct BlockageThreshold {
    double epsilon_height = 4.8768;  // 16 ft
};

// A reflection at or below the height threshold is a large vehicle
// (temporary); strictly above it is a building (permanent).
inline BlockageClass classify_blockage(double reflected_height,
                                       const BlockageThreshold& thr) {
    return reflected_height <= thr.epsilon_height ? BlockageClass::Temporary
                                                  : BlockageClass::Permanent;
}

// Radar-style localization: range from the round trip, bearing from the
// antenna angle.
inline Position estimate_blockage_location(const Position& bs, double round_trip_s,
                                           double theta) {
    const double range = kSpeedOfLight * round_trip_s / 2.0;
    return Position{bs.x + range * std::cos(theta), bs.y + range * std::sin(theta)};
}

// Persistent blockage map kept by the BS, refreshed at a fixed interval.
struct MappedBlockage {
    int blockage_id = -1;
    Position estimated_position;
    BlockageClass classification = BlockageClass::Unknown;
};

struct BlockageMap {
    std::vector<MappedBlockage> entries;
    double last_refresh_s = -1.0;

    void refresh(const Position& bs, const std::vector<Blockage>& blockages,
                 const BlockageThreshold& thr, double now_s) {
        entries.clear();
        for (const Blockage& b : blockages) {
            const double range = distance(bs, b.center);
            const double round_trip_s = 2.0 * range / kSpeedOfLight;
            const double theta = std::atan2(b.center.y - bs.y, b.center.x - bs.x);
            MappedBlockage m;
            m.blockage_id = b.id;
            m.estimated_position = estimate_blockage_location(bs, round_trip_s, theta);
            m.classification = classify_blockage(b.height, thr);
            entries.push_back(m);
        }
        last_refresh_s = now_s;
    }

    std::vector<Position> permanent_positions() const {
        std::vector<Position> out;
        for (const MappedBlockage& m : entries)
            if (m.classification == BlockageClass::Permanent)
                out.push_back(m.estimated_position);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Handoff flow estimation
// ---------------------------------------------------------------------------

struct FlowEstimate {
    long n_current = 0;   // N
    long m_constant = 0;  // m
    double t_s = 0.0;     // next sampling time
    double t_e = 1.0;     // estimated time
    long arrivals = 0;
    long departures = 0;
};

// N_n = N + N_r - N_t - m with N_r, N_t the arrival/departure flow scaled to
// the sampling window; clamped at zero.
inline long flow_estimate(const FlowEstimate& f) {
    if (f.t_e <= 0.0) throw InvalidEstimate("flow_estimate: t_e must be positive");
    const double n_r = f.t_s * static_cast<double>(f.arrivals) / f.t_e;
    const double n_t = f.t_s * static_cast<double>(f.departures) / f.t_e;
    const double n_next =
        static_cast<double>(f.n_current) + n_r - n_t - static_cast<double>(f.m_constant);
    return std::max(0L, std::lround(n_next));
}

// ---------------------------------------------------------------------------
// Link / path metric
// ---------------------------------------------------------------------------

inline double link_metric(double p) {
    if (p <= 0.0) throw ZeroProbability("link_metric: zero success probability");
    return std::log(p);
}

struct PathMetric {
    double metric = 0.0;   // sum of ln p_i, <= 0
    double success = 1.0;  // product of p_i
};

inline PathMetric path_metric(const std::vector<double>& probs) {
    if (probs.empty()) throw ZeroProbability("path_metric: empty path");
    PathMetric out;
    for (double p : probs) {
        out.metric += link_metric(p);
        out.success *= p;
    }
    return out;
}

struct RelayPath {
    std::vector<int> nodes;         // ordered LOS vehicle ids
    std::vector<double> link_probs;
    double metric = 0.0;
    double success = 1.0;
};

inline RelayPath make_relay_path(std::vector<int> nodes, std::vector<double> probs) {
    RelayPath path;
    path.nodes = std::move(nodes);
    path.link_probs = std::move(probs);
    const PathMetric m = path_metric(path.link_probs);
    path.metric = m.metric;
    path.success = m.success;
    return path;
}

// ---------------------------------------------------------------------------
// Relay candidates
// ---------------------------------------------------------------------------

// Everything the decision kernel needs to see about one instant of the world.
struct WorldView {
    const Terrain* terrain = nullptr;
    const std::vector<Blockage>* blockages = nullptr;  // permanent + temporary
    const std::vector<Vehicle>* vehicles = nullptr;
    const std::vector<char>* los_to_bs = nullptr;      // parallel to vehicles
    const ChannelParams* channel = nullptr;
    const BlockageIndex* index = nullptr;              // optional broad phase
    const std::vector<int>* los_ids = nullptr;         // optional: ids with LOS
};

struct RelayCandidate {
    int relay_id = -1;
    double d_v = 0.0;          // relay -> target distance
    double p_bs_relay = 0.0;
    double p_relay_target = 0.0;
};

namespace detail {

struct RawCandidate {
    int relay_id = -1;
    double d_v = 0.0;  // relay -> target distance
};

// Shared core of the candidate sweep: LOS-to-BS vehicles with clear sight of
// the NLOS target, ordered by ascending relay->target distance, truncated to
// max_k. Link probabilities are left to the caller so the hot selection path
// can price only the candidate it actually picks.
inline const std::vector<RawCandidate>& candidate_scan(const WorldView& w, int target_id,
                                                       int max_k) {
    const std::vector<Vehicle>& vehicles = *w.vehicles;
    const Vehicle& target = vehicles[static_cast<std::size_t>(target_id)];
    // scratch reused across calls; the contents never outlive one invocation
    static thread_local std::vector<double> cx, cy, ch, d2s;
    static thread_local std::vector<int> ids;
    cx.clear(); cy.clear(); ch.clear(); d2s.clear(); ids.clear();
    // Squared distances give the same ascending order and avoid a libm call
    // per vehicle; the true distance is recovered only for accepted candidates.
    double max_ch = 0.0;
    const auto gather = [&](const Vehicle& v) {
        const double dx = v.position.x - target.position.x;
        const double dy = v.position.y - target.position.y;
        cx.push_back(v.position.x);
        cy.push_back(v.position.y);
        ch.push_back(v.antenna_height);
        d2s.push_back(dx * dx + dy * dy);
        ids.push_back(v.id);
        max_ch = std::max(max_ch, v.antenna_height);
    };
    if (w.los_ids) {
        for (int id : *w.los_ids)
            if (id != target_id) gather(vehicles[static_cast<std::size_t>(id)]);
    } else {
        for (const Vehicle& v : vehicles)
            if (v.id != target_id && (*w.los_to_bs)[static_cast<std::size_t>(v.id)])
                gather(v);
    }
    const int m = static_cast<int>(ids.size());
    static thread_local std::vector<unsigned char> vis;
    vis.assign(static_cast<std::size_t>(m), 0);
    const bool fan = w.index != nullptr && target.antenna_height >= 0.0 &&
                     target.antenna_height <= w.index->min_height() &&
                     max_ch <= w.index->min_height();
    if (fan) {
        // one pass over the boxes answers every candidate's occlusion test
        w.index->clear_fan_2d(target.position, target.antenna_height, cx.data(),
                              cy.data(), ch.data(), ids.data(), m, target.id,
                              vis.data());
    } else {
        for (int j = 0; j < m; ++j) {
            const Position rp{cx[static_cast<std::size_t>(j)],
                              cy[static_cast<std::size_t>(j)]};
            const bool blocked =
                w.index
                    ? w.index->blocked(rp, ch[static_cast<std::size_t>(j)],
                                       target.position, target.antenna_height,
                                       ids[static_cast<std::size_t>(j)], target.id)
                    : !los_test(*w.terrain, *w.blockages, rp,
                                ch[static_cast<std::size_t>(j)], target.position,
                                target.antenna_height, ids[static_cast<std::size_t>(j)],
                                target.id)
                           .los;
            vis[static_cast<std::size_t>(j)] = blocked ? 0 : 1;
        }
    }
    // Keep the max_k nearest visible candidates, ordered by (distance, id).
    static thread_local std::vector<std::pair<double, int>> sel;
    sel.clear();
    for (int j = 0; j < m; ++j) {
        if (!vis[static_cast<std::size_t>(j)]) continue;
        const std::pair<double, int> p{d2s[static_cast<std::size_t>(j)],
                                       ids[static_cast<std::size_t>(j)]};
        if (static_cast<int>(sel.size()) >= max_k && !(p < sel.back())) continue;
        sel.insert(std::upper_bound(sel.begin(), sel.end(), p), p);
        if (static_cast<int>(sel.size()) > max_k) sel.pop_back();
    }
    static thread_local std::vector<RawCandidate> out;
    out.clear();
    out.reserve(sel.size());
    for (const auto& [d2, id] : sel) out.push_back({id, std::sqrt(d2)});
    return out;
}

}  // namespace detail

// LOS-to-BS vehicles with clear sight of the NLOS target, ordered by ascending
// relay->target distance, truncated to max_k. Large vehicles (temporary
// blockers) are eligible candidates.
inline std::vector<RelayCandidate> candidate_relays(const WorldView& w, int target_id,
                                                    int max_k) {
    const std::vector<Vehicle>& vehicles = *w.vehicles;
    std::vector<RelayCandidate> out;
    for (const detail::RawCandidate& rc : detail::candidate_scan(w, target_id, max_k)) {
        const Vehicle& relay = vehicles[static_cast<std::size_t>(rc.relay_id)];
        RelayCandidate c;
        c.relay_id = rc.relay_id;
        c.d_v = rc.d_v;
        c.p_bs_relay = link_success_prob(
            distance(w.terrain->bs_position, relay.position), LinkState::LOS, *w.channel);
        c.p_relay_target = link_success_prob(c.d_v, LinkState::LOS, *w.channel);
        out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tabular Q-learning policy
// ---------------------------------------------------------------------------

struct Transition {
    std::int64_t state = 0;
    int action = 0;
    double reward = 0.0;
    std::int64_t next_state = 0;
    bool done = false;
};

struct QPolicyParams {
    int grid_cells_per_side = 10;
    int sector_count = 8;
    int max_actions = 4;            // rank into the candidate list
    double alpha = 0.1;
    double gamma = 0.9;
    double epsilon_initial = 0.1;
    double epsilon_decay = 0.995;   // per episode
    double epsilon_floor = 0.01;
    std::size_t replay_capacity = 1000;
    std::size_t batch = 32;
    std::uint64_t reset_interval = 10000;
};

class QPolicy {
public:
    explicit QPolicy(QPolicyParams params = {})
        : params_(params), epsilon_explore_(params.epsilon_initial) {}

    const QPolicyParams& params() const { return params_; }
    double epsilon_explore() const { return epsilon_explore_; }
    void set_epsilon_explore(double eps) { epsilon_explore_ = eps; }
    std::uint64_t update_counter() const { return update_counter_; }
    const std::deque<Transition>& replay() const { return replay_; }

    double q_value(std::int64_t state, int action) const {
        auto it = q_table_.find(state);
        if (it == q_table_.end()) return 0.0;
        return it->second[static_cast<std::size_t>(action)];
    }

    std::size_t table_rows() const { return q_table_.size(); }

    int select_action(std::int64_t state, int n_candidates, Rng& rng) const {
        if (n_candidates < 1) throw NoCandidates("select_action: no candidates");
        if (rng.uniform01() < epsilon_explore_)
            return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_candidates)));
        return greedy_action(state, n_candidates);
    }

    int greedy_action(std::int64_t state, int n_candidates) const {
        if (n_candidates < 1) throw NoCandidates("greedy_action: no candidates");
        int best = 0;
        double best_q = q_value(state, 0);
        for (int a = 1; a < n_candidates; ++a) {
            const double q = q_value(state, a);
            if (q > best_q) { best_q = q; best = a; }  // ties keep the lowest index
        }
        return best;
    }

    void update(std::int64_t state, int action, double reward, std::int64_t next_state,
                bool done) {
        apply_update(state, action, reward, next_state, done);
        replay_.push_back({state, action, reward, next_state, done});
        if (replay_.size() > params_.replay_capacity) replay_.pop_front();
        ++update_counter_;
        if (done)
            epsilon_explore_ =
                std::max(params_.epsilon_floor, epsilon_explore_ * params_.epsilon_decay);
        // Periodic model reset: exploration returns to its initial value, the
        // learned table is kept.
        if (params_.reset_interval > 0 && update_counter_ % params_.reset_interval == 0)
            epsilon_explore_ = params_.epsilon_initial;
    }

    // Uniform without-replacement minibatch over the replay buffer; value
    // updates only, nothing is re-appended.
    void replay_train(Rng& rng) {
        if (replay_.empty()) return;
        const std::size_t k = std::min(params_.batch, replay_.size());
        std::vector<std::size_t> idx(replay_.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(rng.uniform_int(idx.size() - i));
            std::swap(idx[i], idx[j]);
            const Transition& t = replay_[idx[i]];
            apply_update(t.state, t.action, t.reward, t.next_state, t.done);
        }
    }

    void export_snapshot(std::ostream& os) const {
        std::vector<std::int64_t> states;
        states.reserve(q_table_.size());
        for (const auto& [s, _] : q_table_) states.push_back(s);
        std::sort(states.begin(), states.end());
        for (std::int64_t s : states) {
            const std::vector<double>& row = q_table_.at(s);
            for (int a = 0; a < params_.max_actions; ++a) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%lld %d %.17g\n",
                              static_cast<long long>(s), a, row[static_cast<std::size_t>(a)]);
                os << buf;
            }
        }
    }

    void import_snapshot(std::istream& is) {
        q_table_.clear();
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            long long s;
            int a;
            double q;
            if (!(ls >> s >> a >> q))
                throw IoError("policy snapshot: malformed line: " + line);
            if (a < 0 || a >= params_.max_actions)
                throw IoError("policy snapshot: action out of range");
            row(s)[static_cast<std::size_t>(a)] = q;
        }
    }

private:
    std::vector<double>& row(std::int64_t state) {
        auto it = q_table_.find(state);
        if (it == q_table_.end())
            it = q_table_
                     .emplace(state,
                              std::vector<double>(
                                  static_cast<std::size_t>(params_.max_actions), 0.0))
                     .first;
        return it->second;
    }

    void apply_update(std::int64_t state, int action, double reward,
                      std::int64_t next_state, bool done) {
        double future = 0.0;
        if (!done) {
            const std::vector<double>& next_row = row(next_state);
            future = *std::max_element(next_row.begin(), next_row.end());
        }
        double& q = row(state)[static_cast<std::size_t>(action)];
        q += params_.alpha * (reward + params_.gamma * future - q);
    }

    QPolicyParams params_;
    std::unordered_map<std::int64_t, std::vector<double>> q_table_;
    std::deque<Transition> replay_;
    double epsilon_explore_;
    std::uint64_t update_counter_ = 0;
};

// State index: target grid cell crossed with a per-sector occupancy bitmap of
// the permanent blockage map, sectors centered on the BS (sector 0 due east).
inline std::int64_t q_state(const Position& target, const std::vector<Position>& permanent_map,
                            const Terrain& terrain, const QPolicyParams& params) {
    const int cells = params.grid_cells_per_side;
    auto cell_of = [&](double v, double extent) {
        int c = static_cast<int>(v / extent * cells);
        return std::clamp(c, 0, cells - 1);
    };
    const std::int64_t cell =
        static_cast<std::int64_t>(cell_of(target.x, terrain.width)) * cells +
        cell_of(target.y, terrain.depth);
    std::int64_t bitmap = 0;
    const double sector_width = 2.0 * M_PI / params.sector_count;
    for (const Position& p : permanent_map) {
        double angle = std::atan2(p.y - terrain.bs_position.y, p.x - terrain.bs_position.x);
        if (angle < 0.0) angle += 2.0 * M_PI;
        int sector = static_cast<int>(angle / sector_width);
        sector = std::clamp(sector, 0, params.sector_count - 1);
        bitmap |= std::int64_t{1} << sector;
    }
    return cell * (std::int64_t{1} << params.sector_count) + bitmap;
}

// ---------------------------------------------------------------------------
// Relay selection
// ---------------------------------------------------------------------------

enum class SelectMode { Learned, GreedyNearest };

struct RelayDecision {
    int target_nlos_id = -1;
    std::optional<int> chosen_relay_id;
    double d_v = 0.0;         // chosen relay -> target distance
    double d_r = 0.0;         // best distance after the update step
    double v_d = 0.0;         // target -> nearest mapped blockage distance
    double p_bs_relay = 0.0;
    double p_relay_target = 0.0;
    int action_index = 0;
    std::int64_t state_index = 0;
    int n_candidates = 0;
};

// One relay decision for an NLOS target. Learned mode maps an epsilon-greedy
// action rank onto the distance-ordered candidate list (out-of-range rank
// falls back to the nearest candidate); GreedyNearest is the plain distance
// sweep used before training and as an ablation.
inline RelayDecision select_relay(const WorldView& w, int target_id,
                                  const std::vector<Position>& permanent_map,
                                  QPolicy& policy, Rng& rng, SelectMode mode) {
    RelayDecision d;
    d.target_nlos_id = target_id;
    const Vehicle& target = (*w.vehicles)[static_cast<std::size_t>(target_id)];
    d.state_index = q_state(target.position, permanent_map, *w.terrain, policy.params());
    double v_d2 = std::numeric_limits<double>::infinity();
    for (const Position& p : permanent_map) {
        const double dx = target.position.x - p.x, dy = target.position.y - p.y;
        v_d2 = std::min(v_d2, dx * dx + dy * dy);
    }
    d.v_d = permanent_map.empty() ? 0.0 : std::sqrt(v_d2);

    const std::vector<detail::RawCandidate>& candidates =
        detail::candidate_scan(w, target_id, policy.params().max_actions);
    d.n_candidates = static_cast<int>(candidates.size());
    if (candidates.empty()) return d;

    int idx = 0;
    if (mode == SelectMode::Learned) {
        d.action_index =
            policy.select_action(d.state_index, policy.params().max_actions, rng);
        idx = d.action_index < d.n_candidates ? d.action_index : 0;
    }
    const detail::RawCandidate& chosen = candidates[static_cast<std::size_t>(idx)];
    const Vehicle& relay = (*w.vehicles)[static_cast<std::size_t>(chosen.relay_id)];
    d.chosen_relay_id = chosen.relay_id;
    d.d_v = chosen.d_v;
    d.d_r = chosen.d_v;  // update the best distance
    d.p_bs_relay = link_success_prob(distance(w.terrain->bs_position, relay.position),
                                     LinkState::LOS, *w.channel);
    d.p_relay_target = link_success_prob(chosen.d_v, LinkState::LOS, *w.channel);
    return d;
}

}  // namespace rml
