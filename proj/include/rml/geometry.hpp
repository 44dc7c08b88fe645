#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rml/errors.hpp"
#include "rml/rng.hpp"

namespace rml {

inline constexpr double kSpeedOfLight = 2.9979e8;  // m/s

struct Position {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Position& p, const Position& q) {
    return std::hypot(p.x - q.x, p.y - q.y);
}

struct Terrain {
    double width = 300.0;
    double depth = 300.0;
    Position bs_position{150.0, 150.0};
    double bs_height = 25.0;
    double bs_coverage_radius = 300.0;

    bool contains(const Position& p) const {
        return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= depth;
    }
};

enum class BlockageClass { Permanent, Temporary, Unknown };

// Axis-aligned obstacle footprint extruded from the ground to `height`.
// Temporary blockages are backed by a large vehicle (owner_vehicle_id >= 0)
// and move with it.
struct Blockage {
    int id = 0;
    Position center;
    double half_width_x = 25.0;
    double half_width_y = 25.0;
    double height = 10.0;
    BlockageClass classification = BlockageClass::Permanent;
    int owner_vehicle_id = -1;

    bool footprint_contains(const Position& p) const {
        return std::abs(p.x - center.x) <= half_width_x &&
               std::abs(p.y - center.y) <= half_width_y;
    }

    bool footprint_overlaps(const Blockage& other) const {
        return std::abs(center.x - other.center.x) < half_width_x + other.half_width_x &&
               std::abs(center.y - other.center.y) < half_width_y + other.half_width_y;
    }
};

// Similar-triangle quantities for one blocker on the BS->receiver ray.
struct BlockageGeometry {
    double omega_m = 0.0;  // ground distance, BS foot to blocker
    double w_v = 0.0;      // blocker footprint depth along the ray
    double h_bs = 25.0;    // BS antenna height
    double h_l = 10.0;     // blocker height
    double h_s = 1.5;      // receiver antenna height
};

// Critical ground distance beyond which a receiver on the ray is shadowed.
// A blocker at least as tall as the BS shadows everything behind it, which
// maps to an infinite critical distance.
inline double critical_blocking_distance(const BlockageGeometry& g) {
    if (g.h_bs <= g.h_s)
        throw InvalidGeometry("critical_blocking_distance: h_bs must exceed h_s");
    if (g.h_l >= g.h_bs) return std::numeric_limits<double>::infinity();
    const double ratio = (g.h_bs - g.h_l) / (g.h_bs - g.h_s);
    return (g.omega_m + g.w_v / 2.0) / ratio;
}

struct LosResult {
    bool los = true;
    int blocker_id = -1;
};

namespace detail {

// Segment vs axis-aligned box [x0,x1]x[y0,y1]x[0,h], slab method.
inline bool segment_hits_box(double ax, double ay, double az, double bx, double by,
                             double bz, const Blockage& blk) {
    const double lo[3] = {blk.center.x - blk.half_width_x,
                          blk.center.y - blk.half_width_y, 0.0};
    const double hi[3] = {blk.center.x + blk.half_width_x,
                          blk.center.y + blk.half_width_y, blk.height};
    const double o[3] = {ax, ay, az};
    const double d[3] = {bx - ax, by - ay, bz - az};
    double tmin = 0.0, tmax = 1.0;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-12) {
            if (o[i] < lo[i] || o[i] > hi[i]) return false;
            continue;
        }
        double t0 = (lo[i] - o[i]) / d[i];
        double t1 = (hi[i] - o[i]) / d[i];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return false;
    }
    return true;
}

}  // namespace detail

// LOS iff the 3-D segment between the two antenna points misses every blockage
// volume. Blockages owned by either endpoint entity are skipped so a large
// vehicle does not occlude its own link. Returns the lowest-id hit otherwise.
inline LosResult los_test(const Terrain& /*terrain*/, const std::vector<Blockage>& blockages,
                          const Position& a, double height_a, const Position& b,
                          double height_b, int skip_owner_a = -1, int skip_owner_b = -1) {
    LosResult best;
    for (const Blockage& blk : blockages) {
        if (blk.owner_vehicle_id >= 0 &&
            (blk.owner_vehicle_id == skip_owner_a || blk.owner_vehicle_id == skip_owner_b))
            continue;
        if (detail::segment_hits_box(a.x, a.y, height_a, b.x, b.y, height_b, blk)) {
            if (best.los || blk.id < best.blocker_id) {
                best.los = false;
                best.blocker_id = blk.id;
            }
        }
    }
    return best;
}

// Uniform-grid broad phase over blockage footprints. Buckets hold indices into
// the blockage vector the index was built from; queries visit only the buckets
// overlapped by the segment's 2-D bounding box, so per-test cost stays flat as
// the world grows. Results are identical to the exhaustive los_test.
class BlockageIndex {
public:
    BlockageIndex(const Terrain& terrain, const std::vector<Blockage>& blockages,
                  double cell_size = 30.0)
        : cell_(cell_size),
          inv_cell_(1.0 / cell_size),
          nx_(std::max(1, static_cast<int>(std::ceil(terrain.width / cell_size)))),
          ny_(std::max(1, static_cast<int>(std::ceil(terrain.depth / cell_size)))) {
        buckets_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
        stamp_.assign(blockages.size(), 0);
        xlo_.reserve(blockages.size());
        for (const Blockage& b : blockages) {
            xlo_.push_back(b.center.x - b.half_width_x);
            xhi_.push_back(b.center.x + b.half_width_x);
            ylo_.push_back(b.center.y - b.half_width_y);
            yhi_.push_back(b.center.y + b.half_width_y);
            h_.push_back(b.height);
            owner_.push_back(b.owner_vehicle_id);
            min_h_ = std::min(min_h_, b.height);
        }
        for (std::size_t i = 0; i < blockages.size(); ++i) {
            int x0, x1, y0, y1;
            cell_range(xlo_[i], xhi_[i], ylo_[i], yhi_[i], x0, x1, y0, y1);
            for (int cy = y0; cy <= y1; ++cy)
                for (int cx = x0; cx <= x1; ++cx)
                    buckets_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(
                        static_cast<int>(i));
        }
    }

    // Slab test of one stored box against the 3-D segment, honoring the
    // owner-skip convention of los_test. When `skip_z` is true the vertical
    // axis is omitted; callers may set it only when both endpoint heights lie
    // inside [0, height] for every stored box, in which case the z slab can
    // never reject and the 2-D result is identical.
    bool hits(int i, const Position& a, double height_a, const Position& b,
              double height_b, int skip_owner_a, int skip_owner_b,
              bool skip_z = false) const {
        const std::size_t k = static_cast<std::size_t>(i);
        const int owner = owner_[k];
        if (owner >= 0 && (owner == skip_owner_a || owner == skip_owner_b)) return false;
        const double lo[3] = {xlo_[k], ylo_[k], 0.0};
        const double hi[3] = {xhi_[k], yhi_[k], h_[k]};
        const double o[3] = {a.x, a.y, height_a};
        const double d[3] = {b.x - a.x, b.y - a.y, height_b - height_a};
        double tmin = 0.0, tmax = 1.0;
        const int n_axes = skip_z ? 2 : 3;
        for (int ax = 0; ax < n_axes; ++ax) {
            if (std::abs(d[ax]) < 1e-12) {
                if (o[ax] < lo[ax] || o[ax] > hi[ax]) return false;
                continue;
            }
            double t0 = (lo[ax] - o[ax]) / d[ax];
            double t1 = (hi[ax] - o[ax]) / d[ax];
            if (t0 > t1) std::swap(t0, t1);
            tmin = std::max(tmin, t0);
            tmax = std::min(tmax, t1);
            if (tmin > tmax) return false;
        }
        return true;
    }

    // Fused boolean occlusion query over the SoA box bounds; exits on the
    // first blocking volume. Identical outcome to running segment_hits_box
    // over every non-skipped blockage.
    bool blocked(const Position& a, double height_a, const Position& b, double height_b,
                 int skip_owner_a = -1, int skip_owner_b = -1) const {
        return blocked_id(a, height_a, b, height_b, skip_owner_a, skip_owner_b) >= 0;
    }

    // Like blocked(), but returns the index of some blocking volume (-1 if
    // clear) and tries `hint` before the grid walk. Callers probing many
    // nearby segments reuse the previous blocker as the hint, which resolves
    // most occluded queries with a single slab test.
    int blocked_id(const Position& a, double height_a, const Position& b, double height_b,
                   int skip_owner_a = -1, int skip_owner_b = -1, int hint = -1) const {
        // Low segments never clear a box top, so the z slab cannot reject.
        const bool skip_z = height_a >= 0.0 && height_b >= 0.0 &&
                            std::max(height_a, height_b) <= min_h_;
        if (hint >= 0 &&
            hits(hint, a, height_a, b, height_b, skip_owner_a, skip_owner_b, skip_z))
            return hint;
        // Small worlds: a linear pass over the cache-resident bound arrays is
        // cheaper than walking grid buckets, and clear segments (the common
        // case after the hint check) must touch every cell on the path anyway.
        if (static_cast<int>(owner_.size()) <= kBruteForceMax) {
            const double dx = b.x - a.x, dy = b.y - a.y;
            if (skip_z && std::abs(dx) >= 1e-12 && std::abs(dy) >= 1e-12) {
                // branchless 2-D slab sweep; reciprocals are hoisted so the
                // per-box body is pure mul/min/max and vectorizes
                const double ix = 1.0 / dx, iy = 1.0 / dy;
                for (int i = 0, n = static_cast<int>(owner_.size()); i < n; ++i) {
                    const double t0 = (xlo_[static_cast<std::size_t>(i)] - a.x) * ix;
                    const double t1 = (xhi_[static_cast<std::size_t>(i)] - a.x) * ix;
                    const double u0 = (ylo_[static_cast<std::size_t>(i)] - a.y) * iy;
                    const double u1 = (yhi_[static_cast<std::size_t>(i)] - a.y) * iy;
                    const double tmin =
                        std::max(std::max(std::min(t0, t1), std::min(u0, u1)), 0.0);
                    const double tmax =
                        std::min(std::min(std::max(t0, t1), std::max(u0, u1)), 1.0);
                    if (tmin <= tmax) {
                        const int owner = owner_[static_cast<std::size_t>(i)];
                        if (!(owner >= 0 &&
                              (owner == skip_owner_a || owner == skip_owner_b)))
                            return i;
                    }
                }
                return -1;
            }
            for (int i = 0, n = static_cast<int>(owner_.size()); i < n; ++i)
                if (i != hint &&
                    hits(i, a, height_a, b, height_b, skip_owner_a, skip_owner_b, skip_z))
                    return i;
            return -1;
        }
        int found = -1;
        visit_until(a, b, [&](int i) {
            if (i != hint &&
                hits(i, a, height_a, b, height_b, skip_owner_a, skip_owner_b, skip_z)) {
                found = i;
                return true;
            }
            return false;
        });
        return found;
    }

    static constexpr int kBruteForceMax = 64;

    double min_height() const { return min_h_; }

    // Visibility fan: vis[j] = 1 iff the segment from `a` to (cx[j], cy[j])
    // misses every stored box in 2-D. Valid only when the z slab can never
    // reject, i.e. height_a and every ch[j] lie within [0, min_height()].
    // A box owned by `skip_owner_a` is ignored for all segments; a box owned
    // by cand_id[j] is ignored for segment j (the owner-skip convention of
    // hits()). Iterating boxes in the outer loop keeps the inner loop pure
    // mul/min/max over the candidate arrays, which vectorizes.
    void clear_fan_2d(const Position& a, double height_a, const double* cx,
                      const double* cy, const double* ch, const int* cand_id, int m,
                      int skip_owner_a, unsigned char* vis) const {
        static thread_local std::vector<double> ixv, iyv, accv;
        static thread_local std::vector<unsigned char> axis;
        ixv.resize(static_cast<std::size_t>(m));
        iyv.resize(static_cast<std::size_t>(m));
        accv.assign(static_cast<std::size_t>(m), 0.0);
        axis.resize(static_cast<std::size_t>(m));
        double* __restrict ix = ixv.data();
        double* __restrict iy = iyv.data();
        double* __restrict acc = accv.data();  // > 0 once any box blocks
        for (int j = 0; j < m; ++j) {
            const double dx = cx[j] - a.x, dy = cy[j] - a.y;
            // near-axis directions make the reciprocal trick unsafe; those
            // segments are redone with the exact scalar test below
            const bool ax = std::abs(dx) < 1e-12 || std::abs(dy) < 1e-12;
            axis[static_cast<std::size_t>(j)] = ax ? 1 : 0;
            ix[j] = ax ? 0.0 : 1.0 / dx;
            iy[j] = ax ? 0.0 : 1.0 / dy;
        }
        for (std::size_t i = 0; i < owner_.size(); ++i) {
            const int owner = owner_[i];
            if (owner >= 0 && owner == skip_owner_a) continue;
            // owner-skip for the (at most one) candidate owning this box is
            // applied by snapshot/restore so the hot loop stays double-only
            int owner_j = -1;
            double owner_acc = 0.0;
            if (owner >= 0)
                for (int j = 0; j < m; ++j)
                    if (cand_id[j] == owner) {
                        owner_j = j;
                        owner_acc = acc[j];
                        break;
                    }
            const double A = xlo_[i] - a.x, B = xhi_[i] - a.x;
            const double C = ylo_[i] - a.y, D = yhi_[i] - a.y;
            for (int j = 0; j < m; ++j) {
                const double t0 = A * ix[j];
                const double t1 = B * ix[j];
                const double u0 = C * iy[j];
                const double u1 = D * iy[j];
                const double tmin =
                    std::max(std::max(std::min(t0, t1), std::min(u0, u1)), 0.0);
                const double tmax =
                    std::min(std::min(std::max(t0, t1), std::max(u0, u1)), 1.0);
                acc[j] += tmax >= tmin ? 1.0 : 0.0;
            }
            if (owner_j >= 0) acc[owner_j] = owner_acc;
        }
        for (int j = 0; j < m; ++j) vis[j] = acc[j] == 0.0 ? 1 : 0;
        for (int j = 0; j < m; ++j)
            if (axis[static_cast<std::size_t>(j)])
                vis[j] = blocked_id(a, height_a, {cx[j], cy[j]}, ch[j], skip_owner_a,
                                    cand_id[j]) < 0
                             ? 1
                             : 0;
    }

    // Collects the distinct blockage indices stored in every bucket the 2-D
    // segment projection passes through. Within one cell row the segment
    // occupies a contiguous x interval, so the walk is exact (a strict
    // superset of the cells containing segment points). `out` is caller-owned
    // scratch; dedup uses a generation stamp per blockage.
    void gather(const Position& a, const Position& b, std::vector<int>& out) const {
        out.clear();
        const int gen = ++stamp_gen_;
        const double dy = b.y - a.y;
        const int y0 = row_of(std::min(a.y, b.y));
        const int y1 = row_of(std::max(a.y, b.y));
        for (int cy = y0; cy <= y1; ++cy) {
            double tlo = 0.0, thi = 1.0;
            if (std::abs(dy) > 1e-12) {
                const double ylo = cy * cell_, yhi = ylo + cell_;
                double t0 = (ylo - a.y) / dy, t1 = (yhi - a.y) / dy;
                if (t0 > t1) std::swap(t0, t1);
                tlo = std::max(0.0, t0);
                thi = std::min(1.0, t1);
                if (tlo > thi) continue;
            }
            const double xa = a.x + (b.x - a.x) * tlo, xb = a.x + (b.x - a.x) * thi;
            const int x0 = col_of(std::min(xa, xb));
            const int x1 = col_of(std::max(xa, xb));
            for (int cx = x0; cx <= x1; ++cx)
                for (int id : buckets_[static_cast<std::size_t>(cy) * nx_ + cx])
                    if (stamp_[static_cast<std::size_t>(id)] != gen) {
                        stamp_[static_cast<std::size_t>(id)] = gen;
                        out.push_back(id);
                    }
        }
    }

    // Walks the same buckets as gather() but invokes `f(blockage_index)` on
    // each distinct entry as it is discovered; stops and returns true as soon
    // as `f` does. Lets boolean occlusion queries exit on the first hit.
    template <typename F>
    bool visit_until(const Position& a, const Position& b, F&& f) const {
        const int gen = ++stamp_gen_;
        const double dy = b.y - a.y;
        const int y0 = row_of(std::min(a.y, b.y));
        const int y1 = row_of(std::max(a.y, b.y));
        for (int cy = y0; cy <= y1; ++cy) {
            double tlo = 0.0, thi = 1.0;
            if (std::abs(dy) > 1e-12) {
                const double ylo = cy * cell_, yhi = ylo + cell_;
                double t0 = (ylo - a.y) / dy, t1 = (yhi - a.y) / dy;
                if (t0 > t1) std::swap(t0, t1);
                tlo = std::max(0.0, t0);
                thi = std::min(1.0, t1);
                if (tlo > thi) continue;
            }
            const double xa = a.x + (b.x - a.x) * tlo, xb = a.x + (b.x - a.x) * thi;
            const int x0 = col_of(std::min(xa, xb));
            const int x1 = col_of(std::max(xa, xb));
            for (int cx = x0; cx <= x1; ++cx)
                for (int id : buckets_[static_cast<std::size_t>(cy) * nx_ + cx])
                    if (stamp_[static_cast<std::size_t>(id)] != gen) {
                        stamp_[static_cast<std::size_t>(id)] = gen;
                        if (f(id)) return true;
                    }
        }
        return false;
    }

private:
    // Truncation differs from floor only for negative inputs, which the clamp
    // to cell 0 absorbs anyway.
    int col_of(double x) const {
        return std::clamp(static_cast<int>(x * inv_cell_), 0, nx_ - 1);
    }
    int row_of(double y) const {
        return std::clamp(static_cast<int>(y * inv_cell_), 0, ny_ - 1);
    }
    void cell_range(double xlo, double xhi, double ylo, double yhi, int& x0, int& x1,
                    int& y0, int& y1) const {
        x0 = col_of(xlo);
        x1 = col_of(xhi);
        y0 = row_of(ylo);
        y1 = row_of(yhi);
    }

    double cell_;
    double inv_cell_;
    int nx_, ny_;
    std::vector<std::vector<int>> buckets_;
    std::vector<double> xlo_, xhi_, ylo_, yhi_, h_;  // box bounds, SoA
    std::vector<int> owner_;
    double min_h_ = std::numeric_limits<double>::infinity();
    mutable std::vector<int> stamp_;  // per-blockage generation marks for dedup
    mutable int stamp_gen_ = 0;
};

// Broad-phase-accelerated variant; `scratch` avoids per-call allocation.
inline LosResult los_test(const Terrain& terrain, const std::vector<Blockage>& blockages,
                          const BlockageIndex& index, std::vector<int>& scratch,
                          const Position& a, double height_a, const Position& b,
                          double height_b, int skip_owner_a = -1, int skip_owner_b = -1) {
    (void)terrain;
    index.gather(a, b, scratch);
    LosResult best;
    for (int i : scratch) {
        const Blockage& blk = blockages[static_cast<std::size_t>(i)];
        if (blk.owner_vehicle_id >= 0 &&
            (blk.owner_vehicle_id == skip_owner_a || blk.owner_vehicle_id == skip_owner_b))
            continue;
        if (detail::segment_hits_box(a.x, a.y, height_a, b.x, b.y, height_b, blk)) {
            if (best.los || blk.id < best.blocker_id) {
                best.los = false;
                best.blocker_id = blk.id;
            }
        }
    }
    return best;
}

// Boolean-only indexed occlusion query; exits on the first blocking volume.
inline bool los_blocked(const std::vector<Blockage>& blockages, const BlockageIndex& index,
                        const Position& a, double height_a, const Position& b,
                        double height_b, int skip_owner_a = -1, int skip_owner_b = -1) {
    (void)blockages;  // geometry is mirrored inside the index
    return index.blocked(a, height_a, b, height_b, skip_owner_a, skip_owner_b);
}

struct BlockagePlacementConfig {
    int count = 10;
    double half_width_x = 25.0;
    double half_width_y = 25.0;
    double height = 10.0;
    // Built-up area model: up to `core_cap` footprints form a core around the
    // BS whose radius is `deployment_radius` when the core is full and shrinks
    // as sqrt(core_count / core_cap) so the core density stays constant; any
    // further footprints go to the outskirts, at least `outskirts_radius` away
    // from the BS. Non-positive deployment_radius disables the rule and
    // samples uniformly over the whole terrain.
    double deployment_radius = 75.0;
    int core_cap = 6;
    double outskirts_radius = 160.0;
    int max_attempts_per_blockage = 10000;
    int max_restarts = 20;
};

// Seeded rejection sampling of non-overlapping permanent footprints, none
// containing the BS position.
inline std::vector<Blockage> place_blockages(const Terrain& terrain,
                                             const BlockagePlacementConfig& cfg, Rng& rng) {
    if (cfg.count < 0) throw PlacementFailed("place_blockages: negative count");
    if (2.0 * cfg.half_width_x > terrain.width || 2.0 * cfg.half_width_y > terrain.depth)
        throw PlacementFailed("place_blockages: footprint larger than terrain");
    const double xlo = cfg.half_width_x, xhi = terrain.width - cfg.half_width_x;
    const double ylo = cfg.half_width_y, yhi = terrain.depth - cfg.half_width_y;
    const bool zoned = cfg.deployment_radius > 0.0 && cfg.count > 0;
    const int core_n = zoned ? std::min(cfg.count, cfg.core_cap) : cfg.count;
    double cxlo = xlo, cxhi = xhi, cylo = ylo, cyhi = yhi;
    if (zoned) {
        const double core_radius =
            cfg.deployment_radius *
            std::sqrt(static_cast<double>(core_n) / static_cast<double>(cfg.core_cap));
        cxlo = std::max(xlo, terrain.bs_position.x - core_radius);
        cxhi = std::min(xhi, terrain.bs_position.x + core_radius);
        cylo = std::max(ylo, terrain.bs_position.y - core_radius);
        cyhi = std::min(yhi, terrain.bs_position.y + core_radius);
        if (!(cxlo <= cxhi) || !(cylo <= cyhi))
            throw PlacementFailed("place_blockages: core deployment region is empty");
    }
    for (int restart = 0; restart <= cfg.max_restarts; ++restart) {
        std::vector<Blockage> placed;
        placed.reserve(static_cast<std::size_t>(cfg.count));
        bool ok = true;
        for (int i = 0; i < cfg.count && ok; ++i) {
            ok = false;
            const bool core = i < core_n;
            for (int attempt = 0; attempt < cfg.max_attempts_per_blockage; ++attempt) {
                Blockage b;
                b.id = i;
                b.half_width_x = cfg.half_width_x;
                b.half_width_y = cfg.half_width_y;
                b.height = cfg.height;
                b.classification = BlockageClass::Permanent;
                if (core) {
                    b.center.x = rng.uniform(cxlo, cxhi);
                    b.center.y = rng.uniform(cylo, cyhi);
                } else {
                    b.center.x = rng.uniform(xlo, xhi);
                    b.center.y = rng.uniform(ylo, yhi);
                    if (distance(b.center, terrain.bs_position) < cfg.outskirts_radius)
                        continue;
                }
                if (b.footprint_contains(terrain.bs_position)) continue;
                bool overlap = false;
                for (const Blockage& other : placed)
                    if (b.footprint_overlaps(other)) { overlap = true; break; }
                if (overlap) continue;
                placed.push_back(b);
                ok = true;
                break;
            }
        }
        if (ok) return placed;
    }
    throw PlacementFailed("place_blockages: could not place " + std::to_string(cfg.count) +
                          " non-overlapping footprints");
}

}  // namespace rml
