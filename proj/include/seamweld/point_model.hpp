#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <unordered_map>
#include <vector>

#include "seamweld/errors.hpp"

namespace seamweld {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point& a, const Point& b) = default;
};

// Identity of a physical point across partitions.  Derived from the bit
// patterns of the coordinates, so two points share an id exactly when their
// (x, y) pairs are bit-identical.  Opaque 64 bits; ordering is arbitrary but
// stable, which makes it a convenient canonical sort key.
struct GlobalPointId {
    std::uint64_t value = 0;

    friend bool operator==(GlobalPointId a, GlobalPointId b) = default;
    friend auto operator<=>(GlobalPointId a, GlobalPointId b) = default;
};

struct GlobalPointIdHash {
    std::size_t operator()(GlobalPointId id) const noexcept {
        return static_cast<std::size_t>(id.value);
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t double_bits(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    return bits;
}

}  // namespace detail

// Hash of the two coordinate bit patterns.  Collisions across distinct
// coordinates are astronomically rare but are still detected by callers
// that keep coordinates alongside ids (see assign_global_ids).
inline GlobalPointId point_id(const Point& p) {
    std::uint64_t h = detail::splitmix64(detail::double_bits(p.x));
    h = detail::splitmix64(h ^ detail::double_bits(p.y));
    return GlobalPointId{h};
}

// One overlapping subset of the scene: its points, the scalar data attached
// to them, and the identity map into the global point set.  The three arrays
// are parallel.  Immutable once built; safe to share across threads.
struct PointCloudPartition {
    std::size_t index = 0;
    std::vector<Point> points;
    std::vector<double> values;
    std::vector<GlobalPointId> global_ids;

    std::size_t size() const { return points.size(); }
};

// The final merged scene: one entry per distinct global point, sorted by id.
// provenance[k] is the overlap degree of point k (how many partitions held it).
struct MergedDataset {
    std::vector<GlobalPointId> global_ids;
    std::vector<Point> points;
    std::vector<double> values;
    std::vector<std::uint32_t> provenance;

    std::size_t size() const { return global_ids.size(); }
};

struct IdOptions {
    // Snap coordinates to multiples of `quantum` before hashing.  Off (0) by
    // default: partitions cut from one master grid agree bitwise already, and
    // epsilon matching would create ambiguous many-to-many maps.  Turn on for
    // inputs from heterogeneous sources.
    double quantum = 0.0;
};

inline Point quantize(const Point& p, double quantum) {
    if (quantum <= 0.0) return p;
    return Point{std::round(p.x / quantum) * quantum,
                 std::round(p.y / quantum) * quantum};
}

inline void validate_partition(const PointCloudPartition& part) {
    if (part.points.size() < 3)
        throw InvalidData("partition " + std::to_string(part.index) +
                          " has " + std::to_string(part.points.size()) +
                          " points; at least 3 required");
    if (part.values.size() != part.points.size())
        throw InvalidData("partition " + std::to_string(part.index) +
                          ": points/values length mismatch");
    for (const Point& p : part.points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw InvalidData("partition " + std::to_string(part.index) +
                              " contains a non-finite coordinate");
    for (double v : part.values)
        if (!std::isfinite(v))
            throw InvalidData("partition " + std::to_string(part.index) +
                              " contains a non-finite data value");
}

// Populates global_ids for every partition.  Identical coordinates across
// partitions share one id; distinct coordinates never silently collide
// (coordinates are kept per id and re-verified on every reuse).  Idempotent.
inline void assign_global_ids(std::vector<PointCloudPartition>& partitions,
                              const IdOptions& options = {}) {
    std::size_t total = 0;
    for (const auto& part : partitions) total += part.size();

    std::unordered_map<std::uint64_t, Point> seen;
    seen.reserve(total);

    for (auto& part : partitions) {
        validate_partition(part);
        part.global_ids.resize(part.points.size());

        std::unordered_map<std::uint64_t, std::uint32_t> local;
        local.reserve(part.points.size());

        for (std::size_t k = 0; k < part.points.size(); ++k) {
            const Point q = quantize(part.points[k], options.quantum);
            const GlobalPointId id = point_id(q);

            auto [it, inserted] = seen.emplace(id.value, q);
            if (!inserted && it->second != q)
                throw GlobalIdCollision(
                    "id collision between (" + std::to_string(it->second.x) + ", " +
                    std::to_string(it->second.y) + ") and (" + std::to_string(q.x) +
                    ", " + std::to_string(q.y) + ")");

            auto [lit, fresh] = local.emplace(id.value, static_cast<std::uint32_t>(k));
            if (!fresh)
                throw DuplicatePointInPartition(part.index, part.points[k].x,
                                                part.points[k].y);
            part.global_ids[k] = id;
        }
    }
}

}  // namespace seamweld
