#pragma once

// Synthetic scenes with known ground truth, for validating merges without
// real data.  Points are sampled uniformly in the unit square and cut into
// overlapping rectangular tiles; each tile's data is truth plus an injected
// per-tile artifact (a constant, optionally plus a smooth low-order
// polynomial trend).  Everything is a pure function of the seed.
//
// The `staggered` layout offsets alternate rows brick-style, which caps the
// overlap degree at 3 (two tiles side by side plus one tile from the other
// row); the plain grid reaches degree 4 where four tile corners meet.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seamweld/delaunay.hpp"
#include "seamweld/errors.hpp"
#include "seamweld/point_model.hpp"

namespace seamweld {

enum class TruthModel { gaussian_bumps, polynomial, plane };
enum class ArtifactModel { constant, constant_plus_smooth };
enum class TileLayout { grid, staggered };

struct SceneConfig {
    std::uint64_t seed = 1;
    std::size_t point_count = 10000;
    int tiles_x = 2;
    int tiles_y = 2;
    double overlap_fraction = 0.25;  // (0, 0.5]
    TruthModel truth_model = TruthModel::gaussian_bumps;
    ArtifactModel artifact_model = ArtifactModel::constant;
    double artifact_scale = 5.0;
    double truth_scale = 100.0;
    TileLayout layout = TileLayout::grid;
};

struct Tile {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    bool contains(const Point& p) const {
        return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    }
};

// Per-tile smooth artifact: quadratic in tile-local coordinates.
struct SmoothArtifact {
    Tile tile;
    std::array<double, 5> coeff{};  // u, v, u^2, uv, v^2 with u,v in [0,1]

    double operator()(const Point& p) const {
        const double u = (p.x - tile.x0) / (tile.x1 - tile.x0);
        const double v = (p.y - tile.y0) / (tile.y1 - tile.y0);
        return coeff[0] * u + coeff[1] * v + coeff[2] * u * u + coeff[3] * u * v +
               coeff[4] * v * v;
    }
};

struct SceneTruth {
    std::vector<GlobalPointId> ids;  // ascending
    std::vector<Point> points;
    std::vector<double> ground_truth;
    std::vector<std::vector<std::uint32_t>> memberships;  // ascending tile indices
    std::vector<Tile> tiles;
    std::vector<double> injected_offsets;
    std::vector<SmoothArtifact> injected_smooth;  // zero coeffs for constant model
};

struct ScoreRecord {
    double gauge = 0.0;  // the constant removed before comparison
    double rmse = 0.0;
    double max_error = 0.0;
    double seam_max_merged = 0.0;  // max value jump across tile-crossing Delaunay edges
    double seam_max_truth = 0.0;   // truth's own jump across the same edges
    std::size_t crossing_edges = 0;
};

namespace detail {

// Splittable counter-based generator: stream k of seed s starts from
// splitmix64(s ^ splitmix64(k)), then advances by the golden-ratio
// increment.  Portable and stable across platforms.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream)
        : state_(splitmix64(seed ^ splitmix64(stream + 0x517cc1b727220a95ULL))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform() {  // [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double symmetric() {  // [-1, 1)
        return 2.0 * uniform() - 1.0;
    }

private:
    std::uint64_t state_;
};

// k tiles covering [0,1] with fraction f of each tile shared with the next.
inline std::vector<std::pair<double, double>> tile_spans(int k, double f) {
    std::vector<std::pair<double, double>> spans;
    const double w = 1.0 / (k - (k - 1) * f);
    const double step = w * (1.0 - f);
    for (int j = 0; j < k; ++j) {
        const double a = j * step;
        const double b = (j + 1 == k) ? 1.0 : a + w;
        spans.emplace_back(a, b);
    }
    return spans;
}

inline std::vector<std::pair<double, double>> overlap_bands(
    const std::vector<std::pair<double, double>>& spans) {
    std::vector<std::pair<double, double>> bands;
    for (std::size_t j = 0; j + 1 < spans.size(); ++j)
        bands.emplace_back(spans[j + 1].first, spans[j].second);
    return bands;
}

struct TruthField {
    TruthModel model{};
    double scale = 1.0;
    std::array<double, 2> plane{};
    std::array<double, 6> poly{};  // 1, x, y, x^2, xy, y^2
    struct Bump {
        double cx, cy, sigma, amp;
    };
    std::vector<Bump> bumps;

    double operator()(const Point& p) const {
        switch (model) {
            case TruthModel::plane:
                return scale * (plane[0] * p.x + plane[1] * p.y);
            case TruthModel::polynomial:
                return scale * (poly[0] + poly[1] * p.x + poly[2] * p.y +
                                poly[3] * p.x * p.x + poly[4] * p.x * p.y +
                                poly[5] * p.y * p.y);
            case TruthModel::gaussian_bumps: {
                double acc = 0.0;
                for (const Bump& b : bumps) {
                    const double dx = p.x - b.cx;
                    const double dy = p.y - b.cy;
                    acc += b.amp * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
                }
                return scale * acc;
            }
        }
        return 0.0;
    }

    static TruthField make(TruthModel model, double truth_scale, Rng rng) {
        TruthField f;
        f.model = model;
        if (model == TruthModel::plane) {
            double a = rng.symmetric(), b = rng.symmetric();
            const double norm = std::abs(a) + std::abs(b);
            if (norm < 0.1) { a = 0.6; b = 0.4; }
            f.plane = {a, b};
            f.scale = truth_scale / std::max(0.1, std::abs(a) + std::abs(b));
        } else if (model == TruthModel::polynomial) {
            double norm = 0.0;
            for (double& c : f.poly) {
                c = rng.symmetric();
                norm += std::abs(c);
            }
            f.scale = truth_scale / std::max(0.5, norm);
        } else {
            double norm = 0.0;
            for (int b = 0; b < 5; ++b) {
                TruthField::Bump bump;
                bump.cx = 0.1 + 0.8 * rng.uniform();
                bump.cy = 0.1 + 0.8 * rng.uniform();
                bump.sigma = 0.08 + 0.17 * rng.uniform();
                bump.amp = rng.symmetric();
                norm += std::abs(bump.amp);
                f.bumps.push_back(bump);
            }
            f.scale = truth_scale / std::max(0.5, norm);
        }
        return f;
    }
};

}  // namespace detail

inline std::vector<Tile> scene_tiles(const SceneConfig& cfg) {
    if (cfg.tiles_x < 1 || cfg.tiles_y < 1)
        throw InvalidConfig("scene: tile counts must be positive");
    if (!(cfg.overlap_fraction > 0.0) || cfg.overlap_fraction > 0.5)
        throw InvalidConfig("scene: overlap_fraction must be in (0, 0.5]");

    const auto rows = detail::tile_spans(cfg.tiles_y, cfg.overlap_fraction);
    std::vector<Tile> tiles;

    if (cfg.layout == TileLayout::grid) {
        const auto cols = detail::tile_spans(cfg.tiles_x, cfg.overlap_fraction);
        for (const auto& [y0, y1] : rows)
            for (const auto& [x0, x1] : cols) tiles.push_back({x0, x1, y0, y1});
        return tiles;
    }

    // Staggered: odd rows carry one tile fewer, brick-style.  Valid only
    // while the x-overlap bands of adjacent rows stay disjoint, which is
    // what caps the overlap degree at 3.
    if (cfg.tiles_x < 2)
        throw InvalidConfig("scene: staggered layout needs tiles_x >= 2");
    const auto even_cols = detail::tile_spans(cfg.tiles_x, cfg.overlap_fraction);
    const auto odd_cols = cfg.tiles_x == 2
                              ? std::vector<std::pair<double, double>>{{0.0, 1.0}}
                              : detail::tile_spans(cfg.tiles_x - 1, cfg.overlap_fraction);

    const auto even_bands = detail::overlap_bands(even_cols);
    const auto odd_bands = detail::overlap_bands(odd_cols);
    for (const auto& [a0, a1] : even_bands)
        for (const auto& [b0, b1] : odd_bands)
            if (a0 < b1 && b0 < a1)
                throw InvalidConfig(
                    "scene: overlap_fraction too large for a staggered layout "
                    "(row overlap bands collide)");

    for (int r = 0; r < cfg.tiles_y; ++r) {
        const auto& cols = (r % 2 == 0) ? even_cols : odd_cols;
        for (const auto& [x0, x1] : cols)
            tiles.push_back({x0, x1, rows[r].first, rows[r].second});
    }
    return tiles;
}

inline std::pair<std::vector<PointCloudPartition>, SceneTruth> generate_scene(
    const SceneConfig& cfg) {
    if (cfg.point_count < 16)
        throw InvalidConfig("scene: point_count too small");
    if (cfg.artifact_scale < 0.0)
        throw InvalidConfig("scene: artifact_scale must be >= 0");

    const std::vector<Tile> tiles = scene_tiles(cfg);
    const std::size_t m = tiles.size();

    const auto truth_field =
        detail::TruthField::make(cfg.truth_model, cfg.truth_scale, detail::Rng(cfg.seed, 2));

    SceneTruth truth;
    truth.tiles = tiles;
    truth.injected_offsets.resize(m);
    truth.injected_smooth.resize(m);
    {
        detail::Rng artifact_rng(cfg.seed, 3);
        for (std::size_t t = 0; t < m; ++t) {
            truth.injected_offsets[t] = cfg.artifact_scale * artifact_rng.symmetric();
            SmoothArtifact smooth;
            smooth.tile = tiles[t];
            if (cfg.artifact_model == ArtifactModel::constant_plus_smooth) {
                double norm = 0.0;
                for (double& c : smooth.coeff) {
                    c = artifact_rng.symmetric();
                    norm += std::abs(c);
                }
                for (double& c : smooth.coeff) c *= cfg.artifact_scale / std::max(0.5, norm);
            }
            truth.injected_smooth[t] = smooth;
        }
    }

    detail::Rng point_rng(cfg.seed, 1);
    std::vector<PointCloudPartition> partitions(m);
    for (std::size_t t = 0; t < m; ++t) partitions[t].index = t;

    truth.points.reserve(cfg.point_count);
    truth.ground_truth.reserve(cfg.point_count);
    truth.memberships.reserve(cfg.point_count);

    for (std::size_t k = 0; k < cfg.point_count; ++k) {
        const Point p{point_rng.uniform(), point_rng.uniform()};
        const double t_val = truth_field(p);

        std::vector<std::uint32_t> member;
        for (std::uint32_t t = 0; t < m; ++t) {
            if (!tiles[t].contains(p)) continue;
            member.push_back(t);
            partitions[t].points.push_back(p);
            partitions[t].values.push_back(t_val + truth.injected_offsets[t] +
                                           truth.injected_smooth[t](p));
        }
        truth.points.push_back(p);
        truth.ground_truth.push_back(t_val);
        truth.memberships.push_back(std::move(member));
    }

    for (const auto& part : partitions)
        if (part.points.size() < 3)
            throw InvalidConfig("scene: tile " + std::to_string(part.index) +
                                " received fewer than 3 points; raise point_count");

    assign_global_ids(partitions);

    truth.ids.resize(truth.points.size());
    for (std::size_t k = 0; k < truth.points.size(); ++k)
        truth.ids[k] = point_id(truth.points[k]);

    std::vector<std::size_t> by_id(truth.points.size());
    for (std::size_t k = 0; k < by_id.size(); ++k) by_id[k] = k;
    std::sort(by_id.begin(), by_id.end(),
              [&](std::size_t a, std::size_t b) { return truth.ids[a] < truth.ids[b]; });

    SceneTruth sorted;
    sorted.tiles = std::move(truth.tiles);
    sorted.injected_offsets = std::move(truth.injected_offsets);
    sorted.injected_smooth = std::move(truth.injected_smooth);
    sorted.ids.reserve(by_id.size());
    sorted.points.reserve(by_id.size());
    sorted.ground_truth.reserve(by_id.size());
    sorted.memberships.reserve(by_id.size());
    for (std::size_t k : by_id) {
        sorted.ids.push_back(truth.ids[k]);
        sorted.points.push_back(truth.points[k]);
        sorted.ground_truth.push_back(truth.ground_truth[k]);
        sorted.memberships.push_back(std::move(truth.memberships[k]));
    }
    return {std::move(partitions), std::move(sorted)};
}

// Gauge-fixed comparison against ground truth plus the seam metric: the
// largest value jump across Delaunay edges whose endpoints belong to
// different tile sets, side by side with the truth field's own jump over
// the same edges.
inline ScoreRecord score(const MergedDataset& merged, const SceneTruth& truth) {
    if (merged.global_ids.size() != truth.ids.size())
        throw IdMismatch("score: merged has " + std::to_string(merged.global_ids.size()) +
                         " points, truth has " + std::to_string(truth.ids.size()));
    for (std::size_t k = 0; k < truth.ids.size(); ++k)
        if (merged.global_ids[k] != truth.ids[k])
            throw IdMismatch("score: id mismatch at sorted position " + std::to_string(k));

    ScoreRecord rec;
    const std::size_t n = truth.ids.size();

    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += merged.values[k] - truth.ground_truth[k];
    rec.gauge = sum / static_cast<double>(n);

    double rss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = merged.values[k] - truth.ground_truth[k] - rec.gauge;
        rss += e * e;
        rec.max_error = std::max(rec.max_error, std::abs(e));
    }
    rec.rmse = std::sqrt(rss / static_cast<double>(n));

    const Triangulation tri = triangulate(truth.points);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    edges.reserve(tri.triangles.size());
    for (std::size_t t = 0; t < tri.triangles.size(); t += 3) {
        const std::size_t v[3] = {tri.triangles[t], tri.triangles[t + 1],
                                  tri.triangles[t + 2]};
        for (int e = 0; e < 3; ++e) {
            const std::size_t a = v[e], b = v[(e + 1) % 3];
            edges.emplace_back(std::min(a, b), std::max(a, b));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    for (auto [a, b] : edges) {
        if (truth.memberships[a] == truth.memberships[b]) continue;
        ++rec.crossing_edges;
        rec.seam_max_merged =
            std::max(rec.seam_max_merged, std::abs(merged.values[a] - merged.values[b]));
        rec.seam_max_truth = std::max(
            rec.seam_max_truth, std::abs(truth.ground_truth[a] - truth.ground_truth[b]));
    }
    return rec;
}

}  // namespace seamweld
