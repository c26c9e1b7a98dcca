#pragma once

// Sweep-hull Delaunay triangulation of 2-D point sets, double precision.
// Points are inserted in order of distance from the seed triangle's
// circumcenter while an advancing convex hull is maintained; each new
// triangle is legalized with in-circle flips.  Expected O(n log n).
//
// Exactly collinear inputs (or n < 3) are rejected: no triangulation exists
// and downstream graph construction requires one.  Cocircular ties resolve
// to either diagonal depending on insertion order, which is acceptable for
// every consumer in this library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "seamweld/errors.hpp"
#include "seamweld/point_model.hpp"

namespace seamweld {

struct Triangulation {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    std::vector<std::size_t> triangles;  // 3 vertex indices per triangle
    std::vector<std::size_t> halfedges;  // twin halfedge index, or npos on the hull
    std::vector<std::size_t> hull;       // hull vertices in traversal order

    std::size_t triangle_count() const { return triangles.size() / 3; }
};

namespace detail {

inline constexpr std::size_t tri_npos = std::numeric_limits<std::size_t>::max();

inline double squared_dist(double ax, double ay, double bx, double by) {
    const double dx = ax - bx;
    const double dy = ay - by;
    return dx * dx + dy * dy;
}

// True when p -> q -> r turns counterclockwise (y-up coordinates).
inline bool ccw(double px, double py, double qx, double qy, double rx, double ry) {
    return (qy - py) * (rx - qx) - (qx - px) * (ry - qy) < 0.0;
}

// True when t is strictly inside the circumcircle of the clockwise
// triangle (a, b, c).
inline bool in_circle(double ax, double ay, double bx, double by,
                      double cx, double cy, double tx, double ty) {
    const double dx = ax - tx;
    const double dy = ay - ty;
    const double ex = bx - tx;
    const double ey = by - ty;
    const double fx = cx - tx;
    const double fy = cy - ty;

    const double ap = dx * dx + dy * dy;
    const double bp = ex * ex + ey * ey;
    const double cp = fx * fx + fy * fy;

    return (dx * (ey * cp - bp * fy) -
            dy * (ex * cp - bp * fx) +
            ap * (ex * fy - ey * fx)) < 0.0;
}

inline double squared_circumradius(double ax, double ay, double bx, double by,
                                   double cx, double cy) {
    const double dx = bx - ax;
    const double dy = by - ay;
    const double ex = cx - ax;
    const double ey = cy - ay;
    const double bl = dx * dx + dy * dy;
    const double cl = ex * ex + ey * ey;
    const double d = dx * ey - dy * ex;
    if (bl == 0.0 || cl == 0.0 || d == 0.0)
        return std::numeric_limits<double>::max();
    const double x = (ey * bl - dy * cl) * 0.5 / d;
    const double y = (dx * cl - ex * bl) * 0.5 / d;
    return x * x + y * y;
}

class SweepHull {
public:
    explicit SweepHull(std::span<const Point> pts) : points_(pts) {}

    Triangulation run() {
        const std::size_t n = points_.size();
        if (n < 3) throw DegenerateGeometry("triangulation needs at least 3 points");

        double min_x = std::numeric_limits<double>::max();
        double min_y = std::numeric_limits<double>::max();
        double max_x = std::numeric_limits<double>::lowest();
        double max_y = std::numeric_limits<double>::lowest();
        for (const Point& p : points_) {
            min_x = std::min(min_x, p.x);
            min_y = std::min(min_y, p.y);
            max_x = std::max(max_x, p.x);
            max_y = std::max(max_y, p.y);
        }
        const double cx = (min_x + max_x) / 2;
        const double cy = (min_y + max_y) / 2;

        // Seed: the point nearest the bbox center, its nearest distinct
        // neighbor, and the point forming the smallest circumcircle with
        // those two.
        std::size_t i0 = nearest_to(cx, cy, tri_npos, false);
        std::size_t i1 = nearest_to(points_[i0].x, points_[i0].y, i0, true);
        if (i1 == tri_npos)
            throw DegenerateGeometry("all points coincide");

        double min_radius = std::numeric_limits<double>::max();
        std::size_t i2 = tri_npos;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == i0 || i == i1) continue;
            const double r = squared_circumradius(points_[i0].x, points_[i0].y,
                                                  points_[i1].x, points_[i1].y,
                                                  points_[i].x, points_[i].y);
            if (r < min_radius) {
                min_radius = r;
                i2 = i;
            }
        }
        if (i2 == tri_npos || min_radius == std::numeric_limits<double>::max())
            throw DegenerateGeometry("all points are collinear");

        // Seed triangle stored clockwise; every later triangle follows suit.
        if (ccw(points_[i0].x, points_[i0].y, points_[i1].x, points_[i1].y,
                points_[i2].x, points_[i2].y))
            std::swap(i1, i2);

        center_x_ = circumcenter_x(i0, i1, i2);
        center_y_ = circumcenter_y(i0, i1, i2);

        std::vector<double> dists(n);
        for (std::size_t i = 0; i < n; ++i)
            dists[i] = squared_dist(points_[i].x, points_[i].y, center_x_, center_y_);
        std::vector<std::size_t> ids(n);
        std::iota(ids.begin(), ids.end(), std::size_t{0});
        std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
            if (dists[a] != dists[b]) return dists[a] < dists[b];
            return a < b;
        });

        hash_size_ = static_cast<std::size_t>(std::llround(std::ceil(std::sqrt(double(n)))));
        hash_.assign(hash_size_, tri_npos);
        hull_prev_.resize(n);
        hull_next_.resize(n);
        hull_tri_.resize(n);

        hull_start_ = i0;

        hull_next_[i0] = hull_prev_[i2] = i1;
        hull_next_[i1] = hull_prev_[i0] = i2;
        hull_next_[i2] = hull_prev_[i1] = i0;

        hull_tri_[i0] = 0;
        hull_tri_[i1] = 1;
        hull_tri_[i2] = 2;

        hash_[hash_key(points_[i0].x, points_[i0].y)] = i0;
        hash_[hash_key(points_[i1].x, points_[i1].y)] = i1;
        hash_[hash_key(points_[i2].x, points_[i2].y)] = i2;

        const std::size_t max_triangles = 2 * n - 5;
        triangles_.reserve(max_triangles * 3);
        halfedges_.reserve(max_triangles * 3);
        add_triangle(i0, i1, i2, tri_npos, tri_npos, tri_npos);

        double prev_x = std::numeric_limits<double>::quiet_NaN();
        double prev_y = std::numeric_limits<double>::quiet_NaN();

        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = ids[k];
            const double x = points_[i].x;
            const double y = points_[i].y;

            // Coincident points cannot be triangulated; reject instead of
            // silently dropping a vertex from the graph.
            if (k > 0 && x == prev_x && y == prev_y)
                throw DegenerateGeometry("coincident points in triangulation input");
            prev_x = x;
            prev_y = y;

            if (i == i0 || i == i1 || i == i2) continue;

            // Find a hull edge visible from the new point: hash by pseudo-angle
            // around the center, then walk.
            std::size_t start = 0;
            const std::size_t key = hash_key(x, y);
            for (std::size_t j = 0; j < hash_size_; ++j) {
                start = hash_[(key + j) % hash_size_];
                if (start != tri_npos && start != hull_next_[start]) break;
            }

            start = hull_prev_[start];
            std::size_t e = start;
            std::size_t q;
            while (q = hull_next_[e],
                   !ccw(x, y, points_[e].x, points_[e].y, points_[q].x, points_[q].y)) {
                e = q;
                if (e == start) {
                    e = tri_npos;
                    break;
                }
            }
            if (e == tri_npos)
                throw DegenerateGeometry("point not visible from hull (coincident input?)");

            // First triangle from the new point.
            std::size_t t = add_triangle(e, i, hull_next_[e], tri_npos, tri_npos, hull_tri_[e]);

            hull_tri_[i] = legalize(t + 2);
            hull_tri_[e] = t;

            // Walk forward over hull edges the point can see.
            std::size_t next = hull_next_[e];
            while (q = hull_next_[next],
                   ccw(x, y, points_[next].x, points_[next].y, points_[q].x, points_[q].y)) {
                t = add_triangle(next, i, q, hull_tri_[i], tri_npos, hull_tri_[next]);
                hull_tri_[i] = legalize(t + 2);
                hull_next_[next] = next;  // removed from hull
                next = q;
            }

            // Walk backward on the other side.
            if (e == start) {
                while (q = hull_prev_[e],
                       ccw(x, y, points_[q].x, points_[q].y, points_[e].x, points_[e].y)) {
                    t = add_triangle(q, i, e, tri_npos, hull_tri_[e], hull_tri_[q]);
                    legalize(t + 2);
                    hull_tri_[q] = t;
                    hull_next_[e] = e;  // removed from hull
                    e = q;
                }
            }

            hull_prev_[i] = e;
            hull_start_ = e;
            hull_prev_[next] = i;
            hull_next_[e] = i;
            hull_next_[i] = next;

            hash_[hash_key(x, y)] = i;
            hash_[hash_key(points_[e].x, points_[e].y)] = e;
        }

        Triangulation out;
        out.triangles = std::move(triangles_);
        out.halfedges = std::move(halfedges_);
        std::size_t e = hull_start_;
        do {
            out.hull.push_back(e);
            e = hull_next_[e];
        } while (e != hull_start_);
        return out;
    }

private:
    std::size_t nearest_to(double x, double y, std::size_t skip,
                           bool require_distinct) const {
        double best = std::numeric_limits<double>::max();
        std::size_t pick = tri_npos;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (i == skip) continue;
            const double d = squared_dist(points_[i].x, points_[i].y, x, y);
            if (require_distinct && d == 0.0) continue;
            if (d < best) {
                best = d;
                pick = i;
            }
        }
        return pick;
    }

    double circumcenter_x(std::size_t a, std::size_t b, std::size_t c) const {
        const double dx = points_[b].x - points_[a].x;
        const double dy = points_[b].y - points_[a].y;
        const double ex = points_[c].x - points_[a].x;
        const double ey = points_[c].y - points_[a].y;
        const double bl = dx * dx + dy * dy;
        const double cl = ex * ex + ey * ey;
        const double d = dx * ey - dy * ex;
        return points_[a].x + (ey * bl - dy * cl) * 0.5 / d;
    }

    double circumcenter_y(std::size_t a, std::size_t b, std::size_t c) const {
        const double dx = points_[b].x - points_[a].x;
        const double dy = points_[b].y - points_[a].y;
        const double ex = points_[c].x - points_[a].x;
        const double ey = points_[c].y - points_[a].y;
        const double bl = dx * dx + dy * dy;
        const double cl = ex * ex + ey * ey;
        const double d = dx * ey - dy * ex;
        return points_[a].y + (dx * cl - ex * bl) * 0.5 / d;
    }

    // Monotone map from direction to [0, 1), cheaper than atan2.
    std::size_t hash_key(double x, double y) const {
        const double dx = x - center_x_;
        const double dy = y - center_y_;
        const double p = dx / (std::abs(dx) + std::abs(dy));
        const double angle = (dy > 0.0 ? 3.0 - p : 1.0 + p) / 4.0;
        if (std::isnan(angle)) return 0;  // point at the sort center
        const auto k = static_cast<std::size_t>(
            std::llround(std::floor(angle * static_cast<double>(hash_size_))));
        return k % hash_size_;
    }

    void link(std::size_t a, std::size_t b) {
        if (a == halfedges_.size())
            halfedges_.push_back(b);
        else
            halfedges_[a] = b;
        if (b != tri_npos) {
            if (b == halfedges_.size())
                halfedges_.push_back(a);
            else
                halfedges_[b] = a;
        }
    }

    std::size_t add_triangle(std::size_t v0, std::size_t v1, std::size_t v2,
                             std::size_t a, std::size_t b, std::size_t c) {
        const std::size_t t = triangles_.size();
        triangles_.push_back(v0);
        triangles_.push_back(v1);
        triangles_.push_back(v2);
        link(t, a);
        link(t + 1, b);
        link(t + 2, c);
        return t;
    }

    // Restore the Delaunay condition around halfedge `a` by flipping
    // illegal edges, iteratively with an explicit stack.
    std::size_t legalize(std::size_t a) {
        std::size_t i = 0;
        std::size_t ar = 0;
        edge_stack_.clear();

        while (true) {
            const std::size_t b = halfedges_[a];
            const std::size_t a0 = 3 * (a / 3);
            ar = a0 + (a + 2) % 3;

            if (b == tri_npos) {
                if (i > 0) {
                    --i;
                    a = edge_stack_[i];
                    continue;
                }
                break;
            }

            const std::size_t b0 = 3 * (b / 3);
            const std::size_t al = a0 + (a + 1) % 3;
            const std::size_t bl = b0 + (b + 2) % 3;

            const std::size_t p0 = triangles_[ar];
            const std::size_t pr = triangles_[a];
            const std::size_t pl = triangles_[al];
            const std::size_t p1 = triangles_[bl];

            const bool illegal = in_circle(
                points_[p0].x, points_[p0].y, points_[pr].x, points_[pr].y,
                points_[pl].x, points_[pl].y, points_[p1].x, points_[p1].y);

            if (illegal) {
                triangles_[a] = p1;
                triangles_[b] = p0;

                const std::size_t hbl = halfedges_[bl];

                // The flipped edge lay on the hull; patch the hull's
                // triangle reference.
                if (hbl == tri_npos) {
                    std::size_t e = hull_start_;
                    do {
                        if (hull_tri_[e] == bl) {
                            hull_tri_[e] = a;
                            break;
                        }
                        e = hull_prev_[e];
                    } while (e != hull_start_);
                }
                link(a, hbl);
                link(b, halfedges_[ar]);
                link(ar, bl);

                const std::size_t br = b0 + (b + 1) % 3;
                if (i < edge_stack_.size())
                    edge_stack_[i] = br;
                else
                    edge_stack_.push_back(br);
                ++i;
            } else {
                if (i > 0) {
                    --i;
                    a = edge_stack_[i];
                    continue;
                }
                break;
            }
        }
        return ar;
    }

    std::span<const Point> points_;
    std::vector<std::size_t> triangles_;
    std::vector<std::size_t> halfedges_;
    std::vector<std::size_t> hull_prev_, hull_next_, hull_tri_;
    std::vector<std::size_t> hash_;
    std::vector<std::size_t> edge_stack_;
    std::size_t hull_start_ = 0;
    std::size_t hash_size_ = 0;
    double center_x_ = 0.0, center_y_ = 0.0;
};

}  // namespace detail

inline Triangulation triangulate(std::span<const Point> points) {
    return detail::SweepHull(points).run();
}

}  // namespace seamweld
