#pragma once

// Per-partition neighborhood graphs and their Laplacians.  Edges come from a
// Delaunay triangulation of the partition's points; the Laplacian is the
// unweighted combinatorial one (diagonal = vertex degree, off-diagonal = -1
// per edge), stored CSR.  Assembly is deterministic: the same point list
// always yields a bit-identical matrix, which is what makes on-disk caching
// and reuse across merge runs sound.

#include <algorithm>
#include <cstdint>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seamweld/delaunay.hpp"
#include "seamweld/errors.hpp"
#include "seamweld/point_model.hpp"

namespace seamweld {

struct EdgeList {
    // Unordered pairs (a, b) with a < b, sorted, no duplicates or self-loops.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

    std::size_t size() const { return edges.size(); }
};

// Sparse symmetric n x n Laplacian in CSR form.  Row sums are exactly zero;
// PSD with the constant vector spanning the null space on a connected graph.
struct GraphLaplacian {
    std::size_t n = 0;
    std::vector<std::uint64_t> row_ptr;   // n + 1
    std::vector<std::uint32_t> col;       // nnz
    std::vector<double> val;              // nnz
    std::vector<std::uint32_t> degree;    // per-vertex edge count

    std::size_t nnz() const { return col.size(); }

    // y = L x
    void multiply(std::span<const double> x, std::span<double> y) const {
        for (std::size_t r = 0; r < n; ++r) {
            double acc = 0.0;
            for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
                acc += val[k] * x[col[k]];
            y[r] = acc;
        }
    }
};

namespace detail {

inline std::vector<std::uint32_t> component_labels(
    std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
    std::size_t& component_count) {
    std::vector<std::vector<std::uint32_t>> adj(n);
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<std::uint32_t> label(n, UINT32_MAX);
    std::uint32_t next = 0;
    std::vector<std::uint32_t> stack;
    for (std::size_t s = 0; s < n; ++s) {
        if (label[s] != UINT32_MAX) continue;
        stack.push_back(static_cast<std::uint32_t>(s));
        label[s] = next;
        while (!stack.empty()) {
            std::uint32_t v = stack.back();
            stack.pop_back();
            for (std::uint32_t w : adj[v])
                if (label[w] == UINT32_MAX) {
                    label[w] = next;
                    stack.push_back(w);
                }
        }
        ++next;
    }
    component_count = next;
    return label;
}

}  // namespace detail

inline bool is_connected(std::size_t n, const EdgeList& edges) {
    if (n == 0) return true;
    std::size_t count = 0;
    detail::component_labels(n, edges.edges, count);
    return count == 1;
}

// Delaunay edge set of a partition's points.  Throws DegenerateGeometry for
// fewer than 3 points or an all-collinear configuration.
inline EdgeList delaunay_edges(std::span<const Point> points) {
    const Triangulation tri = triangulate(points);

    EdgeList out;
    out.edges.reserve(tri.triangles.size());
    for (std::size_t t = 0; t < tri.triangles.size(); t += 3) {
        const auto a = static_cast<std::uint32_t>(tri.triangles[t]);
        const auto b = static_cast<std::uint32_t>(tri.triangles[t + 1]);
        const auto c = static_cast<std::uint32_t>(tri.triangles[t + 2]);
        out.edges.emplace_back(std::min(a, b), std::max(a, b));
        out.edges.emplace_back(std::min(b, c), std::max(b, c));
        out.edges.emplace_back(std::min(a, c), std::max(a, c));
    }
    std::sort(out.edges.begin(), out.edges.end());
    out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
    return out;
}

// Drop edges longer than max_length (0 disables).  Meant for partitions with
// large data holes, where Delaunay slivers bridge the gap.  The caller must
// re-verify connectivity afterwards; build_laplacian does so.
inline EdgeList filter_edges_by_length(const EdgeList& edges,
                                       std::span<const Point> points,
                                       double max_length) {
    if (max_length <= 0.0) return edges;
    const double limit = max_length * max_length;
    EdgeList out;
    out.edges.reserve(edges.size());
    for (auto [a, b] : edges.edges) {
        const double dx = points[a].x - points[b].x;
        const double dy = points[a].y - points[b].y;
        if (dx * dx + dy * dy <= limit) out.edges.emplace_back(a, b);
    }
    return out;
}

inline GraphLaplacian build_laplacian(std::size_t n, const EdgeList& edges) {
    GraphLaplacian L;
    L.n = n;
    L.degree.assign(n, 0);

    for (auto [a, b] : edges.edges) {
        if (a >= n || b >= n)
            throw InvalidData("edge references vertex beyond n=" + std::to_string(n));
        if (a == b)
            throw InvalidData("self-loop at vertex " + std::to_string(a));
        ++L.degree[a];
        ++L.degree[b];
    }

    std::size_t components = 0;
    const auto labels = detail::component_labels(n, edges.edges, components);
    if (components != 1) {
        std::vector<std::size_t> sizes(components, 0);
        for (auto l : labels) ++sizes[l];
        throw DisconnectedGraph("partition graph has " + std::to_string(components) +
                                    " connected components",
                                std::move(sizes));
    }

    // CSR with sorted columns per row: diagonal + one -1 per neighbor.
    L.row_ptr.assign(n + 1, 0);
    for (std::size_t r = 0; r < n; ++r)
        L.row_ptr[r + 1] = L.row_ptr[r] + L.degree[r] + 1;

    const std::size_t nnz = L.row_ptr[n];
    L.col.resize(nnz);
    L.val.resize(nnz);

    std::vector<std::uint64_t> cursor(L.row_ptr.begin(), L.row_ptr.end() - 1);
    for (std::size_t r = 0; r < n; ++r) {
        L.col[cursor[r]] = static_cast<std::uint32_t>(r);
        L.val[cursor[r]] = static_cast<double>(L.degree[r]);
        ++cursor[r];
    }
    for (auto [a, b] : edges.edges) {
        L.col[cursor[a]] = b;
        L.val[cursor[a]] = -1.0;
        ++cursor[a];
        L.col[cursor[b]] = a;
        L.val[cursor[b]] = -1.0;
        ++cursor[b];
    }
    // Columns arrive as (diagonal, then edge order); sort each row jointly.
    std::vector<std::pair<std::uint32_t, double>> row;
    for (std::size_t r = 0; r < n; ++r) {
        row.clear();
        for (std::uint64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k)
            row.emplace_back(L.col[k], L.val[k]);
        std::sort(row.begin(), row.end());
        std::uint64_t k = L.row_ptr[r];
        for (const auto& [c, v] : row) {
            L.col[k] = c;
            L.val[k] = v;
            ++k;
        }
    }
    return L;
}

// Convenience: Delaunay graph + Laplacian for one partition.
inline GraphLaplacian build_partition_laplacian(const PointCloudPartition& part,
                                                double max_edge_length = 0.0) {
    EdgeList edges = delaunay_edges(part.points);
    if (max_edge_length > 0.0)
        edges = filter_edges_by_length(edges, part.points, max_edge_length);
    return build_laplacian(part.points.size(), edges);
}

// Content hash of a partition's coordinates; the on-disk Laplacian cache key.
inline std::uint64_t coordinate_hash(std::span<const Point> points) {
    std::uint64_t h = 0x5357'4c44ULL;  // "SWLD"
    for (const Point& p : points) {
        h = detail::splitmix64(h ^ detail::double_bits(p.x));
        h = detail::splitmix64(h ^ detail::double_bits(p.y));
    }
    return h;
}

}  // namespace seamweld
