#pragma once

// Step one of the merge: one constant offset per partition, chosen by least
// squares so that the corrected pairwise overlap means vanish.  Each
// nonempty overlap (i, j) contributes one equation  o_j - o_i = mean(D_i -
// D_j on the overlap).  The incidence matrix annihilates constants, so the
// solution is pinned by the sum-zero gauge: offsets always sum to zero.
//
// The system is tiny (one column per partition), so it is solved through
// dense normal equations with a rank-one gauge term.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "seamweld/errors.hpp"
#include "seamweld/overlap.hpp"
#include "seamweld/point_model.hpp"

namespace seamweld {

struct PairMean {
    std::uint32_t i = 0;  // i < j
    std::uint32_t j = 0;
    double mean_diff = 0.0;  // mean over the overlap of D_i - D_j
    std::size_t count = 0;   // overlap point count
};

struct OffsetSolution {
    std::vector<double> offsets;          // one per partition, sums to zero
    double residual_norm = 0.0;           // || A o - b || over the pair equations
    std::string normalization = "sum-zero";
};

inline std::vector<PairMean> pairwise_means(const std::vector<PointCloudPartition>& partitions,
                                            const OverlapIndex& index) {
    std::vector<PairMean> out;
    out.reserve(index.pair_maps.size());
    for (const PairMap& pm : index.pair_maps) {
        const auto& vi = partitions[pm.i].values;
        const auto& vj = partitions[pm.j].values;
        double sum = 0.0;
        for (auto [a, b] : pm.matches) sum += vi[a] - vj[b];
        out.push_back({pm.i, pm.j, sum / static_cast<double>(pm.matches.size()),
                       pm.matches.size()});
    }
    return out;
}

namespace detail {

// In-place LU solve with partial pivoting; m is tiny here.
inline void dense_solve(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const std::size_t n = b.size();
    double scale = 0.0;
    for (const auto& row : a)
        for (double v : row) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) throw SingularSystem("offset system is all zero");

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        for (std::size_t r = k + 1; r < n; ++r)
            if (std::abs(a[r][k]) > std::abs(a[pivot][k])) pivot = r;
        if (std::abs(a[pivot][k]) <= 1e-12 * scale)
            throw SingularSystem(
                "offset system is singular; the pair graph is not connected");
        std::swap(a[k], a[pivot]);
        std::swap(b[k], b[pivot]);
        for (std::size_t r = k + 1; r < n; ++r) {
            const double f = a[r][k] / a[k][k];
            if (f == 0.0) continue;
            for (std::size_t c = k; c < n; ++c) a[r][c] -= f * a[k][c];
            b[r] -= f * b[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double acc = b[k];
        for (std::size_t c = k + 1; c < n; ++c) acc -= a[k][c] * b[c];
        b[k] = acc / a[k][k];
    }
}

}  // namespace detail

// Least-squares constant offsets with the sum-zero gauge.  With
// weight_by_count, pair equations are scaled by sqrt(count); default leaves
// every pair at unit weight, one row per overlap regardless of its size.
inline OffsetSolution solve_offsets(const std::vector<PairMean>& pairs, std::size_t m,
                                    bool weight_by_count = false) {
    if (m == 0) throw InvalidData("solve_offsets: no partitions");

    std::vector<std::vector<double>> normal(m, std::vector<double>(m, 0.0));
    std::vector<double> rhs(m, 0.0);

    double trace = 0.0;
    for (const PairMean& p : pairs) {
        if (p.i >= m || p.j >= m || p.i >= p.j)
            throw InvalidData("solve_offsets: bad pair indices");
        const double w = weight_by_count ? static_cast<double>(p.count) : 1.0;
        normal[p.i][p.i] += w;
        normal[p.j][p.j] += w;
        normal[p.i][p.j] -= w;
        normal[p.j][p.i] -= w;
        rhs[p.i] -= w * p.mean_diff;
        rhs[p.j] += w * p.mean_diff;
        trace += 2 * w;
    }

    // Rank-one gauge term: (A^T A + g J / m) o = A^T b has the sum-zero
    // least-squares solution as its unique root when the pair graph is
    // connected, since A^T b is orthogonal to constants.
    const double gauge = std::max(1.0, trace / static_cast<double>(m));
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c)
            normal[r][c] += gauge / static_cast<double>(m);

    detail::dense_solve(normal, rhs);

    // Remove the residual gauge drift so the invariant holds exactly.
    double mean = 0.0;
    for (double v : rhs) mean += v;
    mean /= static_cast<double>(m);
    for (double& v : rhs) v -= mean;

    OffsetSolution sol;
    sol.offsets = std::move(rhs);
    double rss = 0.0;
    for (const PairMean& p : pairs) {
        const double w = weight_by_count ? static_cast<double>(p.count) : 1.0;
        const double r = sol.offsets[p.j] - sol.offsets[p.i] - p.mean_diff;
        rss += w * r * r;
    }
    sol.residual_norm = std::sqrt(rss);
    return sol;
}

// D_i <- D_i + o_i.  Values only; geometry and ids are untouched.
inline void apply_offsets(std::vector<PointCloudPartition>& partitions,
                          const OffsetSolution& solution) {
    if (solution.offsets.size() != partitions.size())
        throw InvalidData("apply_offsets: offset count != partition count");
    for (std::size_t p = 0; p < partitions.size(); ++p) {
        const double o = solution.offsets[p];
        for (double& v : partitions[p].values) v += o;
    }
}

}  // namespace seamweld
