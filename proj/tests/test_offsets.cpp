#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "seamweld/offsets.hpp"

using namespace seamweld;
using Catch::Approx;

namespace {

PointCloudPartition line_partition(std::size_t index, double x0, std::size_t n,
                                   double value) {
    PointCloudPartition p;
    p.index = index;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = x0 + double(k);
        p.points.push_back({x, std::fmod(x * 0.37, 2.0)});  // y from x: overlaps align
        p.values.push_back(value);
    }
    return p;
}

std::vector<PairMean> random_connected_pairs(std::size_t m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::vector<PairMean> pairs;
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (std::uint32_t v = 1; v < m; ++v) {
        const auto parent = static_cast<std::uint32_t>(rng() % v);
        pairs.push_back({parent, v, u(rng), 1 + rng() % 40});
        seen.insert({parent, v});
    }
    const std::size_t extra = rng() % (m + 1);
    for (std::size_t e = 0; e < extra; ++e) {
        auto a = static_cast<std::uint32_t>(rng() % m);
        auto b = static_cast<std::uint32_t>(rng() % m);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (!seen.insert({a, b}).second) continue;
        pairs.push_back({a, b, u(rng), 1 + rng() % 40});
    }
    return pairs;
}

}  // namespace

TEST_CASE("pairwise means over matched points") {
    std::vector<PointCloudPartition> parts;
    parts.push_back(line_partition(0, 0.0, 10, 0.0));
    parts.push_back(line_partition(1, 0.0, 10, 0.0));
    // Identical geometry: full overlap of 10 points.
    SECTION("identical data gives zero mean") {
        assign_global_ids(parts);
        const auto pairs = pairwise_means(parts, compute_overlaps(parts));
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].mean_diff == 0.0);
        CHECK(pairs[0].count == 10);
    }
    SECTION("constant shift shows up as the mean") {
        for (auto& v : parts[0].values) v += 5.0;
        assign_global_ids(parts);
        const auto pairs = pairwise_means(parts, compute_overlaps(parts));
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].mean_diff == Approx(5.0).margin(1e-12));
        CHECK(pairs[0].count == 10);
    }
    SECTION("arithmetic mean of varying differences") {
        // Differences 1, 2, 3 on a 3-point overlap.
        std::vector<PointCloudPartition> three;
        three.push_back(line_partition(0, 0.0, 3, 0.0));
        three.push_back(line_partition(1, 0.0, 3, 0.0));
        three[0].values = {1.0, 2.0, 3.0};
        assign_global_ids(three);
        const auto pairs = pairwise_means(three, compute_overlaps(three));
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].mean_diff == Approx(2.0).margin(1e-12));
    }
}

TEST_CASE("two partitions split the mean difference") {
    const std::vector<PairMean> pairs{{0, 1, 5.0, 10}};
    const OffsetSolution sol = solve_offsets(pairs, 2);
    CHECK(sol.offsets[0] == Approx(-2.5).margin(1e-12));
    CHECK(sol.offsets[1] == Approx(2.5).margin(1e-12));
    // Corrected pair mean: mean + o_i - o_j = 0.
    CHECK(pairs[0].mean_diff + sol.offsets[0] - sol.offsets[1] == Approx(0.0).margin(1e-12));
    CHECK(sol.residual_norm == Approx(0.0).margin(1e-12));
    CHECK(sol.normalization == "sum-zero");
}

TEST_CASE("chain of three partitions") {
    const std::vector<PairMean> pairs{{0, 1, 1.0, 4}, {1, 2, 1.0, 4}};
    const OffsetSolution sol = solve_offsets(pairs, 3);
    CHECK(sol.offsets[0] == Approx(-1.0).margin(1e-12));
    CHECK(sol.offsets[1] == Approx(0.0).margin(1e-12));
    CHECK(sol.offsets[2] == Approx(1.0).margin(1e-12));
}

TEST_CASE("zero differences give zero offsets") {
    const std::vector<PairMean> pairs{{0, 1, 0.0, 3}, {1, 2, 0.0, 3}, {0, 2, 0.0, 3}};
    const OffsetSolution sol = solve_offsets(pairs, 3);
    for (double o : sol.offsets) CHECK(o == Approx(0.0).margin(1e-14));
}

TEST_CASE("offsets always sum to zero") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t m = 2 + seed % 7;
        const auto pairs = random_connected_pairs(m, seed);
        const OffsetSolution sol = solve_offsets(pairs, m);
        double sum = 0.0;
        for (double o : sol.offsets) sum += o;
        CHECK(std::abs(sum) < 1e-12);
    }
}

TEST_CASE("least-squares optimality: gradient vanishes") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t m = 3 + seed % 5;
        const auto pairs = random_connected_pairs(m, 100 + seed);
        const OffsetSolution sol = solve_offsets(pairs, m);
        // A^T r per column, with r the equation residuals.
        std::vector<double> grad(m, 0.0);
        double scale = 0.0;
        for (const auto& p : pairs) {
            const double r = sol.offsets[p.j] - sol.offsets[p.i] - p.mean_diff;
            grad[p.i] -= r;
            grad[p.j] += r;
            scale = std::max(scale, std::abs(p.mean_diff));
        }
        // The gradient may only point along the gauge direction (constants).
        const double mean = std::accumulate(grad.begin(), grad.end(), 0.0) / double(m);
        for (double g : grad) CHECK(std::abs(g - mean) <= 1e-9 * std::max(1.0, scale));
    }
}

TEST_CASE("solver matches the dense QR pseudoinverse oracle") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t m = 2 + seed % 7;  // M <= 8
        const auto pairs = random_connected_pairs(m, 2000 + seed);
        const OffsetSolution sol = solve_offsets(pairs, m);
        const auto expect = oracle::offsets_by_qr(pairs, m);
        for (std::size_t p = 0; p < m; ++p)
            CHECK(sol.offsets[p] == Approx(expect[p]).margin(1e-10));
    }
}

TEST_CASE("count weighting matches the weighted oracle and changes the answer") {
    // Triangle with contradictory means and very different counts.
    const std::vector<PairMean> pairs{{0, 1, 1.0, 100}, {1, 2, 1.0, 100}, {0, 2, 0.0, 1}};
    const OffsetSolution plain = solve_offsets(pairs, 3, false);
    const OffsetSolution weighted = solve_offsets(pairs, 3, true);
    const auto expect = oracle::offsets_by_qr(pairs, 3, true);
    for (std::size_t p = 0; p < 3; ++p)
        CHECK(weighted.offsets[p] == Approx(expect[p]).margin(1e-10));
    CHECK(std::abs(weighted.offsets[0] - plain.offsets[0]) > 1e-3);
}

TEST_CASE("unweighted solution ignores overlap sizes") {
    std::vector<PairMean> pairs{{0, 1, 3.0, 10}, {1, 2, -1.0, 20}};
    const OffsetSolution a = solve_offsets(pairs, 3);
    for (auto& p : pairs) p.count *= 7;  // duplicate every pair's points
    const OffsetSolution b = solve_offsets(pairs, 3);
    for (std::size_t p = 0; p < 3; ++p)
        CHECK(a.offsets[p] == Approx(b.offsets[p]).margin(1e-14));
}

TEST_CASE("gauge invariance: shifting all data leaves offsets unchanged") {
    std::vector<PointCloudPartition> parts;
    parts.push_back(line_partition(0, 0.0, 8, 2.0));
    parts.push_back(line_partition(1, 4.0, 8, 7.0));
    assign_global_ids(parts);
    const auto index = compute_overlaps(parts);
    const auto sol1 = solve_offsets(pairwise_means(parts, index), 2);

    for (auto& part : parts)
        for (double& v : part.values) v += 123.456;
    const auto sol2 = solve_offsets(pairwise_means(parts, index), 2);
    for (std::size_t p = 0; p < 2; ++p)
        CHECK(sol1.offsets[p] == Approx(sol2.offsets[p]).margin(1e-12));
}

TEST_CASE("apply then negate restores the input") {
    std::vector<PointCloudPartition> parts;
    parts.push_back(line_partition(0, 0.0, 8, 2.0));
    parts.push_back(line_partition(1, 4.0, 8, 7.0));
    const auto original = parts;

    OffsetSolution sol;
    sol.offsets = {-2.5, 2.5};
    apply_offsets(parts, sol);
    CHECK(parts[0].values[0] == Approx(-0.5).margin(1e-15));

    for (double& o : sol.offsets) o = -o;
    apply_offsets(parts, sol);
    for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t k = 0; k < parts[p].values.size(); ++k)
            CHECK(parts[p].values[k] == Approx(original[p].values[k]).margin(1e-12));
}

TEST_CASE("exact recovery for pure constant artifacts") {
    // Three overlapping segments whose data differ from truth by constants.
    std::vector<PointCloudPartition> parts;
    for (std::size_t p = 0; p < 3; ++p) {
        PointCloudPartition part;
        part.index = p;
        for (std::size_t k = 0; k < 12; ++k) {
            const double x = double(p) * 8 + double(k);
            part.points.push_back({x, std::fmod(x * 0.37, 2.0)});
            part.values.push_back(0.1 * x);  // truth
        }
        parts.push_back(part);
    }
    const std::vector<double> injected{3.0, -1.0, 4.0};
    for (std::size_t p = 0; p < 3; ++p)
        for (double& v : parts[p].values) v += injected[p];

    assign_global_ids(parts);
    const auto index = compute_overlaps(parts);
    const auto sol = solve_offsets(pairwise_means(parts, index), 3);
    apply_offsets(parts, sol);

    // All overlaps agree exactly afterwards.
    for (const auto& pm : index.pair_maps)
        for (auto [a, b] : pm.matches)
            CHECK(parts[pm.i].values[a] == Approx(parts[pm.j].values[b]).margin(1e-9));
}

TEST_CASE("disconnected pair graph raises SingularSystem") {
    const std::vector<PairMean> pairs{{0, 1, 1.0, 2}};  // partition 2 floats free
    CHECK_THROWS_AS(solve_offsets(pairs, 3), SingularSystem);
}
