#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "seamweld/dirichlet.hpp"
#include "seamweld/graph.hpp"

using namespace seamweld;
using Catch::Approx;

namespace {

DirichletProblem make_problem(const GraphLaplacian& L, std::vector<std::uint32_t> idx,
                              std::vector<double> vals, double tol = 1e-10) {
    DirichletProblem p;
    p.laplacian = &L;
    p.boundary_indices = std::move(idx);
    p.boundary_values = std::move(vals);
    p.tolerance = tol;
    return p;
}

}  // namespace

TEST_CASE("constant boundary data extends as the constant") {
    const EdgeList edges = oracle::random_connected_graph(30, 40, 9);
    const GraphLaplacian L = build_laplacian(30, edges);
    const auto sol = solve_dirichlet(make_problem(L, {0, 7, 13}, {4.25, 4.25, 4.25}));
    for (double v : sol.values) CHECK(v == Approx(4.25).margin(1e-8));
}

TEST_CASE("path midpoint interpolates") {
    EdgeList edges;
    edges.edges = {{0, 1}, {1, 2}};
    const GraphLaplacian L = build_laplacian(3, edges);
    const auto sol = solve_dirichlet(make_problem(L, {0, 2}, {0.0, 1.0}));
    CHECK(sol.values[0] == 0.0);
    CHECK(sol.values[2] == 1.0);
    CHECK(sol.values[1] == Approx(0.5).margin(1e-12));
}

TEST_CASE("star center takes the mean of its leaves") {
    const std::size_t leaves = 6;
    EdgeList edges;
    std::vector<std::uint32_t> bidx;
    std::vector<double> bval;
    for (std::uint32_t k = 1; k <= leaves; ++k) {
        edges.edges.emplace_back(0, k);
        bidx.push_back(k);
        bval.push_back(double(k) * 1.5 - 4.0);
    }
    const GraphLaplacian L = build_laplacian(leaves + 1, edges);
    const auto sol = solve_dirichlet(make_problem(L, bidx, bval));
    const double mean = std::accumulate(bval.begin(), bval.end(), 0.0) / double(leaves);
    CHECK(sol.values[0] == Approx(mean).margin(1e-12));
}

TEST_CASE("matches the dense oracle on random graphs") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const std::size_t n = 8 + seed % 25;
        const EdgeList edges = oracle::random_connected_graph(n, n / 2, 300 + seed);
        const GraphLaplacian L = build_laplacian(n, edges);

        const std::size_t nb = 1 + rng() % (n - 1);
        std::vector<std::uint32_t> all(n);
        std::iota(all.begin(), all.end(), 0u);
        std::shuffle(all.begin(), all.end(), rng);
        std::vector<std::uint32_t> bidx(all.begin(), all.begin() + nb);
        std::vector<double> bval(nb);
        for (auto& v : bval) v = u(rng);

        const auto sol = solve_dirichlet(make_problem(L, bidx, bval));
        const auto expect = oracle::dirichlet_by_lu(L, bidx, bval);
        for (std::size_t k = 0; k < n; ++k)
            CHECK(sol.values[k] == Approx(expect[k]).margin(1e-8));
    }
}

TEST_CASE("boundary values are reproduced bit-exactly") {
    const EdgeList edges = oracle::random_connected_graph(40, 60, 5);
    const GraphLaplacian L = build_laplacian(40, edges);
    const std::vector<std::uint32_t> bidx{3, 11, 29};
    const std::vector<double> bval{0.1 + 1e-17, -3.75, 2.0 / 3.0};
    const auto sol = solve_dirichlet(make_problem(L, bidx, bval));
    for (std::size_t k = 0; k < bidx.size(); ++k) CHECK(sol.values[bidx[k]] == bval[k]);
}

TEST_CASE("interior residual honors the requested tolerance") {
    const EdgeList edges = oracle::random_connected_graph(200, 300, 21);
    const GraphLaplacian L = build_laplacian(200, edges);
    std::vector<std::uint32_t> bidx{0, 50, 100, 150};
    std::vector<double> bval{1.0, -2.0, 3.0, 0.5};
    const auto sol = solve_dirichlet(make_problem(L, bidx, bval, 1e-12));
    CHECK(sol.achieved_residual <= 1e-12);
    CHECK(sol.iterations_used > 0);

    // Independent residual check of L_II x = -L_IB b.
    std::vector<double> y(L.n, 0.0);
    L.multiply(sol.values, y);
    std::vector<char> is_b(L.n, 0);
    for (auto b : bidx) is_b[b] = 1;
    double rnorm = 0.0;
    for (std::size_t k = 0; k < L.n; ++k)
        if (!is_b[k]) rnorm += y[k] * y[k];
    CHECK(std::sqrt(rnorm) <= 1e-8);
}

TEST_CASE("linearity of the harmonic extension") {
    const EdgeList edges = oracle::random_connected_graph(25, 30, 8);
    const GraphLaplacian L = build_laplacian(25, edges);
    const std::vector<std::uint32_t> bidx{1, 5, 9, 20};
    const std::vector<double> b1{1.0, -1.0, 2.0, 0.0};
    const std::vector<double> b2{0.5, 3.0, -2.0, 1.0};
    const double alpha = 1.75, beta = -0.6;

    std::vector<double> combined(4);
    for (std::size_t k = 0; k < 4; ++k) combined[k] = alpha * b1[k] + beta * b2[k];

    const auto s1 = solve_dirichlet(make_problem(L, bidx, b1, 1e-12));
    const auto s2 = solve_dirichlet(make_problem(L, bidx, b2, 1e-12));
    const auto sc = solve_dirichlet(make_problem(L, bidx, combined, 1e-12));
    for (std::size_t k = 0; k < L.n; ++k)
        CHECK(sc.values[k] == Approx(alpha * s1.values[k] + beta * s2.values[k]).margin(1e-8));
}

TEST_CASE("discrete maximum principle") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(-7.0, 7.0);
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const std::size_t n = 10 + seed;
        const EdgeList edges = oracle::random_connected_graph(n, n, 900 + seed);
        const GraphLaplacian L = build_laplacian(n, edges);
        const std::size_t nb = 2 + rng() % (n / 2);
        std::vector<std::uint32_t> all(n);
        std::iota(all.begin(), all.end(), 0u);
        std::shuffle(all.begin(), all.end(), rng);
        std::vector<std::uint32_t> bidx(all.begin(), all.begin() + nb);
        std::vector<double> bval(nb);
        for (auto& v : bval) v = u(rng);

        const auto sol = solve_dirichlet(make_problem(L, bidx, bval));
        const double lo = *std::min_element(bval.begin(), bval.end());
        const double hi = *std::max_element(bval.begin(), bval.end());
        for (double v : sol.values) {
            CHECK(v >= lo - 1e-8);
            CHECK(v <= hi + 1e-8);
        }
    }
}

TEST_CASE("all-boundary problem adopts the values without solving") {
    EdgeList edges;
    edges.edges = {{0, 1}, {1, 2}, {0, 2}};
    const GraphLaplacian L = build_laplacian(3, edges);
    const auto sol = solve_dirichlet(make_problem(L, {0, 1, 2}, {5.0, 6.0, 7.0}));
    CHECK(sol.iterations_used == 0);
    CHECK(sol.achieved_residual == 0.0);
    CHECK(sol.values == std::vector<double>{5.0, 6.0, 7.0});
}

TEST_CASE("empty boundary is an error") {
    EdgeList edges;
    edges.edges = {{0, 1}, {1, 2}};
    const GraphLaplacian L = build_laplacian(3, edges);
    CHECK_THROWS_AS(solve_dirichlet(make_problem(L, {}, {})), EmptyBoundary);
}

TEST_CASE("invalid boundary specs are rejected") {
    EdgeList edges;
    edges.edges = {{0, 1}, {1, 2}};
    const GraphLaplacian L = build_laplacian(3, edges);
    CHECK_THROWS_AS(solve_dirichlet(make_problem(L, {9}, {1.0})), InvalidData);
    CHECK_THROWS_AS(solve_dirichlet(make_problem(L, {0, 0}, {1.0, 2.0})), InvalidData);
    CHECK_THROWS_AS(
        solve_dirichlet(make_problem(L, {0}, {std::numeric_limits<double>::quiet_NaN()})),
        InvalidData);
}

TEST_CASE("iteration cap failure reports the achieved residual") {
    // A long chain needs roughly its diameter in CG iterations.
    const std::size_t n = 60;
    EdgeList edges;
    for (std::uint32_t k = 0; k + 1 < n; ++k) edges.edges.emplace_back(k, k + 1);
    const GraphLaplacian L = build_laplacian(n, edges);
    DirichletProblem p = make_problem(L, {0, 59}, {0.0, 1.0}, 1e-12);
    p.max_iterations = 2;
    try {
        solve_dirichlet(p);
        FAIL("expected ConvergenceFailure");
    } catch (const ConvergenceFailure& e) {
        CHECK(e.iterations == 2);
        CHECK(e.achieved_residual > 1e-12);
        CHECK(e.requested_tolerance == 1e-12);
    }
}
