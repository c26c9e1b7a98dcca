#pragma once

// Discrete Dirichlet problem on a partition graph: prescribe correction
// values on a boundary vertex subset and extend them harmonically (zero
// Laplacian residual) to the interior.  The boundary is enforced by block
// elimination, never by penalties, so boundary values are reproduced
// bit-exactly and the discrete maximum principle survives up to solver
// tolerance.  The interior block L_II of a connected graph with nonempty
// boundary is symmetric positive definite; it is solved with conjugate
// gradients under a Jacobi preconditioner, starting from zero.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seamweld/errors.hpp"
#include "seamweld/graph.hpp"

namespace seamweld {

struct DirichletProblem {
    const GraphLaplacian* laplacian = nullptr;
    std::vector<std::uint32_t> boundary_indices;
    std::vector<double> boundary_values;   // parallel to boundary_indices
    double tolerance = 1e-8;               // relative residual bound
    std::size_t max_iterations = 0;        // 0 = 10 * interior size
};

struct HarmonicCorrection {
    std::vector<double> values;  // one per vertex; boundary entries verbatim
    std::size_t iterations_used = 0;
    double achieved_residual = 0.0;  // relative, on the interior system
};

namespace detail {

struct InteriorSystem {
    std::size_t n = 0;
    std::vector<std::uint64_t> row_ptr;
    std::vector<std::uint32_t> col;
    std::vector<double> val;
    std::vector<double> inv_diag;
    std::vector<double> rhs;

    void multiply(std::span<const double> x, std::span<double> y) const {
        for (std::size_t r = 0; r < n; ++r) {
            double acc = 0.0;
            for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
                acc += val[k] * x[col[k]];
            y[r] = acc;
        }
    }
};

// Split L by the boundary set: extract L_II and  rhs = -L_IB * b.
inline InteriorSystem extract_interior(const GraphLaplacian& L,
                                       const std::vector<std::uint8_t>& is_boundary,
                                       const std::vector<double>& full_boundary,
                                       const std::vector<std::uint32_t>& interior_of) {
    InteriorSystem sys;
    std::size_t count = 0;
    for (std::size_t r = 0; r < L.n; ++r)
        if (!is_boundary[r]) ++count;
    sys.n = count;
    sys.row_ptr.reserve(count + 1);
    sys.row_ptr.push_back(0);
    sys.col.reserve(L.nnz());
    sys.val.reserve(L.nnz());
    sys.inv_diag.resize(count);
    sys.rhs.assign(count, 0.0);

    std::size_t row = 0;
    for (std::size_t r = 0; r < L.n; ++r) {
        if (is_boundary[r]) continue;
        for (std::uint64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k) {
            const std::uint32_t c = L.col[k];
            if (is_boundary[c]) {
                sys.rhs[row] -= L.val[k] * full_boundary[c];
            } else {
                sys.col.push_back(interior_of[c]);
                sys.val.push_back(L.val[k]);
                if (c == r) sys.inv_diag[row] = 1.0 / L.val[k];
            }
        }
        sys.row_ptr.push_back(sys.col.size());
        ++row;
    }
    return sys;
}

inline double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

struct CgResult {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
};

// Jacobi-preconditioned CG from a zero initial guess.  The recurrence
// residual drives the loop; the true residual is re-checked before
// accepting convergence.
inline CgResult conjugate_gradient(const InteriorSystem& sys, std::vector<double>& x,
                                   double tolerance, std::size_t max_iterations) {
    const std::size_t n = sys.n;
    x.assign(n, 0.0);

    const double rhs_norm = norm2(sys.rhs);
    if (rhs_norm == 0.0) return {0, 0.0};
    const double target = tolerance * rhs_norm;

    std::vector<double> r = sys.rhs;
    std::vector<double> z(n), p(n), q(n);

    for (std::size_t i = 0; i < n; ++i) z[i] = sys.inv_diag[i] * r[i];
    p = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];

    std::size_t iterations = 0;
    double residual = norm2(r);

    while (true) {
        if (residual <= target) {
            // Recurrence says converged; accept only the true residual.
            sys.multiply(x, q);
            for (std::size_t i = 0; i < n; ++i) r[i] = sys.rhs[i] - q[i];
            residual = norm2(r);
            if (residual <= target) break;
            // Restart the direction from the true residual.
            for (std::size_t i = 0; i < n; ++i) z[i] = sys.inv_diag[i] * r[i];
            p = z;
            rz = 0.0;
            for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];
        }

        if (iterations >= max_iterations)
            throw ConvergenceFailure(residual / rhs_norm, tolerance, iterations);

        sys.multiply(p, q);
        double pq = 0.0;
        for (std::size_t i = 0; i < n; ++i) pq += p[i] * q[i];
        if (!(pq > 0.0))
            throw ConvergenceFailure(residual / rhs_norm, tolerance, iterations);

        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * q[i];
        ++iterations;

        residual = norm2(r);
        if (residual <= target) continue;  // verify at loop head

        for (std::size_t i = 0; i < n; ++i) z[i] = sys.inv_diag[i] * r[i];
        double rz_next = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz_next += r[i] * z[i];
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }

    return {iterations, residual / rhs_norm};
}

}  // namespace detail

inline HarmonicCorrection solve_dirichlet(const DirichletProblem& problem) {
    if (problem.laplacian == nullptr)
        throw InvalidData("solve_dirichlet: missing laplacian");
    const GraphLaplacian& L = *problem.laplacian;
    const std::size_t n = L.n;

    if (problem.boundary_indices.empty())
        throw EmptyBoundary("solve_dirichlet: boundary set is empty");
    if (problem.boundary_indices.size() != problem.boundary_values.size())
        throw InvalidData("solve_dirichlet: boundary index/value length mismatch");
    if (!(problem.tolerance > 0.0))
        throw InvalidConfig("solve_dirichlet: tolerance must be positive");

    std::vector<std::uint8_t> is_boundary(n, 0);
    std::vector<double> full_boundary(n, 0.0);
    for (std::size_t k = 0; k < problem.boundary_indices.size(); ++k) {
        const std::uint32_t idx = problem.boundary_indices[k];
        if (idx >= n)
            throw InvalidData("solve_dirichlet: boundary index " + std::to_string(idx) +
                              " out of range");
        if (is_boundary[idx])
            throw InvalidData("solve_dirichlet: duplicate boundary index " +
                              std::to_string(idx));
        if (!std::isfinite(problem.boundary_values[k]))
            throw InvalidData("solve_dirichlet: non-finite boundary value");
        is_boundary[idx] = 1;
        full_boundary[idx] = problem.boundary_values[k];
    }

    HarmonicCorrection out;
    out.values = full_boundary;

    std::vector<std::uint32_t> interior_of(n, 0);
    std::uint32_t interior_count = 0;
    for (std::size_t r = 0; r < n; ++r)
        if (!is_boundary[r]) interior_of[r] = interior_count++;

    // Every vertex prescribed: adopt the boundary verbatim, nothing to solve.
    if (interior_count == 0) return out;

    const auto sys = detail::extract_interior(L, is_boundary, full_boundary, interior_of);
    const std::size_t cap = problem.max_iterations > 0
                                ? problem.max_iterations
                                : 10 * static_cast<std::size_t>(interior_count);

    std::vector<double> x;
    const auto cg = detail::conjugate_gradient(sys, x, problem.tolerance, cap);

    std::size_t row = 0;
    for (std::size_t r = 0; r < n; ++r)
        if (!is_boundary[r]) out.values[r] = x[row++];
    out.iterations_used = cg.iterations;
    out.achieved_residual = cg.relative_residual;
    return out;
}

}  // namespace seamweld
