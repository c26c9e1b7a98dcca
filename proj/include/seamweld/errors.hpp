#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace seamweld {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite coordinate or data value, empty partition, malformed sizes.
class InvalidData : public Error {
public:
    using Error::Error;
};

// The same (x, y) pair appears twice within a single partition.
class DuplicatePointInPartition : public Error {
public:
    DuplicatePointInPartition(std::size_t partition, double x, double y)
        : Error("duplicate point (" + std::to_string(x) + ", " + std::to_string(y) +
                ") in partition " + std::to_string(partition)),
          partition(partition), x(x), y(y) {}
    std::size_t partition;
    double x, y;
};

// Two distinct coordinate pairs hashed to the same 64-bit id.
class GlobalIdCollision : public Error {
public:
    using Error::Error;
};

// Fewer than 3 points, or all points collinear: no triangulation exists.
class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

// A partition's point graph fell apart (e.g. after edge filtering).
class DisconnectedGraph : public Error {
public:
    DisconnectedGraph(std::string what, std::vector<std::size_t> component_sizes)
        : Error(std::move(what)), component_sizes(std::move(component_sizes)) {}
    std::vector<std::size_t> component_sizes;
};

// The partition-adjacency graph has more than one connected component,
// so no consistent merge exists.  Carries one partition-index list per
// component for diagnostics.
class DisconnectedPartitionGraph : public Error {
public:
    DisconnectedPartitionGraph(std::string what,
                               std::vector<std::vector<std::size_t>> components)
        : Error(std::move(what)), components(std::move(components)) {}
    std::vector<std::vector<std::size_t>> components;
};

// Least-squares system singular; only possible when the pair graph
// connectivity precondition was bypassed.
class SingularSystem : public Error {
public:
    using Error::Error;
};

class EmptyBoundary : public Error {
public:
    using Error::Error;
};

// Iterative solve did not reach the requested residual.  Never swallowed:
// callers see the achieved residual and the iteration count.
class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(double achieved, double requested, std::size_t iterations)
        : Error("solver did not converge: residual " + std::to_string(achieved) +
                " after " + std::to_string(iterations) +
                " iterations (requested " + std::to_string(requested) + ")"),
          achieved_residual(achieved), requested_tolerance(requested),
          iterations(iterations) {}
    double achieved_residual;
    double requested_tolerance;
    std::size_t iterations;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Point-id sets of two datasets differ where they were required to match.
class IdMismatch : public Error {
public:
    using Error::Error;
};

}  // namespace seamweld
