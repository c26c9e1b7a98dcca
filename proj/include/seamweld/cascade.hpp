#pragma once

// Full merge pipeline: global ids -> overlaps -> per-partition Delaunay
// Laplacians -> least-squares constant offsets -> a cascade of Dirichlet
// correction rounds for overlap degree P = max .. 2, descending -> final
// per-point average.
//
// Round P: every partition holding at least one point of degree >= P takes
// the consensus (cross-partition mean) at those points as Dirichlet boundary
// data, solves for the harmonic extension of (consensus - current), and adds
// it.  Consensus always reads the state other partitions published at the
// end of round P+1, so a partition may run round P as soon as its overlap
// neighbors finished round P+1 -- that is the whole synchronization
// contract, and it makes sequential, barrier, and relaxed execution produce
// bit-identical values.
//
// Workers write only their own partition's values and read others' only
// through published per-round snapshots of shared points.
//
// Internally partitions are reordered by content before any arithmetic, so
// the merged output is invariant under permutations of the input list.
//
// Round start/finish markers are emitted in sequential and barrier modes,
// where rounds are globally ordered; relaxed mode interleaves rounds by
// design and emits only per-partition solve events.

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seamweld/dirichlet.hpp"
#include "seamweld/errors.hpp"
#include "seamweld/graph.hpp"
#include "seamweld/offsets.hpp"
#include "seamweld/overlap.hpp"
#include "seamweld/point_model.hpp"

namespace seamweld {

enum class ExecutionMode { sequential, parallel_barrier, parallel_relaxed };

struct MergeConfig {
    double tolerance = 1e-8;         // relative residual for Dirichlet solves
    std::size_t max_iterations = 0;  // per solve; 0 = 10 * interior size
    bool weight_pairs_by_count = false;
    ExecutionMode mode = ExecutionMode::sequential;
    double max_edge_length = 0.0;    // drop longer Delaunay edges; 0 keeps all
    double id_quantum = 0.0;         // snap coordinates before id hashing; 0 off
    // Laplacian source, e.g. an on-disk cache; default builds from scratch.
    // Must be thread-safe for the parallel modes.
    std::function<GraphLaplacian(const PointCloudPartition&, double)> graph_provider;
};

enum class MergeStage {
    ids_assigned,
    overlaps_computed,
    graph_built,
    offsets_solved,
    round_started,
    dirichlet_solved,
    round_finished,
    merged,
};

inline const char* stage_name(MergeStage s) {
    switch (s) {
        case MergeStage::ids_assigned: return "ids_assigned";
        case MergeStage::overlaps_computed: return "overlaps_computed";
        case MergeStage::graph_built: return "graph_built";
        case MergeStage::offsets_solved: return "offsets_solved";
        case MergeStage::round_started: return "round_started";
        case MergeStage::dirichlet_solved: return "dirichlet_solved";
        case MergeStage::round_finished: return "round_finished";
        case MergeStage::merged: return "merged";
    }
    return "?";
}

struct MergeEvent {
    MergeStage stage{};
    int round = 0;      // overlap degree P for round/solve events
    int partition = -1; // canonical slot, -1 for global events
    std::size_t iterations = 0;
    double residual = 0.0;
    double max_principle_excess = 0.0;  // how far the correction escaped [min, max] of its boundary
    double millis = 0.0;
};

using EventSink = std::function<void(const MergeEvent&)>;

struct DegreeStats {
    std::uint32_t degree = 0;
    std::size_t count = 0;   // shared points of this degree
    double max_abs = 0.0;    // max over points of (max - min across partitions)
    double rms = 0.0;
};

struct RoundReport {
    std::uint32_t degree = 0;  // the round's P
    std::vector<DegreeStats> before;
    std::vector<DegreeStats> after;
};

struct PairResidual {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    double mean_diff = 0.0;  // post-merge mean of D_i - D_j on the overlap
    std::size_t count = 0;
};

struct SeamReport {
    std::uint32_t max_degree = 1;
    std::vector<double> offsets;       // canonical slot order
    double offset_residual_norm = 0.0;
    std::vector<RoundReport> rounds;   // descending degree
    std::vector<PairResidual> pair_post;
    double final_max_disagreement = 0.0;  // across all shared points
    double data_scale = 0.0;              // max |merged value|
    std::vector<std::size_t> input_order; // canonical slot -> original input position
};

struct MergeResult {
    MergedDataset merged;
    SeamReport report;
};

// Cross-partition mean of current values at every point with overlap degree
// >= P.  Members are averaged in ascending partition order.
inline std::unordered_map<GlobalPointId, double, GlobalPointIdHash> consensus_at_degree(
    const std::vector<PointCloudPartition>& partitions, const OverlapIndex& index,
    std::uint32_t degree) {
    if (degree < 2) throw InvalidConfig("consensus_at_degree: degree must be >= 2");
    std::unordered_map<GlobalPointId, double, GlobalPointIdHash> out;
    for (const SharedPoint& sp : index.shared_points) {
        if (sp.members.size() < degree) continue;
        double sum = 0.0;
        for (auto [p, local] : sp.members) sum += partitions[p].values[local];
        out.emplace(sp.id, sum / static_cast<double>(sp.members.size()));
    }
    return out;
}

// One cascade round applied in place: partitions holding a point of degree
// >= P harmonically extend (consensus - current) from those points and add
// the extension.  Partitions without such points are untouched.
inline void correction_round(std::vector<PointCloudPartition>& partitions,
                             const OverlapIndex& index, std::uint32_t degree,
                             const std::vector<GraphLaplacian>& graphs,
                             const MergeConfig& config = {}) {
    const auto consensus = consensus_at_degree(partitions, index, degree);

    // Boundary sets in shared_points order (ascending id), per partition.
    std::vector<std::vector<std::uint32_t>> locals(partitions.size());
    std::vector<std::vector<double>> diffs(partitions.size());
    std::vector<std::vector<double>> targets(partitions.size());
    for (const SharedPoint& sp : index.shared_points) {
        if (sp.members.size() < degree) continue;
        const double target = consensus.at(sp.id);
        for (auto [p, local] : sp.members) {
            locals[p].push_back(local);
            targets[p].push_back(target);
            diffs[p].push_back(target - partitions[p].values[local]);
        }
    }

    for (std::size_t p = 0; p < partitions.size(); ++p) {
        if (locals[p].empty()) continue;
        DirichletProblem problem;
        problem.laplacian = &graphs[p];
        problem.boundary_indices = locals[p];
        problem.boundary_values = std::move(diffs[p]);
        problem.tolerance = config.tolerance;
        problem.max_iterations = config.max_iterations;
        const HarmonicCorrection corr = solve_dirichlet(problem);
        auto& vals = partitions[p].values;
        for (std::size_t k = 0; k < vals.size(); ++k) vals[k] += corr.values[k];
        for (std::size_t k = 0; k < locals[p].size(); ++k)
            vals[locals[p][k]] = targets[p][k];
    }
}

namespace detail {

struct SharedRef {
    std::uint32_t partition;
    std::uint32_t pos;  // position in that partition's shared arrays
};

// Immutable cross-partition overlap wiring used by the merge engine.
struct SharedWiring {
    // Global shared points, ascending id.
    std::vector<std::uint32_t> degree;        // per global shared point
    std::vector<std::uint32_t> member_offset; // CSR offsets into members
    std::vector<SharedRef> members;           // ascending partition within a point
    // Per partition, ascending id.
    std::vector<std::vector<std::uint32_t>> shared_local;  // local point index
    std::vector<std::vector<std::uint32_t>> shared_gidx;   // global shared index
    std::vector<std::vector<std::uint32_t>> shared_degree;

    static SharedWiring build(const OverlapIndex& index, std::size_t m) {
        SharedWiring w;
        const std::size_t s = index.shared_points.size();
        w.degree.resize(s);
        w.member_offset.reserve(s + 1);
        w.member_offset.push_back(0);
        w.shared_local.resize(m);
        w.shared_gidx.resize(m);
        w.shared_degree.resize(m);
        for (std::size_t g = 0; g < s; ++g) {
            const SharedPoint& sp = index.shared_points[g];
            w.degree[g] = static_cast<std::uint32_t>(sp.members.size());
            for (auto [p, local] : sp.members) {
                w.members.push_back(
                    {p, static_cast<std::uint32_t>(w.shared_local[p].size())});
                w.shared_local[p].push_back(local);
                w.shared_gidx[p].push_back(static_cast<std::uint32_t>(g));
                w.shared_degree[p].push_back(w.degree[g]);
            }
            w.member_offset.push_back(static_cast<std::uint32_t>(w.members.size()));
        }
        return w;
    }
};

class EventBus {
public:
    explicit EventBus(EventSink sink) : sink_(std::move(sink)) {}
    void emit(const MergeEvent& e) {
        if (!sink_) return;
        std::lock_guard<std::mutex> lock(mu_);
        sink_(e);
    }

private:
    EventSink sink_;
    std::mutex mu_;
};

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

// Mutable per-run state for the cascade rounds.
struct CascadeState {
    std::vector<std::vector<double>> values;  // per partition, working copies
    std::vector<GraphLaplacian> graphs;
    SharedWiring wiring;
    // published[p][slot(P)] = partition p's shared-point values after round P;
    // slot(max_degree + 1) holds the post-offset state.
    std::vector<std::vector<std::vector<double>>> published;
    std::uint32_t max_degree = 1;

    std::size_t slot(std::uint32_t round) const { return round - 2; }
    std::size_t slot_count() const { return max_degree; }  // rounds 2..max+1

    void publish(std::size_t p, std::uint32_t round) {
        auto& snap = published[p][slot(round)];
        const auto& locals = wiring.shared_local[p];
        snap.resize(locals.size());
        const auto& vals = values[p];
        for (std::size_t k = 0; k < locals.size(); ++k) snap[k] = vals[locals[k]];
    }

    // One partition's round-P work.  Reads only snapshots published at round
    // P+1, writes only partition p.  Identical arithmetic in every mode.
    void run_round(std::size_t p, std::uint32_t round, const MergeConfig& config,
                   EventBus& bus) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto& degs = wiring.shared_degree[p];
        const auto& gidx = wiring.shared_gidx[p];
        const auto& locals = wiring.shared_local[p];
        const std::size_t read_slot = slot(round + 1);

        std::vector<std::uint32_t> boundary;
        std::vector<double> diffs;
        std::vector<double> targets;
        for (std::size_t k = 0; k < degs.size(); ++k) {
            if (degs[k] < round) continue;
            const std::uint32_t g = gidx[k];
            double sum = 0.0;
            for (std::uint32_t mk = wiring.member_offset[g]; mk < wiring.member_offset[g + 1];
                 ++mk) {
                const SharedRef ref = wiring.members[mk];
                sum += published[ref.partition][read_slot][ref.pos];
            }
            const double target = sum / static_cast<double>(wiring.degree[g]);
            boundary.push_back(locals[k]);
            targets.push_back(target);
            diffs.push_back(target - values[p][locals[k]]);
        }

        if (!boundary.empty()) {
            double bmin = diffs[0], bmax = diffs[0];
            for (double d : diffs) {
                bmin = std::min(bmin, d);
                bmax = std::max(bmax, d);
            }

            DirichletProblem problem;
            problem.laplacian = &graphs[p];
            problem.boundary_indices = boundary;
            problem.boundary_values = std::move(diffs);
            problem.tolerance = config.tolerance;
            problem.max_iterations = config.max_iterations;
            const HarmonicCorrection corr = solve_dirichlet(problem);

            double cmin = corr.values[0], cmax = corr.values[0];
            auto& vals = values[p];
            for (std::size_t k = 0; k < vals.size(); ++k) {
                cmin = std::min(cmin, corr.values[k]);
                cmax = std::max(cmax, corr.values[k]);
                vals[k] += corr.values[k];
            }
            // Pin boundary points to their consensus verbatim: value +
            // (target - value) can land one ulp off, and every containing
            // partition must end up bit-equal here.
            for (std::size_t k = 0; k < boundary.size(); ++k)
                vals[boundary[k]] = targets[k];
            const double excess = std::max({0.0, cmax - bmax, bmin - cmin});

            MergeEvent e;
            e.stage = MergeStage::dirichlet_solved;
            e.round = static_cast<int>(round);
            e.partition = static_cast<int>(p);
            e.iterations = corr.iterations_used;
            e.residual = corr.achieved_residual;
            e.max_principle_excess = excess;
            e.millis = elapsed_ms(t0);
            bus.emit(e);
        }
        publish(p, round);
    }
};

inline std::vector<DegreeStats> degree_stats(const CascadeState& st, std::size_t snap_slot) {
    const auto& w = st.wiring;
    const std::uint32_t maxdeg = st.max_degree;
    std::vector<DegreeStats> stats(maxdeg >= 2 ? maxdeg - 1 : 0);
    for (std::uint32_t d = 2; d <= maxdeg; ++d) stats[d - 2].degree = d;

    for (std::size_t g = 0; g < w.degree.size(); ++g) {
        double lo = 0.0, hi = 0.0;
        for (std::uint32_t mk = w.member_offset[g]; mk < w.member_offset[g + 1]; ++mk) {
            const SharedRef ref = w.members[mk];
            const double v = st.published[ref.partition][snap_slot][ref.pos];
            if (mk == w.member_offset[g]) {
                lo = hi = v;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        const double spread = hi - lo;
        auto& s = stats[w.degree[g] - 2];
        ++s.count;
        s.max_abs = std::max(s.max_abs, spread);
        s.rms += spread * spread;
    }
    for (auto& s : stats) s.rms = s.count ? std::sqrt(s.rms / double(s.count)) : 0.0;
    return stats;
}

// Content ordering: by point count, then coordinate/value bit patterns.
// Gives one canonical partition order for any permutation of the same input.
inline bool content_less(const PointCloudPartition& a, const PointCloudPartition& b) {
    if (a.points.size() != b.points.size()) return a.points.size() < b.points.size();
    for (std::size_t k = 0; k < a.points.size(); ++k) {
        const std::uint64_t ax = double_bits(a.points[k].x), bx = double_bits(b.points[k].x);
        if (ax != bx) return ax < bx;
        const std::uint64_t ay = double_bits(a.points[k].y), by = double_bits(b.points[k].y);
        if (ay != by) return ay < by;
    }
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        const std::uint64_t av = double_bits(a.values[k]), bv = double_bits(b.values[k]);
        if (av != bv) return av < bv;
    }
    return false;
}

}  // namespace detail

inline MergeResult merge(std::vector<PointCloudPartition> partitions,
                         const MergeConfig& config = {}, EventSink sink = {}) {
    if (partitions.empty()) throw InvalidData("merge: no partitions");
    if (!(config.tolerance > 0.0)) throw InvalidConfig("merge: tolerance must be positive");

    detail::EventBus bus(std::move(sink));
    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t m = partitions.size();

    // Canonical order; arithmetic below never depends on input order.
    std::vector<std::size_t> order(m);
    for (std::size_t k = 0; k < m; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detail::content_less(partitions[a], partitions[b]);
    });
    std::vector<PointCloudPartition> parts;
    parts.reserve(m);
    for (std::size_t slot = 0; slot < m; ++slot) parts.push_back(std::move(partitions[order[slot]]));

    assign_global_ids(parts, {config.id_quantum});
    bus.emit({MergeStage::ids_assigned, 0, -1, 0, 0.0, 0.0, detail::elapsed_ms(t_start)});

    SeamReport report;
    report.input_order = order;

    // Single partition: nothing to reconcile.
    if (m == 1) {
        MergedDataset merged;
        std::vector<std::size_t> by_id(parts[0].size());
        for (std::size_t k = 0; k < by_id.size(); ++k) by_id[k] = k;
        std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) {
            return parts[0].global_ids[a] < parts[0].global_ids[b];
        });
        for (std::size_t k : by_id) {
            merged.global_ids.push_back(parts[0].global_ids[k]);
            merged.points.push_back(parts[0].points[k]);
            merged.values.push_back(parts[0].values[k]);
            merged.provenance.push_back(1);
        }
        for (double v : merged.values)
            report.data_scale = std::max(report.data_scale, std::abs(v));
        bus.emit({MergeStage::merged, 0, -1, 0, 0.0, 0.0, detail::elapsed_ms(t_start)});
        return {std::move(merged), std::move(report)};
    }

    auto t0 = std::chrono::steady_clock::now();
    const OverlapIndex index = compute_overlaps(parts);
    bus.emit({MergeStage::overlaps_computed, 0, -1, 0, 0.0, 0.0, detail::elapsed_ms(t0)});

    detail::CascadeState state;
    state.graphs.resize(m);
    state.max_degree = max_overlap_degree(index);
    report.max_degree = state.max_degree;

    // Per-partition Delaunay + Laplacian; independent, so parallel modes
    // build them concurrently.
    {
        std::vector<std::exception_ptr> errors(m);
        auto build_one = [&](std::size_t p) {
            const auto tg = std::chrono::steady_clock::now();
            try {
                state.graphs[p] =
                    config.graph_provider
                        ? config.graph_provider(parts[p], config.max_edge_length)
                        : build_partition_laplacian(parts[p], config.max_edge_length);
            } catch (...) {
                errors[p] = std::current_exception();
                return;
            }
            MergeEvent e;
            e.stage = MergeStage::graph_built;
            e.partition = static_cast<int>(p);
            e.millis = detail::elapsed_ms(tg);
            bus.emit(e);
        };
        if (config.mode == ExecutionMode::sequential) {
            for (std::size_t p = 0; p < m; ++p) build_one(p);
        } else {
            std::vector<std::jthread> workers;
            workers.reserve(m);
            for (std::size_t p = 0; p < m; ++p) workers.emplace_back(build_one, p);
            workers.clear();  // join
        }
        for (std::size_t p = 0; p < m; ++p)
            if (errors[p]) std::rethrow_exception(errors[p]);
    }

    t0 = std::chrono::steady_clock::now();
    const auto pairs = pairwise_means(parts, index);
    const OffsetSolution offsets =
        solve_offsets(pairs, m, config.weight_pairs_by_count);
    apply_offsets(parts, offsets);
    report.offsets = offsets.offsets;
    report.offset_residual_norm = offsets.residual_norm;
    {
        MergeEvent e;
        e.stage = MergeStage::offsets_solved;
        e.residual = offsets.residual_norm;
        e.millis = detail::elapsed_ms(t0);
        bus.emit(e);
    }

    // Cascade rounds.
    state.wiring = detail::SharedWiring::build(index, m);
    state.values.resize(m);
    for (std::size_t p = 0; p < m; ++p) state.values[p] = parts[p].values;
    // All snapshot slots are pre-sized so a worker abandoned mid-cascade
    // (solver failure elsewhere) never reads an unsized vector.
    state.published.resize(m);
    for (std::size_t p = 0; p < m; ++p)
        state.published[p].assign(state.slot_count(),
                                  std::vector<double>(state.wiring.shared_local[p].size(), 0.0));
    for (std::size_t p = 0; p < m; ++p) state.publish(p, state.max_degree + 1);

    const std::uint32_t maxdeg = state.max_degree;

    if (config.mode == ExecutionMode::sequential) {
        for (std::uint32_t round = maxdeg; round >= 2; --round) {
            bus.emit({MergeStage::round_started, static_cast<int>(round), -1, 0, 0.0, 0.0, 0.0});
            const auto tr = std::chrono::steady_clock::now();
            for (std::size_t p = 0; p < m; ++p) state.run_round(p, round, config, bus);
            bus.emit({MergeStage::round_finished, static_cast<int>(round), -1, 0, 0.0, 0.0,
                      detail::elapsed_ms(tr)});
        }
    } else if (config.mode == ExecutionMode::parallel_barrier) {
        std::vector<std::exception_ptr> errors(m);
        std::atomic<std::uint32_t> current_round{maxdeg};
        auto on_phase_done = [&]() noexcept {
            const std::uint32_t r = current_round.load();
            bus.emit({MergeStage::round_finished, static_cast<int>(r), -1, 0, 0.0, 0.0, 0.0});
            if (r > 2)
                bus.emit({MergeStage::round_started, static_cast<int>(r - 1), -1, 0, 0.0, 0.0,
                          0.0});
            current_round.store(r - 1);
        };
        std::barrier sync(static_cast<std::ptrdiff_t>(m), on_phase_done);

        bus.emit({MergeStage::round_started, static_cast<int>(maxdeg), -1, 0, 0.0, 0.0, 0.0});
        auto worker = [&](std::size_t p) {
            for (std::uint32_t round = maxdeg; round >= 2; --round) {
                try {
                    state.run_round(p, round, config, bus);
                } catch (...) {
                    errors[p] = std::current_exception();
                    sync.arrive_and_drop();
                    return;
                }
                sync.arrive_and_wait();
            }
        };
        {
            std::vector<std::jthread> workers;
            workers.reserve(m);
            for (std::size_t p = 0; p < m; ++p) workers.emplace_back(worker, p);
        }
        for (std::size_t p = 0; p < m; ++p)
            if (errors[p]) std::rethrow_exception(errors[p]);
    } else {
        // Relaxed: partition p may run round P once every overlap neighbor
        // has published round P+1.
        std::vector<std::exception_ptr> errors(m);
        std::mutex mu;
        std::condition_variable cv;
        // done[p][slot] guarded by mu.
        std::vector<std::vector<char>> done(m, std::vector<char>(state.slot_count(), 0));
        for (std::size_t p = 0; p < m; ++p) done[p][state.slot(maxdeg + 1)] = 1;

        auto worker = [&](std::size_t p) {
            const auto& neighbors = index.partition_adjacency[p];
            try {
                for (std::uint32_t round = maxdeg; round >= 2; --round) {
                    {
                        std::unique_lock<std::mutex> lock(mu);
                        cv.wait(lock, [&] {
                            for (std::uint32_t q : neighbors)
                                if (!done[q][state.slot(round + 1)]) return false;
                            return true;
                        });
                    }
                    state.run_round(p, round, config, bus);
                    {
                        std::lock_guard<std::mutex> lock(mu);
                        done[p][state.slot(round)] = 1;
                    }
                    cv.notify_all();
                }
            } catch (...) {
                errors[p] = std::current_exception();
                std::lock_guard<std::mutex> lock(mu);
                for (auto& f : done[p]) f = 1;  // release waiters; result is discarded
                cv.notify_all();
            }
        };
        {
            std::vector<std::jthread> workers;
            workers.reserve(m);
            for (std::size_t p = 0; p < m; ++p) workers.emplace_back(worker, p);
        }
        for (std::size_t p = 0; p < m; ++p)
            if (errors[p]) std::rethrow_exception(errors[p]);
    }

    // Per-round seam statistics from the retained snapshots.
    for (std::uint32_t round = maxdeg; round >= 2; --round) {
        RoundReport rr;
        rr.degree = round;
        rr.before = detail::degree_stats(state, state.slot(round + 1));
        rr.after = detail::degree_stats(state, state.slot(round));
        report.rounds.push_back(std::move(rr));
    }

    // Final gather: union of points, mean across members at shared points.
    t0 = std::chrono::steady_clock::now();
    MergedDataset merged;
    merged.global_ids.reserve(index.distinct_points);

    struct Entry {
        GlobalPointId id;
        Point pt;
        double value;
        std::uint32_t degree;
    };
    std::vector<Entry> entries;
    entries.reserve(index.distinct_points);

    const auto& w = state.wiring;
    for (std::size_t g = 0; g < index.shared_points.size(); ++g) {
        const SharedPoint& sp = index.shared_points[g];
        double sum = 0.0;
        for (auto [p, local] : sp.members) sum += state.values[p][local];
        const auto [p0, local0] = sp.members.front();
        entries.push_back({sp.id, parts[p0].points[local0],
                           sum / static_cast<double>(sp.members.size()),
                           static_cast<std::uint32_t>(sp.members.size())});
    }
    for (std::size_t p = 0; p < m; ++p) {
        // Degree-1 points: everything not in this partition's shared list.
        std::vector<std::uint8_t> is_shared(parts[p].size(), 0);
        for (std::uint32_t local : w.shared_local[p]) is_shared[local] = 1;
        for (std::size_t k = 0; k < parts[p].size(); ++k)
            if (!is_shared[k])
                entries.push_back({parts[p].global_ids[k], parts[p].points[k],
                                   state.values[p][k], 1});
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.id < b.id; });

    for (const Entry& e : entries) {
        merged.global_ids.push_back(e.id);
        merged.points.push_back(e.pt);
        merged.values.push_back(e.value);
        merged.provenance.push_back(e.degree);
        report.data_scale = std::max(report.data_scale, std::abs(e.value));
    }

    // Post-merge pair residuals and the final disagreement ceiling.
    for (const PairMap& pm : index.pair_maps) {
        double sum = 0.0;
        for (auto [a, b] : pm.matches)
            sum += state.values[pm.i][a] - state.values[pm.j][b];
        report.pair_post.push_back(
            {pm.i, pm.j, sum / static_cast<double>(pm.matches.size()), pm.matches.size()});
    }
    for (std::size_t g = 0; g < index.shared_points.size(); ++g) {
        const SharedPoint& sp = index.shared_points[g];
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (auto [p, local] : sp.members) {
            const double v = state.values[p][local];
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        report.final_max_disagreement = std::max(report.final_max_disagreement, hi - lo);
    }

    bus.emit({MergeStage::merged, 0, -1, 0, 0.0, 0.0, detail::elapsed_ms(t_start)});
    return {std::move(merged), std::move(report)};
}

}  // namespace seamweld
