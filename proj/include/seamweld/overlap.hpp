#pragma once

// Pairwise partition overlaps, per-point overlap degree, and the
// partition-adjacency graph.  Identity is the exact GlobalPointId, so
// overlap discovery is a sort/join over (id, partition) memberships --
// no spatial queries.  The adjacency graph must come out connected;
// anything else is unmergeable and is reported with its components.

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seamweld/errors.hpp"
#include "seamweld/point_model.hpp"

namespace seamweld {

struct PairMap {
    std::uint32_t i = 0;  // partition indices into the input list, i < j
    std::uint32_t j = 0;
    // (local index in partition i, local index in partition j), ordered by
    // the points' GlobalPointId.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> matches;
};

struct SharedPoint {
    GlobalPointId id;
    // (partition, local index) memberships, ordered by partition.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> members;
};

struct OverlapIndex {
    std::vector<PairMap> pair_maps;        // one per nonempty overlap, sorted by (i, j)
    std::vector<SharedPoint> shared_points;  // degree >= 2 points, sorted by id
    std::unordered_map<GlobalPointId, std::uint32_t, GlobalPointIdHash> degree;
    std::vector<std::vector<std::uint32_t>> partition_adjacency;  // sorted neighbor lists
    std::size_t partition_count = 0;
    std::size_t distinct_points = 0;
    std::size_t extra_memberships = 0;  // sum of |S_i| minus distinct_points

    const PairMap* find_pair(std::uint32_t i, std::uint32_t j) const {
        for (const auto& pm : pair_maps)
            if (pm.i == i && pm.j == j) return &pm;
        return nullptr;
    }
};

inline OverlapIndex compute_overlaps(const std::vector<PointCloudPartition>& partitions) {
    const std::size_t m = partitions.size();

    struct Membership {
        std::uint64_t id;
        std::uint32_t partition;
        std::uint32_t local;
    };
    std::size_t total = 0;
    for (const auto& part : partitions) {
        if (part.global_ids.size() != part.points.size())
            throw InvalidData("partition " + std::to_string(part.index) +
                              " has no global ids; run assign_global_ids first");
        total += part.size();
    }

    std::vector<Membership> memberships;
    memberships.reserve(total);
    for (std::uint32_t p = 0; p < m; ++p)
        for (std::uint32_t k = 0; k < partitions[p].global_ids.size(); ++k)
            memberships.push_back({partitions[p].global_ids[k].value, p, k});

    std::sort(memberships.begin(), memberships.end(),
              [](const Membership& a, const Membership& b) {
                  if (a.id != b.id) return a.id < b.id;
                  return a.partition < b.partition;
              });

    OverlapIndex index;
    index.partition_count = m;
    index.degree.reserve(total);
    index.partition_adjacency.assign(m, {});

    std::vector<std::vector<std::uint32_t>> adj_sets(m);
    std::unordered_map<std::uint64_t, std::size_t> pair_slot;  // (i << 32 | j) -> pair_maps idx

    for (std::size_t lo = 0; lo < memberships.size();) {
        std::size_t hi = lo;
        while (hi < memberships.size() && memberships[hi].id == memberships[lo].id) ++hi;
        const auto deg = static_cast<std::uint32_t>(hi - lo);
        index.degree.emplace(GlobalPointId{memberships[lo].id}, deg);
        ++index.distinct_points;

        if (deg >= 2) {
            SharedPoint sp;
            sp.id = GlobalPointId{memberships[lo].id};
            sp.members.reserve(deg);
            for (std::size_t k = lo; k < hi; ++k) {
                if (k > lo && memberships[k].partition == memberships[k - 1].partition) {
                    const auto& part = partitions[memberships[k].partition];
                    const Point& pt = part.points[memberships[k].local];
                    throw DuplicatePointInPartition(memberships[k].partition, pt.x, pt.y);
                }
                sp.members.emplace_back(memberships[k].partition, memberships[k].local);
            }
            for (std::size_t a = lo; a < hi; ++a)
                for (std::size_t b = a + 1; b < hi; ++b) {
                    const std::uint64_t key =
                        (std::uint64_t(memberships[a].partition) << 32) | memberships[b].partition;
                    auto [it, fresh] = pair_slot.emplace(key, index.pair_maps.size());
                    if (fresh) {
                        index.pair_maps.push_back(
                            {memberships[a].partition, memberships[b].partition, {}});
                        adj_sets[memberships[a].partition].push_back(memberships[b].partition);
                        adj_sets[memberships[b].partition].push_back(memberships[a].partition);
                    }
                    index.pair_maps[it->second].matches.emplace_back(memberships[a].local,
                                                                     memberships[b].local);
                }
            index.shared_points.push_back(std::move(sp));
        }
        lo = hi;
    }

    index.extra_memberships = total - index.distinct_points;

    std::sort(index.pair_maps.begin(), index.pair_maps.end(),
              [](const PairMap& a, const PairMap& b) {
                  if (a.i != b.i) return a.i < b.i;
                  return a.j < b.j;
              });

    for (std::uint32_t p = 0; p < m; ++p) {
        auto& neigh = adj_sets[p];
        std::sort(neigh.begin(), neigh.end());
        neigh.erase(std::unique(neigh.begin(), neigh.end()), neigh.end());
        index.partition_adjacency[p] = std::move(neigh);
    }

    // Connectivity of the partition graph is a hard precondition of the merge.
    if (m > 0) {
        std::vector<std::uint32_t> label(m, UINT32_MAX);
        std::uint32_t comp = 0;
        std::vector<std::uint32_t> stack;
        for (std::uint32_t s = 0; s < m; ++s) {
            if (label[s] != UINT32_MAX) continue;
            label[s] = comp;
            stack.push_back(s);
            while (!stack.empty()) {
                const std::uint32_t v = stack.back();
                stack.pop_back();
                for (std::uint32_t w : index.partition_adjacency[v])
                    if (label[w] == UINT32_MAX) {
                        label[w] = comp;
                        stack.push_back(w);
                    }
            }
            ++comp;
        }
        if (comp > 1) {
            std::vector<std::vector<std::size_t>> components(comp);
            for (std::uint32_t p = 0; p < m; ++p)
                components[label[p]].push_back(partitions[p].index);
            std::string what = "partition graph has " + std::to_string(comp) +
                               " connected components:";
            for (const auto& c : components) {
                what += " {";
                for (std::size_t k = 0; k < c.size(); ++k)
                    what += (k ? "," : "") + std::to_string(c[k]);
                what += "}";
            }
            throw DisconnectedPartitionGraph(std::move(what), std::move(components));
        }
    }
    return index;
}

inline std::uint32_t max_overlap_degree(const OverlapIndex& index) {
    std::uint32_t best = index.distinct_points > 0 ? 1u : 0u;
    for (const auto& sp : index.shared_points)
        best = std::max(best, static_cast<std::uint32_t>(sp.members.size()));
    return best;
}

}  // namespace seamweld
