#pragma once

#include "tripsim/similarity.hpp"
#include "tripsim/trip.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace tripsim {

struct DagEdge {
    std::size_t from = 0;
    std::size_t to = 0;
    double weight = 0.0;
};

/// One node per trip; an edge a -> b means one car can serve b right after a.
struct TripDag {
    std::size_t n = 0;
    std::vector<DagEdge> edges;

    bool is_acyclic() const;
};

enum class EdgeWeight {
    /// psim between a's destination and b's origin (absolute time).
    endpoints,
    /// wgm_sim between the OD representations of a and b (absolute time).
    whole_trip,
};

struct DagOptions {
    double dist_threshold = 1800.0; // meters
    double time_threshold = 900.0;  // seconds
    WgmWeights weights{0.6, 0.4};
    EdgeWeight edge_weight = EdgeWeight::endpoints;
};

/// Edge a -> b iff b starts strictly after a ends, within time_threshold of
/// that end, and b's origin lies within dist_threshold of a's destination.
TripDag build_trip_dag(std::span<const Trip> trips, const ScaleContext& ctx, const DagOptions& opts);

struct BipartiteEdge {
    std::size_t left = 0;
    std::size_t right = 0;
    double weight = 0.0;
};

struct BipartiteGraph {
    std::size_t n_left = 0;
    std::size_t n_right = 0;
    std::vector<BipartiteEdge> edges;
};

/// Split graph: left copy i, right copy j', edge (i, j') per DAG edge i -> j.
BipartiteGraph dag_to_bipartite(const TripDag& dag);

struct Matching {
    std::vector<std::pair<std::size_t, std::size_t>> pairs; // (left, right), sorted by left
    double weight = 0.0;                                    // original, unshifted

    std::size_t cardinality() const noexcept { return pairs.size(); }
};

/// Maximum-weight assignment (Hungarian, O(n^3)) on weights shifted by N*T,
/// N = max(n_left, n_right), T = max edge weight. The result has maximum
/// cardinality, and maximum original weight among such matchings.
/// Edge weights must be nonnegative.
Matching max_card_max_weight_matching(const BipartiteGraph& graph);

/// Maximum-weight assignment on a dense n_rows x n_cols benefit matrix.
/// Returns the column chosen for each row.
std::vector<std::size_t> hungarian_max(const std::vector<std::vector<double>>& benefit);

struct ChainSchedule {
    std::vector<std::vector<std::size_t>> chains; // trip indices in service order
    std::size_t n_cars = 0;
    std::size_t cardinality = 0;
    std::size_t singleton_count = 0;

    /// Mean length over chains with at least two trips; 0 when there are none.
    double mean_multi_chain_length() const;
    double mean_chain_length() const;
};

/// Follows matched successors from every trip whose right copy is unmatched.
ChainSchedule extract_chains(const TripDag& dag, const Matching& matching);

struct ChainStats {
    std::size_t length = 0;
    double travel_km = 0.0;
    double pickup_km = 0.0;
    double pickup_s = 0.0;
};

std::vector<ChainStats> chain_stats(const ChainSchedule& schedule, std::span<const Trip> trips);

/// Counts of chains per length, index = length.
std::vector<std::size_t> chain_length_histogram(const ChainSchedule& schedule);

} // namespace tripsim
