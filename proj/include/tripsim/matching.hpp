#pragma once

#include "tripsim/similarity.hpp"
#include "tripsim/trip.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tripsim {

/// car: the rider catches a ride nested inside its own time window.
/// carpool: the ride's driver detours to carry the rider and still arrives on time.
enum class MatchMode { car, carpool };

MatchMode parse_match_mode(std::string_view name);
std::string_view to_string(MatchMode mode) noexcept;

struct MatchScenario {
    MatchMode mode = MatchMode::car;
    double dist_threshold = 1800.0; // meters
    double time_threshold = 900.0;  // seconds
    WgmWeights weights{0.6, 0.4};
    Metric metric = Metric::wgm;
    /// Weights used by Metric::wgm_time.
    WgmWeights time_weights{0.1, 0.9};
    /// LCSS epsilons; derived from the thresholds when unset.
    std::optional<MetricParams> metric_params;

    void validate() const;
};

/// A trip prepared for matching: raw geometry for thresholds and travel
/// accounting, scaled representation for scoring.
struct MatchTrip {
    Trip trip;
    ScaledTrip repr;
    double length_m = 0.0;
};

std::vector<MatchTrip> prepare_trips(std::span<const Trip> trips, const ScaleContext& ctx,
                                     Representation repr, std::size_t k = 50);

/// Indices of rides passing the endpoint distance/time filters and the
/// scenario's temporal-order condition, in input order.
std::vector<std::size_t> feasible_candidates(const Trip& request, std::span<const MatchTrip> rides,
                                             const MatchScenario& scenario);

/// Score of `ride` for `request` under the scenario's metric. For the WGM
/// metrics in mode car this is car_score(request, ride); in mode carpool,
/// cp_score(request, ride).
double match_score(const MatchTrip& request, const MatchTrip& ride, Metric metric,
                   const MatchScenario& scenario, const MetricParams& params);

struct MatchRow {
    std::string request_id;
    std::optional<std::string> ride_id;
    std::size_t candidates = 0;
    double request_km = 0.0;
    double ride_km = 0.0;
    double oo_dist_m = 0.0;
    double dd_dist_m = 0.0;
    double oo_time_s = 0.0;
    double dd_time_s = 0.0;
    double score = 0.0;
};

/// Travel totals sufficient for the savings arithmetic.
struct TravelTotals {
    double req_km = 0.0;
    double match_km = 0.0;
    double req_matched_km = 0.0;
    double oo_km = 0.0;
    double dd_km = 0.0;
};

struct MatchReport {
    MatchMode mode = MatchMode::car;
    Metric metric = Metric::wgm;
    std::vector<MatchRow> rows;

    double match_travels_km = 0.0;
    /// Each chosen ride counted once however many requests picked it.
    double match_travels_distinct_km = 0.0;
    double req_travels_km = 0.0;
    double match_to_total_ratio = 0.0;
    double oo_dist_km = 0.0;
    double dd_dist_km = 0.0;
    double oo_time_s = 0.0;
    double dd_time_s = 0.0;
    std::size_t n_requests = 0;
    std::size_t n_matched = 0;
    double req_travels_matched_km = 0.0;
    double ratio_at_least_a_match = 0.0;
    double savings_pct = 0.0;

    TravelTotals totals() const;
};

/// Recomputes every aggregate from the rows.
void aggregate(MatchReport& report);

/// Savings as a fraction of the no-sharing total:
///   car:     1 - (req - req_matched + match) / (req + match)
///   carpool: 1 - (req + oo + dd) / (req + match)
double savings_accounting(const TravelTotals& totals, MatchMode mode);

/// Independent per-request choice of the best candidate (argmax for
/// similarity metrics, argmin for distances; ties go to the lowest ride id).
/// Rides have no capacity limit.
MatchReport greedy_match(std::span<const MatchTrip> requests, std::span<const MatchTrip> rides,
                         const MatchScenario& scenario);

enum class SweepAxis { distance, time };

struct CurvePoint {
    double threshold = 0.0;
    std::size_t min_matches = 0;
    std::size_t requests = 0;
};

/// For each swept threshold (other threshold fixed), the number of requests
/// with at least L candidates, for each L.
std::vector<CurvePoint> match_counts_curve(std::span<const MatchTrip> requests,
                                           std::span<const MatchTrip> rides,
                                           const MatchScenario& scenario, SweepAxis axis,
                                           std::span<const double> thresholds,
                                           std::span<const std::size_t> min_matches);

/// Runs greedy matching once per metric over one shared candidate filter.
/// Requires every representation to have the same length.
std::vector<MatchReport> compare_metrics(std::span<const MatchTrip> requests,
                                         std::span<const MatchTrip> rides,
                                         std::span<const Metric> metrics,
                                         const MatchScenario& scenario);

struct WeightSweepPoint {
    double time_weight = 0.0;
    double oo_dist_km = 0.0;
    double dd_dist_km = 0.0;
    double oo_time_s = 0.0;
    double dd_time_s = 0.0;
};

/// WGM matching with weights (1 - w_t, w_t) for each w_t.
std::vector<WeightSweepPoint> weight_sweep(std::span<const MatchTrip> requests,
                                           std::span<const MatchTrip> rides,
                                           const MatchScenario& scenario,
                                           std::span<const double> time_weights);

} // namespace tripsim
