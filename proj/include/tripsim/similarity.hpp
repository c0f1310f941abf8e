#pragma once

#include "tripsim/trip.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace tripsim {

/// Weights of the spatial and temporal factors of the geometric mean.
/// Only their ratio matters.
struct WgmWeights {
    double space = 0.6;
    double time = 0.4;

    void validate() const;
};

/// How the time term between two points is formed.
///  - absolute:   |t1 - t2| everywhere.
///  - signed_car: origin t2 - t1, destination t1 - t2 (t2 must nest inside t1).
///  - signed_cp:  the signed roles swapped.
/// Interior points always use |t1 - t2|.
enum class TimeMode { absolute, signed_car, signed_cp };

enum class PointRole { origin, destination, interior };

struct PointScore {
    double value = 1.0;
    /// Set when a signed time term came out negative (wrong temporal order).
    bool infeasible = false;
};

/// Weighted geometric mean of 1/(1+d) and 1/(1+tau+), tau+ = max(tau, 0).
PointScore psim_detail(const ScaledPoint& a, const ScaledPoint& b, const WgmWeights& w,
                       TimeMode mode, PointRole role);

double psim(const ScaledPoint& a, const ScaledPoint& b, const WgmWeights& w,
            TimeMode mode = TimeMode::absolute, PointRole role = PointRole::interior);

struct TripScore {
    double score = 1.0;
    bool feasible = true;
};

/// Arithmetic mean of the point-wise psim over two equal-length sequences.
/// Index 0 is scored as origin and index n-1 as destination.
TripScore wgm_detail(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b,
                     const WgmWeights& w, TimeMode mode);

double wgm_sim(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b, const WgmWeights& w,
               TimeMode mode = TimeMode::absolute);

/// Catch-a-ride score of `rider` boarding `ride`: the ride has to start after
/// and end before the rider. Infeasible when it does not.
TripScore car_score(std::span<const ScaledPoint> rider, std::span<const ScaledPoint> ride,
                    const WgmWeights& w);

/// Carpool score; cp_score(a, b) equals car_score(b, a) exactly.
TripScore cp_score(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b,
                   const WgmWeights& w);

enum class DtwCost { distance, distance_times_time };

struct MetricParams {
    double lcss_eps_space = 0.06;
    double lcss_eps_time = 0.25;
    DtwCost dtw_cost = DtwCost::distance;

    void validate() const;

    /// Epsilons equivalent to raw thresholds (meters, seconds) under ctx.
    /// The spatial epsilon uses the larger of the x and y spans.
    static MetricParams from_thresholds(double dist_m, double time_s, const ScaleContext& ctx);
};

/// Longest common subsequence where points match when both the spatial
/// distance and |dt| are within the epsilons.
std::size_t lcss(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b,
                 const MetricParams& params);

double dtw(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b, DtwCost cost);

/// Discrete Frechet distance over the spatial coordinates.
double frechet_discrete(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b);

/// exp(-gamma (1 - score)), used to spread score distributions for display.
double laplacian_kernel(double score, double gamma = 3.0);

double spatial_distance(const ScaledPoint& a, const ScaledPoint& b);

/// Metrics selectable by name: wgm | wgm_time | lcss | dtw | dtw_time | frechet.
enum class Metric { wgm, wgm_time, lcss, dtw, dtw_time, frechet };

Metric parse_metric(std::string_view name);
std::string_view to_string(Metric metric) noexcept;

/// Whether larger values mean closer trips (wgm, lcss) or not (dtw, frechet).
bool is_similarity(Metric metric) noexcept;

/// Per-thread evaluation counters used to verify complexity contracts.
namespace instrumentation {
std::uint64_t psim_calls() noexcept;
std::uint64_t dp_cells() noexcept;
void reset() noexcept;
} // namespace instrumentation

} // namespace tripsim
