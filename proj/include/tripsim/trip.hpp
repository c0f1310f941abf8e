#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tripsim {

/// One planar sample of a trip: meters and seconds.
struct Waypoint {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
    std::optional<double> speed;

    friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

/// An identified, time-ordered sequence of waypoints. Origin and
/// destination are the first and last samples.
class Trip {
public:
    Trip(std::string id, std::vector<Waypoint> waypoints);

    const std::string& id() const noexcept { return id_; }
    std::span<const Waypoint> waypoints() const noexcept { return waypoints_; }
    std::size_t size() const noexcept { return waypoints_.size(); }

    const Waypoint& origin() const noexcept { return waypoints_.front(); }
    const Waypoint& destination() const noexcept { return waypoints_.back(); }
    double start_time() const noexcept { return origin().t; }
    double end_time() const noexcept { return destination().t; }
    double duration() const noexcept { return end_time() - start_time(); }

    friend bool operator==(const Trip&, const Trip&) = default;

private:
    std::string id_;
    std::vector<Waypoint> waypoints_;
};

/// Bounds mapping raw coordinates and times onto [0,1].
struct ScaleContext {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;
    double t_min = 0.0;
    double t_max = 1.0;

    /// Throws invalid-argument when any span is zero, negative or non-finite.
    void validate() const;

    double x_span() const noexcept { return x_max - x_min; }
    double y_span() const noexcept { return y_max - y_min; }
    double t_span() const noexcept { return t_max - t_min; }

    /// Tight bounds over every waypoint of `trips`. A zero span along an
    /// axis is widened by half a unit on each side so the result is valid.
    static ScaleContext from_trips(std::span<const Trip> trips);

    friend bool operator==(const ScaleContext&, const ScaleContext&) = default;
};

struct ScaledPoint {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;

    friend bool operator==(const ScaledPoint&, const ScaledPoint&) = default;
};

/// Scaled point sequence of a trip, as consumed by the similarity metrics.
struct ScaledTrip {
    std::string id;
    std::vector<ScaledPoint> points;
    /// Number of points that fell outside the context and were clamped.
    std::size_t clamped = 0;
};

std::pair<Waypoint, Waypoint> extract_od(const Trip& trip);

/// Index-uniform subsample: keeps indices round(i*(n-1)/(k-1)), i = 0..k-1.
/// Trips with n <= k are returned unchanged.
Trip sample_waypoints(const Trip& trip, std::size_t k);

/// Indices chosen by sample_waypoints for a trip of n points.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

ScaledPoint scale(const Waypoint& point, const ScaleContext& ctx);

/// Same as scale(), incrementing `clamped` when the point lies outside ctx.
ScaledPoint scale(const Waypoint& point, const ScaleContext& ctx, std::size_t& clamped);

Waypoint unscale(const ScaledPoint& point, const ScaleContext& ctx);

ScaledTrip scale_trip(const Trip& trip, const ScaleContext& ctx);

double path_length(const Trip& trip);

/// Straight-line distance between origin and destination.
double od_displacement(const Trip& trip);

double planar_distance(const Waypoint& a, const Waypoint& b);

/// Representation used by the matching and clustering pipelines.
enum class Representation { od, sampled };

/// Scaled OD pair (2 points) or index-uniform sample of `k` points.
ScaledTrip represent(const Trip& trip, const ScaleContext& ctx, Representation repr,
                     std::size_t k = 50);

} // namespace tripsim
