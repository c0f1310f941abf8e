#include "tripsim/trip.hpp"

#include "tripsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tripsim {

Trip::Trip(std::string id, std::vector<Waypoint> waypoints)
    : id_(std::move(id)), waypoints_(std::move(waypoints)) {
    if (waypoints_.empty()) {
        fail(ErrorCategory::invalid_argument, "trip '" + id_ + "' has no waypoints");
    }
    for (std::size_t i = 0; i < waypoints_.size(); ++i) {
        const auto& w = waypoints_[i];
        if (!std::isfinite(w.x) || !std::isfinite(w.y) || !std::isfinite(w.t)) {
            fail(ErrorCategory::invalid_argument, "trip '" + id_ + "' has a non-finite waypoint");
        }
        if (w.t < 0.0) {
            fail(ErrorCategory::invalid_argument, "trip '" + id_ + "' has a negative timestamp");
        }
        if (i > 0 && w.t < waypoints_[i - 1].t) {
            fail(ErrorCategory::invalid_argument, "trip '" + id_ + "' waypoints are not time-ordered");
        }
    }
}

void ScaleContext::validate() const {
    auto ok = [](double lo, double hi) {
        return std::isfinite(lo) && std::isfinite(hi) && hi > lo;
    };
    if (!ok(x_min, x_max) || !ok(y_min, y_max) || !ok(t_min, t_max)) {
        fail(ErrorCategory::invalid_argument, "scale context has a degenerate span");
    }
}

ScaleContext ScaleContext::from_trips(std::span<const Trip> trips) {
    if (trips.empty()) {
        fail(ErrorCategory::invalid_argument, "cannot derive scale context from an empty trip set");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    ScaleContext ctx{inf, -inf, inf, -inf, inf, -inf};
    for (const auto& trip : trips) {
        for (const auto& w : trip.waypoints()) {
            ctx.x_min = std::min(ctx.x_min, w.x);
            ctx.x_max = std::max(ctx.x_max, w.x);
            ctx.y_min = std::min(ctx.y_min, w.y);
            ctx.y_max = std::max(ctx.y_max, w.y);
            ctx.t_min = std::min(ctx.t_min, w.t);
            ctx.t_max = std::max(ctx.t_max, w.t);
        }
    }
    auto widen = [](double& lo, double& hi) {
        if (hi <= lo) {
            lo -= 0.5;
            hi += 0.5;
        }
    };
    widen(ctx.x_min, ctx.x_max);
    widen(ctx.y_min, ctx.y_max);
    widen(ctx.t_min, ctx.t_max);
    return ctx;
}

std::pair<Waypoint, Waypoint> extract_od(const Trip& trip) {
    return {trip.origin(), trip.destination()};
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    if (k < 2) {
        fail(ErrorCategory::invalid_argument, "sample size must be at least 2");
    }
    std::vector<std::size_t> out;
    if (n <= k) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = i;
        return out;
    }
    out.reserve(k);
    // round(i*(n-1)/(k-1)) with halves rounded up, in exact integer arithmetic
    const std::size_t num = n - 1;
    const std::size_t den = k - 1;
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back((2 * i * num + den) / (2 * den));
    }
    return out;
}

Trip sample_waypoints(const Trip& trip, std::size_t k) {
    const auto idx = sample_indices(trip.size(), k);
    if (idx.size() == trip.size()) return trip;
    std::vector<Waypoint> kept;
    kept.reserve(idx.size());
    for (auto i : idx) kept.push_back(trip.waypoints()[i]);
    return Trip(trip.id(), std::move(kept));
}

namespace {

double unit(double v, double lo, double span, bool& clamped) {
    double s = (v - lo) / span;
    if (s < 0.0) {
        clamped = true;
        return 0.0;
    }
    if (s > 1.0) {
        clamped = true;
        return 1.0;
    }
    return s;
}

} // namespace

ScaledPoint scale(const Waypoint& point, const ScaleContext& ctx, std::size_t& clamped) {
    ctx.validate();
    bool out = false;
    ScaledPoint p{unit(point.x, ctx.x_min, ctx.x_span(), out),
                  unit(point.y, ctx.y_min, ctx.y_span(), out),
                  unit(point.t, ctx.t_min, ctx.t_span(), out)};
    if (out) ++clamped;
    return p;
}

ScaledPoint scale(const Waypoint& point, const ScaleContext& ctx) {
    std::size_t ignored = 0;
    return scale(point, ctx, ignored);
}

Waypoint unscale(const ScaledPoint& point, const ScaleContext& ctx) {
    ctx.validate();
    return Waypoint{ctx.x_min + point.x * ctx.x_span(), ctx.y_min + point.y * ctx.y_span(),
                    ctx.t_min + point.t * ctx.t_span(), std::nullopt};
}

ScaledTrip scale_trip(const Trip& trip, const ScaleContext& ctx) {
    ScaledTrip out{trip.id(), {}, 0};
    out.points.reserve(trip.size());
    for (const auto& w : trip.waypoints()) out.points.push_back(scale(w, ctx, out.clamped));
    return out;
}

double planar_distance(const Waypoint& a, const Waypoint& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double path_length(const Trip& trip) {
    const auto w = trip.waypoints();
    double total = 0.0;
    for (std::size_t i = 1; i < w.size(); ++i) total += planar_distance(w[i - 1], w[i]);
    return total;
}

double od_displacement(const Trip& trip) {
    return planar_distance(trip.origin(), trip.destination());
}

ScaledTrip represent(const Trip& trip, const ScaleContext& ctx, Representation repr,
                     std::size_t k) {
    if (repr == Representation::od) {
        ScaledTrip out{trip.id(), {}, 0};
        out.points = {scale(trip.origin(), ctx, out.clamped),
                      scale(trip.destination(), ctx, out.clamped)};
        return out;
    }
    return scale_trip(sample_waypoints(trip, k), ctx);
}

} // namespace tripsim
