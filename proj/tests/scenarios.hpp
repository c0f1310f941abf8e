#pragma once

// Synthetic request/ride populations for matching tests.

#include "tripsim/trip.hpp"

#include <cstdio>
#include <random>
#include <string>
#include <vector>

namespace scenarios {

using tripsim::Trip;
using tripsim::Waypoint;

inline Trip straight_trip(std::string id, double ox, double oy, double t0, double dx, double dy,
                          double t1, std::size_t points = 2) {
    std::vector<Waypoint> pts;
    for (std::size_t i = 0; i < points; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(points - 1);
        pts.push_back(Waypoint{ox + f * (dx - ox), oy + f * (dy - oy), t0 + f * (t1 - t0), std::nullopt});
    }
    return Trip(std::move(id), std::move(pts));
}

inline std::string numbered(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
    return buf;
}

struct Population {
    std::vector<Trip> requests;
    std::vector<Trip> rides;
};

/// Requests in a 6 km box over one hour; rides are perturbed copies of
/// random requests so a realistic share of pairs pass the default filters.
inline Population nearby_population(std::uint64_t seed, std::size_t n_requests, std::size_t n_rides,
                                    std::size_t points = 2) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(0.0, 6000.0), start(0.0, 2400.0), dur(600.0, 1200.0);
    std::uniform_real_distribution<double> off(-1500.0, 1500.0), shift(-400.0, 600.0);
    Population p;
    for (std::size_t i = 0; i < n_requests; ++i) {
        const double t0 = std::round(start(rng));
        p.requests.push_back(straight_trip(numbered("req", i), std::round(pos(rng)), std::round(pos(rng)), t0,
                                           std::round(pos(rng)), std::round(pos(rng)),
                                           t0 + std::round(dur(rng)), points));
    }
    std::uniform_int_distribution<std::size_t> pick(0, n_requests - 1);
    for (std::size_t i = 0; i < n_rides; ++i) {
        const auto& base = p.requests[pick(rng)];
        const auto& o = base.origin();
        const auto& d = base.destination();
        const double t0 = base.start_time() + std::round(shift(rng) / 2);
        const double t1 = base.end_time() - std::round(shift(rng) / 2);
        p.rides.push_back(straight_trip(numbered("ride", i), o.x + std::round(off(rng)), o.y + std::round(off(rng)),
                                        std::max(0.0, t0), d.x + std::round(off(rng)), d.y + std::round(off(rng)),
                                        std::max(t1, std::max(0.0, t0) + 60.0), points));
    }
    return p;
}

} // namespace scenarios
