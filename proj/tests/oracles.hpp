#pragma once

// Reference implementations used only by the tests. Each follows the plain
// recursive or exhaustive definition and shares no code with the library
// beyond the point types.

#include "tripsim/matching.hpp"
#include "tripsim/trip.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using tripsim::ScaledPoint;

inline double dist(const ScaledPoint& a, const ScaledPoint& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

/// LCSS by the textbook recursion on prefixes of length i, j.
inline std::size_t lcss(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b,
                        double eps_space, double eps_time) {
    std::function<std::size_t(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == 0 || j == 0) return 0;
        const auto& p = a[i - 1];
        const auto& q = b[j - 1];
        if (dist(p, q) <= eps_space && std::abs(p.t - q.t) <= eps_time) return rec(i - 1, j - 1) + 1;
        return std::max(rec(i - 1, j), rec(i, j - 1));
    };
    return rec(a.size(), b.size());
}

/// DTW by recursion over the last aligned pair.
inline double dtw(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b, bool with_time) {
    std::function<double(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t j) -> double {
        double c = dist(a[i], b[j]);
        if (with_time) c *= std::abs(a[i].t - b[j].t);
        if (i == 0 && j == 0) return c;
        double best = std::numeric_limits<double>::infinity();
        if (i > 0) best = std::min(best, rec(i - 1, j));
        if (j > 0) best = std::min(best, rec(i, j - 1));
        if (i > 0 && j > 0) best = std::min(best, rec(i - 1, j - 1));
        return c + best;
    };
    return rec(a.size() - 1, b.size() - 1);
}

/// Discrete Frechet by the Eiter-Mannila recursion.
inline double frechet(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b) {
    std::function<double(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t j) -> double {
        const double d = dist(a[i], b[j]);
        if (i == 0 && j == 0) return d;
        double best = std::numeric_limits<double>::infinity();
        if (i > 0) best = std::min(best, rec(i - 1, j));
        if (j > 0) best = std::min(best, rec(i, j - 1));
        if (i > 0 && j > 0) best = std::min(best, rec(i - 1, j - 1));
        return std::max(d, best);
    };
    return rec(a.size() - 1, b.size() - 1);
}

struct Edge {
    std::size_t u;
    std::size_t v;
    double w;
};

struct BestMatching {
    std::size_t cardinality = 0;
    double weight = 0.0;
};

/// Enumerates every matching of a bipartite graph (left u, right v) and
/// returns the largest cardinality with the heaviest weight among those.
inline BestMatching brute_force_matching(std::size_t n_left, std::size_t n_right,
                                         const std::vector<Edge>& edges) {
    BestMatching best;
    std::vector<char> right_used(n_right, 0);
    std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t left, std::size_t size, double w) {
        if (left == n_left) {
            if (size > best.cardinality || (size == best.cardinality && w > best.weight)) {
                best = {size, w};
            }
            return;
        }
        rec(left + 1, size, w);
        for (const auto& e : edges) {
            if (e.u != left || right_used[e.v]) continue;
            right_used[e.v] = 1;
            rec(left + 1, size + 1, w + e.w);
            right_used[e.v] = 0;
        }
    };
    rec(0, 0, 0.0);
    return best;
}

struct BestPartition {
    std::size_t paths = 0;
    double weight = 0.0;
};

/// Enumerates every partition of a DAG's nodes into vertex-disjoint directed
/// paths (each node picks at most one successor edge, each node has at most
/// one predecessor) and returns the fewest paths with the heaviest total
/// edge weight among those.
inline BestPartition brute_force_path_partition(std::size_t n, const std::vector<Edge>& edges) {
    BestPartition best{n + 1, 0.0};
    std::vector<std::optional<std::size_t>> succ(n);
    std::vector<char> has_pred(n, 0);
    std::function<void(std::size_t, double)> rec = [&](std::size_t node, double w) {
        if (node == n) {
            // Count path heads; check every node is reached exactly once.
            std::size_t heads = 0, covered = 0;
            for (std::size_t s = 0; s < n; ++s) {
                if (has_pred[s]) continue;
                ++heads;
                for (std::optional<std::size_t> cur = s; cur; cur = succ[*cur]) ++covered;
            }
            if (covered != n) return;
            if (heads < best.paths || (heads == best.paths && w > best.weight)) best = {heads, w};
            return;
        }
        succ[node].reset();
        rec(node + 1, w);
        for (const auto& e : edges) {
            if (e.u != node || has_pred[e.v]) continue;
            succ[node] = e.v;
            has_pred[e.v] = 1;
            rec(node + 1, w + e.w);
            has_pred[e.v] = 0;
            succ[node].reset();
        }
    };
    rec(0, 0.0);
    return best;
}

/// Per-request choice by scanning every ride: the candidate filter written
/// out from its definition, the recursive oracles for the DP metrics, and
/// the closed-form WGM scores. Ties go to the lowest ride id.
inline std::optional<std::string> exhaustive_choice(const tripsim::MatchTrip& req,
                                                    std::span<const tripsim::MatchTrip> rides,
                                                    const tripsim::MatchScenario& s) {
    using tripsim::MatchMode;
    using tripsim::Metric;
    const auto& r = req.trip;
    const bool car = s.mode == MatchMode::car;
    const Metric m = s.metric;
    const bool maximize = m == Metric::wgm || m == Metric::wgm_time || m == Metric::lcss;
    std::optional<std::string> best_id;
    double best = 0.0;
    for (const auto& ride : rides) {
        const auto& c = ride.trip;
        const double oo = std::hypot(r.origin().x - c.origin().x, r.origin().y - c.origin().y);
        const double dd = std::hypot(r.destination().x - c.destination().x, r.destination().y - c.destination().y);
        const bool ok = oo <= s.dist_threshold && dd <= s.dist_threshold &&
                        std::abs(r.start_time() - c.start_time()) <= s.time_threshold &&
                        std::abs(r.end_time() - c.end_time()) <= s.time_threshold &&
                        (car ? c.start_time() >= r.start_time() && c.end_time() <= r.end_time()
                             : c.start_time() <= r.start_time() && c.end_time() >= r.end_time());
        if (!ok) continue;
        const auto& a = req.repr.points;
        const auto& b = ride.repr.points;
        double score = 0.0;
        switch (m) {
        case Metric::wgm:
        case Metric::wgm_time: {
            const auto& w = m == Metric::wgm ? s.weights : s.time_weights;
            score = car ? tripsim::car_score(a, b, w).score : tripsim::car_score(b, a, w).score;
            break;
        }
        case Metric::lcss:
            score = static_cast<double>(lcss(a, b, s.metric_params->lcss_eps_space, s.metric_params->lcss_eps_time));
            break;
        case Metric::dtw: score = dtw(a, b, false); break;
        case Metric::dtw_time: score = dtw(a, b, true); break;
        case Metric::frechet: score = frechet(a, b); break;
        }
        const bool better = !best_id || (maximize ? score > best : score < best) || (score == best && c.id() < *best_id);
        if (better) {
            best = score;
            best_id = c.id();
        }
    }
    return best_id;
}

inline std::vector<ScaledPoint> random_sequence(std::mt19937_64& rng, std::size_t len) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ScaledPoint> out(len);
    double t = 0.0;
    for (auto& p : out) {
        t += 0.1 * u(rng);
        p = ScaledPoint{u(rng), u(rng), std::min(t, 1.0)};
    }
    return out;
}

} // namespace oracle
