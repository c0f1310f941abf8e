#include "tripsim/matching.hpp"

#include "tripsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tripsim {

MatchMode parse_match_mode(std::string_view name) {
    if (name == "car") return MatchMode::car;
    if (name == "carpool" || name == "cp") return MatchMode::carpool;
    fail(ErrorCategory::invalid_argument, "unknown match mode '" + std::string(name) + "'");
}

std::string_view to_string(MatchMode mode) noexcept {
    return mode == MatchMode::car ? "car" : "carpool";
}

void MatchScenario::validate() const {
    if (!(dist_threshold > 0.0) || !(time_threshold > 0.0)) {
        fail(ErrorCategory::invalid_argument, "match thresholds must be positive");
    }
    weights.validate();
    time_weights.validate();
    if (metric_params) metric_params->validate();
}

std::vector<MatchTrip> prepare_trips(std::span<const Trip> trips, const ScaleContext& ctx,
                                     Representation repr, std::size_t k) {
    std::vector<MatchTrip> out;
    out.reserve(trips.size());
    for (const auto& t : trips) out.push_back(MatchTrip{t, represent(t, ctx, repr, k), path_length(t)});
    return out;
}

namespace {

bool passes_filter(const Trip& request, const Trip& ride, const MatchScenario& s) {
    if (planar_distance(request.origin(), ride.origin()) > s.dist_threshold) return false;
    if (planar_distance(request.destination(), ride.destination()) > s.dist_threshold) return false;
    if (std::abs(request.start_time() - ride.start_time()) > s.time_threshold) return false;
    if (std::abs(request.end_time() - ride.end_time()) > s.time_threshold) return false;
    if (s.mode == MatchMode::car) {
        return ride.start_time() >= request.start_time() && ride.end_time() <= request.end_time();
    }
    return ride.start_time() <= request.start_time() && ride.end_time() >= request.end_time();
}

MetricParams params_for(const MatchScenario& s, std::span<const MatchTrip> requests,
                        std::span<const MatchTrip> rides) {
    if (s.metric_params) return *s.metric_params;
    // Default epsilons come from the thresholds under the bounds of both sets.
    std::vector<Trip> all;
    all.reserve(requests.size() + rides.size());
    for (const auto& r : requests) all.push_back(r.trip);
    for (const auto& r : rides) all.push_back(r.trip);
    if (all.empty()) return MetricParams{};
    return MetricParams::from_thresholds(s.dist_threshold, s.time_threshold,
                                         ScaleContext::from_trips(all));
}

void fill_row(MatchRow& row, const MatchTrip& request, const MatchTrip& ride, double score) {
    row.ride_id = ride.trip.id();
    row.ride_km = ride.length_m / 1000.0;
    row.oo_dist_m = planar_distance(request.trip.origin(), ride.trip.origin());
    row.dd_dist_m = planar_distance(request.trip.destination(), ride.trip.destination());
    row.oo_time_s = std::abs(request.trip.start_time() - ride.trip.start_time());
    row.dd_time_s = std::abs(request.trip.end_time() - ride.trip.end_time());
    row.score = score;
}

MatchReport match_with_candidates(std::span<const MatchTrip> requests,
                                  std::span<const MatchTrip> rides,
                                  const std::vector<std::vector<std::size_t>>& candidates,
                                  Metric metric, const MatchScenario& scenario,
                                  const MetricParams& params) {
    MatchReport report;
    report.mode = scenario.mode;
    report.metric = metric;
    report.rows.reserve(requests.size());
    const bool maximize = is_similarity(metric);
    for (std::size_t r = 0; r < requests.size(); ++r) {
        const auto& request = requests[r];
        MatchRow row;
        row.request_id = request.trip.id();
        row.request_km = request.length_m / 1000.0;
        row.candidates = candidates[r].size();
        const MatchTrip* best = nullptr;
        double best_score = 0.0;
        for (auto c : candidates[r]) {
            const auto& ride = rides[c];
            const double s = match_score(request, ride, metric, scenario, params);
            const bool better = best == nullptr || (maximize ? s > best_score : s < best_score) ||
                                (s == best_score && ride.trip.id() < best->trip.id());
            if (better) {
                best = &ride;
                best_score = s;
            }
        }
        if (best) fill_row(row, request, *best, best_score);
        report.rows.push_back(std::move(row));
    }
    aggregate(report);
    return report;
}

std::vector<std::vector<std::size_t>> all_candidates(std::span<const MatchTrip> requests,
                                                     std::span<const MatchTrip> rides,
                                                     const MatchScenario& scenario) {
    std::vector<std::vector<std::size_t>> out;
    out.reserve(requests.size());
    for (const auto& r : requests) out.push_back(feasible_candidates(r.trip, rides, scenario));
    return out;
}

} // namespace

std::vector<std::size_t> feasible_candidates(const Trip& request, std::span<const MatchTrip> rides,
                                             const MatchScenario& scenario) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rides.size(); ++i) {
        if (passes_filter(request, rides[i].trip, scenario)) out.push_back(i);
    }
    return out;
}

double match_score(const MatchTrip& request, const MatchTrip& ride, Metric metric,
                   const MatchScenario& scenario, const MetricParams& params) {
    const auto& a = request.repr.points;
    const auto& b = ride.repr.points;
    switch (metric) {
    case Metric::wgm:
    case Metric::wgm_time: {
        const auto& w = metric == Metric::wgm ? scenario.weights : scenario.time_weights;
        return scenario.mode == MatchMode::car ? car_score(a, b, w).score : cp_score(a, b, w).score;
    }
    case Metric::lcss: return static_cast<double>(lcss(a, b, params));
    case Metric::dtw: return dtw(a, b, DtwCost::distance);
    case Metric::dtw_time: return dtw(a, b, DtwCost::distance_times_time);
    case Metric::frechet: return frechet_discrete(a, b);
    }
    return 0.0;
}

TravelTotals MatchReport::totals() const {
    return TravelTotals{req_travels_km, match_travels_km, req_travels_matched_km, oo_dist_km, dd_dist_km};
}

void aggregate(MatchReport& report) {
    report.match_travels_km = 0.0;
    report.match_travels_distinct_km = 0.0;
    report.req_travels_km = 0.0;
    report.oo_dist_km = report.dd_dist_km = 0.0;
    report.oo_time_s = report.dd_time_s = 0.0;
    report.n_matched = 0;
    report.req_travels_matched_km = 0.0;
    report.n_requests = report.rows.size();
    std::set<std::string> seen;
    for (const auto& row : report.rows) {
        report.req_travels_km += row.request_km;
        if (!row.ride_id) continue;
        ++report.n_matched;
        report.match_travels_km += row.ride_km;
        if (seen.insert(*row.ride_id).second) report.match_travels_distinct_km += row.ride_km;
        report.req_travels_matched_km += row.request_km;
        report.oo_dist_km += row.oo_dist_m / 1000.0;
        report.dd_dist_km += row.dd_dist_m / 1000.0;
        report.oo_time_s += row.oo_time_s;
        report.dd_time_s += row.dd_time_s;
    }
    const double total = report.req_travels_km + report.match_travels_km;
    report.match_to_total_ratio = total > 0.0 ? report.match_travels_km / total : 0.0;
    const double matched_total = report.req_travels_matched_km + report.match_travels_km;
    report.ratio_at_least_a_match = matched_total > 0.0 ? report.match_travels_km / matched_total : 0.0;
    report.savings_pct = total > 0.0 ? 100.0 * savings_accounting(report.totals(), report.mode) : 0.0;
}

double savings_accounting(const TravelTotals& t, MatchMode mode) {
    const double baseline = t.req_km + t.match_km;
    if (!(baseline > 0.0)) fail(ErrorCategory::undefined_report, "savings: no travel in report");
    if (mode == MatchMode::car) {
        const double unmatched = t.req_km - t.req_matched_km;
        return 1.0 - (unmatched + t.match_km) / baseline;
    }
    return 1.0 - (t.req_km + t.oo_km + t.dd_km) / baseline;
}

MatchReport greedy_match(std::span<const MatchTrip> requests, std::span<const MatchTrip> rides,
                         const MatchScenario& scenario) {
    scenario.validate();
    const auto params = params_for(scenario, requests, rides);
    return match_with_candidates(requests, rides, all_candidates(requests, rides, scenario),
                                 scenario.metric, scenario, params);
}

std::vector<CurvePoint> match_counts_curve(std::span<const MatchTrip> requests,
                                           std::span<const MatchTrip> rides,
                                           const MatchScenario& scenario, SweepAxis axis,
                                           std::span<const double> thresholds,
                                           std::span<const std::size_t> min_matches) {
    std::vector<CurvePoint> out;
    for (double th : thresholds) {
        MatchScenario s = scenario;
        (axis == SweepAxis::distance ? s.dist_threshold : s.time_threshold) = th;
        s.validate();
        std::vector<std::size_t> counts;
        counts.reserve(requests.size());
        for (const auto& r : requests) counts.push_back(feasible_candidates(r.trip, rides, s).size());
        for (auto l : min_matches) {
            const auto hits = static_cast<std::size_t>(
                std::count_if(counts.begin(), counts.end(), [l](std::size_t c) { return c >= l; }));
            out.push_back(CurvePoint{th, l, hits});
        }
    }
    return out;
}

std::vector<MatchReport> compare_metrics(std::span<const MatchTrip> requests,
                                         std::span<const MatchTrip> rides,
                                         std::span<const Metric> metrics,
                                         const MatchScenario& scenario) {
    scenario.validate();
    std::optional<std::size_t> len;
    auto check = [&len](const MatchTrip& t) {
        if (!len) len = t.repr.points.size();
        if (*len != t.repr.points.size()) {
            fail(ErrorCategory::invalid_argument,
                 "compare_metrics: trip '" + t.trip.id() + "' has a different representation length");
        }
    };
    for (const auto& r : requests) check(r);
    for (const auto& r : rides) check(r);

    const auto candidates = all_candidates(requests, rides, scenario);
    const auto params = params_for(scenario, requests, rides);
    std::vector<MatchReport> out;
    out.reserve(metrics.size());
    for (auto m : metrics) out.push_back(match_with_candidates(requests, rides, candidates, m, scenario, params));
    return out;
}

std::vector<WeightSweepPoint> weight_sweep(std::span<const MatchTrip> requests,
                                           std::span<const MatchTrip> rides,
                                           const MatchScenario& scenario,
                                           std::span<const double> time_weights) {
    scenario.validate();
    const auto candidates = all_candidates(requests, rides, scenario);
    const auto params = params_for(scenario, requests, rides);
    std::vector<WeightSweepPoint> out;
    for (double wt : time_weights) {
        MatchScenario s = scenario;
        s.weights = WgmWeights{1.0 - wt, wt};
        s.validate();
        const auto report = match_with_candidates(requests, rides, candidates, Metric::wgm, s, params);
        out.push_back(WeightSweepPoint{wt, report.oo_dist_km, report.dd_dist_km, report.oo_time_s,
                                       report.dd_time_s});
    }
    return out;
}

} // namespace tripsim
