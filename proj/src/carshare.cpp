#include "tripsim/carshare.hpp"

#include "tripsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

namespace tripsim {

bool TripDag::is_acyclic() const {
    std::vector<std::size_t> indegree(n, 0);
    std::vector<std::vector<std::size_t>> succ(n);
    for (const auto& e : edges) {
        if (e.from >= n || e.to >= n) return false;
        succ[e.from].push_back(e.to);
        ++indegree[e.to];
    }
    std::queue<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) ready.push(i);
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        const auto v = ready.front();
        ready.pop();
        ++visited;
        for (auto w : succ[v]) {
            if (--indegree[w] == 0) ready.push(w);
        }
    }
    return visited == n;
}

TripDag build_trip_dag(std::span<const Trip> trips, const ScaleContext& ctx, const DagOptions& opts) {
    if (!(opts.dist_threshold > 0.0) || !(opts.time_threshold > 0.0)) {
        fail(ErrorCategory::invalid_argument, "car-sharing thresholds must be positive");
    }
    opts.weights.validate();
    ctx.validate();
    std::vector<ScaledTrip> od;
    od.reserve(trips.size());
    for (const auto& t : trips) od.push_back(represent(t, ctx, Representation::od));

    TripDag dag;
    dag.n = trips.size();
    for (std::size_t a = 0; a < trips.size(); ++a) {
        for (std::size_t b = 0; b < trips.size(); ++b) {
            const double gap = trips[b].start_time() - trips[a].end_time();
            if (!(gap > 0.0) || gap > opts.time_threshold) continue;
            if (planar_distance(trips[a].destination(), trips[b].origin()) > opts.dist_threshold) continue;
            double w = 0.0;
            if (opts.edge_weight == EdgeWeight::endpoints) {
                w = psim(od[a].points.back(), od[b].points.front(), opts.weights);
            } else {
                w = wgm_sim(od[a].points, od[b].points, opts.weights);
            }
            dag.edges.push_back(DagEdge{a, b, w});
        }
    }
    if (!dag.is_acyclic()) {
        fail(ErrorCategory::degenerate_input, "trip graph contains a cycle");
    }
    return dag;
}

BipartiteGraph dag_to_bipartite(const TripDag& dag) {
    BipartiteGraph g{dag.n, dag.n, {}};
    g.edges.reserve(dag.edges.size());
    for (const auto& e : dag.edges) g.edges.push_back(BipartiteEdge{e.from, e.to, e.weight});
    return g;
}

std::vector<std::size_t> hungarian_max(const std::vector<std::vector<double>>& benefit) {
    const std::size_t rows = benefit.size();
    if (rows == 0) return {};
    const std::size_t cols = benefit.front().size();
    if (cols < rows) fail(ErrorCategory::invalid_argument, "hungarian: more rows than columns");
    constexpr double inf = std::numeric_limits<double>::infinity();

    // Shortest augmenting paths with potentials on cost = -benefit; 1-based.
    std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
    std::vector<std::size_t> owner(cols + 1, 0), way(cols + 1, 0);
    for (std::size_t i = 1; i <= rows; ++i) {
        owner[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(cols + 1, inf);
        std::vector<char> used(cols + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = owner[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= cols; ++j) {
                if (used[j]) continue;
                const double cur = -benefit[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= cols; ++j) {
                if (used[j]) {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (owner[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assignment(rows, 0);
    for (std::size_t j = 1; j <= cols; ++j) {
        if (owner[j] != 0) assignment[owner[j] - 1] = j - 1;
    }
    return assignment;
}

Matching max_card_max_weight_matching(const BipartiteGraph& graph) {
    Matching result;
    if (graph.edges.empty()) return result;
    double top = 0.0;
    for (const auto& e : graph.edges) {
        if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
            fail(ErrorCategory::invalid_argument, "matching: edge weights must be finite and nonnegative");
        }
        if (e.left >= graph.n_left || e.right >= graph.n_right) {
            fail(ErrorCategory::invalid_argument, "matching: edge endpoint out of range");
        }
        top = std::max(top, e.weight);
    }
    if (top == 0.0) top = 1.0;
    const std::size_t n = std::max(graph.n_left, graph.n_right);
    const double shift = static_cast<double>(n) * top;

    // Parallel edges keep their best weight.
    std::map<std::pair<std::size_t, std::size_t>, double> best;
    for (const auto& e : graph.edges) {
        auto [it, inserted] = best.try_emplace({e.left, e.right}, e.weight);
        if (!inserted) it->second = std::max(it->second, e.weight);
    }
    std::vector<std::vector<double>> benefit(n, std::vector<double>(n, 0.0));
    for (const auto& [key, w] : best) benefit[key.first][key.second] = w + shift;

    const auto assignment = hungarian_max(benefit);
    for (std::size_t i = 0; i < graph.n_left; ++i) {
        auto it = best.find({i, assignment[i]});
        if (it == best.end()) continue;
        result.pairs.emplace_back(i, assignment[i]);
        result.weight += it->second;
    }
    return result;
}

double ChainSchedule::mean_multi_chain_length() const {
    std::size_t count = 0, total = 0;
    for (const auto& c : chains) {
        if (c.size() < 2) continue;
        ++count;
        total += c.size();
    }
    return count ? static_cast<double>(total) / static_cast<double>(count) : 0.0;
}

double ChainSchedule::mean_chain_length() const {
    if (chains.empty()) return 0.0;
    std::size_t total = 0;
    for (const auto& c : chains) total += c.size();
    return static_cast<double>(total) / static_cast<double>(chains.size());
}

ChainSchedule extract_chains(const TripDag& dag, const Matching& matching) {
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> next(dag.n, none), prev(dag.n, none);
    std::map<std::pair<std::size_t, std::size_t>, bool> edges;
    for (const auto& e : dag.edges) edges[{e.from, e.to}] = true;
    for (auto [l, r] : matching.pairs) {
        if (l >= dag.n || r >= dag.n) fail(ErrorCategory::invalid_argument, "matching refers to unknown trip");
        if (next[l] != none || prev[r] != none) {
            fail(ErrorCategory::invalid_argument, "matching shares an endpoint");
        }
        if (!edges.contains({l, r})) fail(ErrorCategory::invalid_argument, "matched pair is not a DAG edge");
        next[l] = r;
        prev[r] = l;
    }

    ChainSchedule schedule;
    schedule.cardinality = matching.pairs.size();
    std::size_t covered = 0;
    for (std::size_t start = 0; start < dag.n; ++start) {
        if (prev[start] != none) continue;
        std::vector<std::size_t> chain;
        for (auto cur = start; cur != none; cur = next[cur]) chain.push_back(cur);
        covered += chain.size();
        if (chain.size() == 1) ++schedule.singleton_count;
        schedule.chains.push_back(std::move(chain));
    }
    if (covered != dag.n) fail(ErrorCategory::invalid_argument, "matching forms a cycle");
    schedule.n_cars = schedule.chains.size();
    return schedule;
}

std::vector<ChainStats> chain_stats(const ChainSchedule& schedule, std::span<const Trip> trips) {
    std::vector<ChainStats> out;
    out.reserve(schedule.chains.size());
    for (const auto& chain : schedule.chains) {
        ChainStats s;
        s.length = chain.size();
        for (std::size_t i = 0; i < chain.size(); ++i) {
            if (chain[i] >= trips.size()) fail(ErrorCategory::invalid_argument, "chain refers to unknown trip");
            const auto& trip = trips[chain[i]];
            s.travel_km += path_length(trip) / 1000.0;
            if (i == 0) continue;
            const auto& before = trips[chain[i - 1]];
            s.pickup_km += planar_distance(before.destination(), trip.origin()) / 1000.0;
            s.pickup_s += trip.start_time() - before.end_time();
        }
        out.push_back(s);
    }
    return out;
}

std::vector<std::size_t> chain_length_histogram(const ChainSchedule& schedule) {
    std::vector<std::size_t> hist;
    for (const auto& c : schedule.chains) {
        if (hist.size() <= c.size()) hist.resize(c.size() + 1, 0);
        ++hist[c.size()];
    }
    return hist;
}

} // namespace tripsim
