// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
// Criterion 11 needs the public Cologne trace; point TRIPSIM_COLOGNE_TRACE at
// it (whitespace-separated "t id x y speed") to run it.

#include "oracles.hpp"
#include "scenarios.hpp"

#include "tripsim/affinity.hpp"
#include "tripsim/carshare.hpp"
#include "tripsim/cli.hpp"
#include "tripsim/matching.hpp"
#include "tripsim/similarity.hpp"
#include "tripsim/stats.hpp"
#include "tripsim/trace.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace tripsim;
namespace fs = std::filesystem;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status = Status::pass;
    std::string detail;
};

Outcome fail_with(std::string detail) { return {Status::fail, std::move(detail)}; }
Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

struct Criterion {
    int id;
    const char* title;
    double budget_s; // 0 = no runtime bound
    std::function<Outcome()> run;
    // Set when the criterion cannot hold bit-for-bit in binary64; the reason
    // is printed next to a failure.
    const char* limitation = nullptr;
};

// ---------------------------------------------------------------------------

Outcome wgm_closed_form() {
    const WgmWeights w{0.6, 0.4};
    const ScaledPoint p{0.3, 0.7, 0.2};
    const double same = psim(p, p, w, TimeMode::absolute, PointRole::interior);
    const double half = psim({0, 0, 0}, {1, 0, 1}, w, TimeMode::absolute, PointRole::interior);
    const double quarter = psim({0, 0, 0.5}, {3, 0, 0.9}, WgmWeights{1.0, 0.0}, TimeMode::absolute, PointRole::interior);

    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0), scale(0.01, 100.0);
    std::size_t disagreements = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const ScaledPoint a{u(rng), u(rng), u(rng)};
        const ScaledPoint b{u(rng), u(rng), u(rng)};
        const ScaledPoint c{u(rng), u(rng), u(rng)};
        const WgmWeights base{u(rng) + 0.01, u(rng) + 0.01};
        const double k = scale(rng);
        const WgmWeights scaled{base.space * k, base.time * k};
        const bool pick_b = psim(a, b, base) >= psim(a, c, base);
        const bool pick_b_scaled = psim(a, b, scaled) >= psim(a, c, scaled);
        if (pick_b != pick_b_scaled) ++disagreements;
    }
    const bool ok = same == 1.0 && std::abs(half - 0.5) <= 1e-12 && std::abs(quarter - 0.25) <= 1e-12 &&
                    disagreements == 0;
    return verdict(ok, fmt::format("identical={} d=t=1 -> {:.15f} w=(1,0),d=3 -> {:.15f}; argmax flips {}/1000",
                                   same, half, quarter, disagreements));
}

Outcome linearity() {
    std::mt19937_64 rng(102);
    std::string detail;
    bool ok = true;
    for (std::size_t n : {2, 50, 500}) {
        const auto a = oracle::random_sequence(rng, n);
        const auto b = oracle::random_sequence(rng, n);
        instrumentation::reset();
        wgm_sim(a, b, WgmWeights{0.6, 0.4});
        const auto calls = instrumentation::psim_calls();
        ok = ok && calls == n;
        detail += fmt::format("wgm n={} calls={}; ", n, calls);
    }
    for (auto [m, n] : {std::pair<std::size_t, std::size_t>{2, 2}, {50, 50}, {500, 500}, {7, 31}}) {
        const auto a = oracle::random_sequence(rng, m);
        const auto b = oracle::random_sequence(rng, n);
        std::uint64_t cells[4];
        instrumentation::reset();
        lcss(a, b, MetricParams{});
        cells[0] = instrumentation::dp_cells();
        instrumentation::reset();
        dtw(a, b, DtwCost::distance);
        cells[1] = instrumentation::dp_cells();
        instrumentation::reset();
        dtw(a, b, DtwCost::distance_times_time);
        cells[2] = instrumentation::dp_cells();
        instrumentation::reset();
        frechet_discrete(a, b);
        cells[3] = instrumentation::dp_cells();
        for (auto c : cells) ok = ok && c == m * n;
        detail += fmt::format("{}x{} cells={}/{}/{}/{}; ", m, n, cells[0], cells[1], cells[2], cells[3]);
    }
    return verdict(ok, detail);
}

Outcome metric_oracles() {
    std::mt19937_64 rng(103);
    std::uniform_int_distribution<std::size_t> len(1, 8);
    const MetricParams params{0.3, 0.25, DtwCost::distance};
    std::size_t lcss_bad = 0;
    double dtw_err = 0.0, dtwt_err = 0.0, fr_err = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto a = oracle::random_sequence(rng, len(rng));
        const auto b = oracle::random_sequence(rng, len(rng));
        if (lcss(a, b, params) != oracle::lcss(a, b, params.lcss_eps_space, params.lcss_eps_time)) ++lcss_bad;
        dtw_err = std::max(dtw_err, std::abs(dtw(a, b, DtwCost::distance) - oracle::dtw(a, b, false)));
        dtwt_err = std::max(dtwt_err, std::abs(dtw(a, b, DtwCost::distance_times_time) - oracle::dtw(a, b, true)));
        fr_err = std::max(fr_err, std::abs(frechet_discrete(a, b) - oracle::frechet(a, b)));
    }
    const bool ok = lcss_bad == 0 && dtw_err <= 1e-12 && dtwt_err <= 1e-12 && fr_err <= 1e-12;
    return verdict(ok, fmt::format("500 pairs: lcss mismatches {}, max |err| dtw {:.1e} dtw_time {:.1e} frechet {:.1e}",
                                   lcss_bad, dtw_err, dtwt_err, fr_err));
}

Outcome greedy_oracle() {
    std::size_t checked = 0, wrong = 0, moved = 0;
    const Metric metrics[] = {Metric::wgm, Metric::wgm_time, Metric::lcss, Metric::dtw, Metric::dtw_time,
                              Metric::frechet};
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto pop = scenarios::nearby_population(1000 + seed, 20, 50);
        std::vector<Trip> all = pop.requests;
        all.insert(all.end(), pop.rides.begin(), pop.rides.end());
        const auto ctx = ScaleContext::from_trips(all);
        const auto req = prepare_trips(pop.requests, ctx, Representation::od);
        const auto rides = prepare_trips(pop.rides, ctx, Representation::od);
        MatchScenario s;
        s.mode = seed % 2 ? MatchMode::car : MatchMode::carpool;
        s.metric = metrics[seed % 6];
        s.metric_params = MetricParams::from_thresholds(s.dist_threshold, s.time_threshold, ctx);
        const auto report = greedy_match(req, rides, s);
        for (std::size_t i = 0; i < req.size(); ++i) {
            ++checked;
            if (report.rows[i].ride_id != oracle::exhaustive_choice(req[i], rides, s)) ++wrong;
        }
        auto shuffled = req;
        std::mt19937_64 rng(seed);
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto again = greedy_match(shuffled, rides, s);
        for (const auto& row : again.rows) {
            const auto it = std::find_if(report.rows.begin(), report.rows.end(),
                                         [&](const MatchRow& r) { return r.request_id == row.request_id; });
            if (it->ride_id != row.ride_id) ++moved;
        }
    }
    return verdict(wrong == 0 && moved == 0,
                   fmt::format("100 scenarios x 20 requests: {} choices, {} differ from oracle, {} change under "
                               "permutation",
                               checked, wrong, moved));
}

Outcome savings() {
    const TravelTotals car{8633.831, 4356.368, 5235.319, 1017.665, 1045.912};
    const TravelTotals cp{8633.831, 5486.785, 4938.073, 948.438, 1019.560};
    const double s_car = 100.0 * savings_accounting(car, MatchMode::car);
    const double s_cp = 100.0 * savings_accounting(cp, MatchMode::carpool);
    const bool ok = std::abs(s_car - 40.3) <= 0.1 && std::abs(s_cp - 25.0) <= 0.1;
    return verdict(ok, fmt::format("CaR {:.3f}% (want 40.3 +-0.1), CP {:.3f}% (want 25 +-0.1)", s_car, s_cp));
}

struct RandomDag {
    TripDag dag;
    std::vector<oracle::Edge> edges;
};

RandomDag random_dag(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> size(1, 8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RandomDag r;
    r.dag.n = size(rng);
    std::vector<std::size_t> order(r.dag.n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t a = 0; a < r.dag.n; ++a) {
        for (std::size_t b = a + 1; b < r.dag.n; ++b) {
            if (u(rng) >= 0.35) continue;
            const double w = u(rng);
            r.dag.edges.push_back({order[a], order[b], w});
            r.edges.push_back({order[a], order[b], w});
        }
    }
    return r;
}

Outcome path_cover() {
    std::mt19937_64 rng(106);
    std::size_t wrong_count = 0, wrong_weight = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto r = random_dag(rng);
        const auto m = max_card_max_weight_matching(dag_to_bipartite(r.dag));
        const auto s = extract_chains(r.dag, m);
        const auto best = oracle::brute_force_path_partition(r.dag.n, r.edges);
        if (s.n_cars != best.paths) ++wrong_count;
        if (std::abs(m.weight - best.weight) > 1e-9 * std::max(1.0, best.weight)) ++wrong_weight;
    }
    return verdict(wrong_count == 0 && wrong_weight == 0,
                   fmt::format("1000 DAGs (n<=8): chain count off {}, weight off {}", wrong_count, wrong_weight));
}

Outcome cars_identity() {
    std::mt19937_64 rng(107);
    std::size_t instances = 0, violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto r = random_dag(rng);
        const auto m = max_card_max_weight_matching(dag_to_bipartite(r.dag));
        const auto s = extract_chains(r.dag, m);
        ++instances;
        if (s.n_cars != r.dag.n - m.cardinality()) ++violations;
    }
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthConfig cfg;
        cfg.n_trips = 300;
        cfg.waypoints = 5;
        cfg.seed = seed;
        const auto trips = generate_synthetic(cfg);
        const auto dag = build_trip_dag(trips, ScaleContext::from_trips(trips), DagOptions{});
        const auto m = max_card_max_weight_matching(dag_to_bipartite(dag));
        const auto s = extract_chains(dag, m);
        ++instances;
        if (s.n_cars != trips.size() - m.cardinality()) ++violations;
    }

    // 2000 trips as 149 singletons plus 408 chains of 4 and 73 chains of 3,
    // on shuffled node labels with random weights.
    std::vector<std::size_t> label(2000);
    std::iota(label.begin(), label.end(), 0);
    std::shuffle(label.begin(), label.end(), rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TripDag dag;
    dag.n = 2000;
    std::size_t next = 149;
    for (int c = 0; c < 481; ++c) {
        const std::size_t len = c < 408 ? 4 : 3;
        for (std::size_t i = 1; i < len; ++i) dag.edges.push_back({label[next + i - 1], label[next + i], u(rng)});
        next += len;
    }
    const auto m = max_card_max_weight_matching(dag_to_bipartite(dag));
    const auto s = extract_chains(dag, m);
    ++instances;
    if (s.n_cars != dag.n - m.cardinality()) ++violations;
    const bool spot = m.cardinality() == 1370 && s.n_cars == 630 && s.singleton_count == 149;
    return verdict(violations == 0 && spot && next == 2000,
                   fmt::format("{} instances, {} violations; 2000-node fixture: cardinality {}, cars {}, singletons {}",
                               instances, violations, m.cardinality(), s.n_cars, s.singleton_count));
}

std::vector<Trip> planted_trips(bool temporal_only, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> spread(0.0, 250.0), start(0.0, 120.0);
    std::vector<Trip> trips;
    for (int g = 0; g < 2; ++g) {
        for (int i = 0; i < 100; ++i) {
            const double ox = temporal_only ? 10000.0 : (g == 0 ? 4000.0 : 24000.0);
            const double t0 = 28800.0 + (temporal_only && g == 1 ? 2400.0 : 0.0) + 600.0 + start(rng);
            trips.push_back(scenarios::straight_trip(scenarios::numbered(g ? "b" : "a", i), ox + spread(rng),
                                                     10000.0 + spread(rng), t0, ox + 5000.0 + spread(rng),
                                                     16000.0 + spread(rng), t0 + 900.0 + std::abs(start(rng))));
        }
    }
    return trips;
}

Outcome planted_clusters() {
    std::string detail;
    bool ok = true;
    for (bool temporal : {false, true}) {
        const auto trips = planted_trips(temporal, 108);
        const auto ctx = ScaleContext::from_trips(trips);
        std::vector<ScaledTrip> st;
        for (const auto& t : trips) st.push_back(represent(t, ctx, Representation::od));
        const auto a = build_affinity(st, wgm_scorer(WgmWeights{0.6, 0.4}));
        ClusterOptions opts;
        opts.seed = 8;
        const auto labels = spectral_cluster(a.values, 2, opts);
        std::vector<int> truth(trips.size());
        for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = i < 100 ? 0 : 1;
        const double ari = adjusted_rand_index(labels, truth);
        ok = ok && ari == 1.0;
        detail += fmt::format("{} offset: ARI {:.6f}; ", temporal ? "temporal (same geometry)" : "spatial", ari);
    }
    return verdict(ok, "n=200 k=2 " + detail);
}

Outcome symmetric_decomposition() {
    std::mt19937_64 rng(109);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t mismatched = 0;
    double max_err = 0.0, worst_rel = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(100, 100, [&]() { return u(rng); });
        const auto d = sym_decompose(a);
        const Eigen::MatrixXd back = d.symmetric + d.antisymmetric;
        mismatched += static_cast<std::size_t>((back.array() != a.array()).count());
        max_err = std::max(max_err, (back - a).cwiseAbs().maxCoeff());
        const double lhs = a.squaredNorm();
        const double rhs = d.symmetric.squaredNorm() + d.antisymmetric.squaredNorm();
        worst_rel = std::max(worst_rel, std::abs(lhs - rhs) / lhs);
    }
    Eigen::Matrix3d sym;
    sym << 1, 2, 3, 2, 5, 6, 3, 6, 9;
    Eigen::Matrix3d anti;
    anti << 0, 1, -2, -1, 0, 3, 2, -3, 0;
    const double r_sym = sym_decompose(sym).ratio;
    const double r_anti = sym_decompose(anti).ratio;
    const bool ok = mismatched == 0 && worst_rel <= 1e-9 && r_sym == 1.0 && r_anti == 0.0;
    return verdict(ok, fmt::format("10 random 100x100: A != S+K bitwise in {}/100000 entries (max |err| {:.1e}); "
                                   "Frobenius rel err {:.1e}; ratio sym {} anti {}",
                                   mismatched, max_err, worst_rel, r_sym, r_anti));
}

Outcome distribution_fits() {
    std::mt19937_64 rng(110);
    std::vector<double> ln(10000), ga(10000), ex(10000);
    std::lognormal_distribution<double> dln(1.0, 0.5);
    std::gamma_distribution<double> dga(2.0, 300.0);
    std::exponential_distribution<double> dex(1.0 / 250.0);
    for (auto& x : ln) x = dln(rng);
    for (auto& x : ga) x = dga(rng);
    for (auto& x : ex) x = dex(rng);
    const auto fl = fit_lognormal(ln);
    const auto fg = fit_gamma(ga);
    const auto fe = fit_gamma(ex);
    const auto cross = fit_lognormal(ga);
    const bool ok = std::abs(fl.first - 1.0) <= 0.02 && std::abs(fl.second - 0.5) <= 0.02 &&
                    std::abs(fg.first - 2.0) <= 0.1 && fe.first >= 0.93 && fe.first <= 1.07 &&
                    fg.log_likelihood >= cross.log_likelihood;
    return verdict(ok, fmt::format("lognormal mu {:.4f} sigma {:.4f}; gamma k {:.4f} theta {:.1f}; exponential k {:.4f}; "
                                   "gamma data loglik gamma {:.1f} >= lognormal {:.1f}",
                                   fl.first, fl.second, fg.first, fg.second, fe.first, fg.log_likelihood,
                                   cross.log_likelihood));
}

Outcome cologne() {
    const char* path = std::getenv("TRIPSIM_COLOGNE_TRACE");
    if (!path || !*path) return {Status::skip, "set TRIPSIM_COLOGNE_TRACE to the public Cologne trace to run"};
    const auto parsed = parse_trace_file(path);
    const auto trips = build_trips(parsed.records, TimeWindow(28800.0, 32400.0));
    if (trips.size() < 12000) return fail_with(fmt::format("window holds {} trips, need 12000", trips.size()));

    // Seeded split: 2000 riders and 10000 rides.
    std::vector<std::size_t> idx(trips.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(20190101);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<Trip> riders, rides;
    for (std::size_t i = 0; i < 2000; ++i) riders.push_back(trips[idx[i]]);
    for (std::size_t i = 2000; i < 12000; ++i) rides.push_back(trips[idx[i]]);

    const auto dag = build_trip_dag(riders, ScaleContext::from_trips(riders), DagOptions{});
    const auto m = max_card_max_weight_matching(dag_to_bipartite(dag));
    const auto s = extract_chains(dag, m);

    std::vector<Trip> all = riders;
    all.insert(all.end(), rides.begin(), rides.end());
    const auto ctx = ScaleContext::from_trips(all);
    const auto report = greedy_match(prepare_trips(riders, ctx, Representation::od),
                                      prepare_trips(rides, ctx, Representation::od), MatchScenario{});
    const double mean_chain = s.mean_multi_chain_length();
    const bool ok = dag.edges.size() == 38730 && m.cardinality() == 1370 && std::abs(mean_chain - 3.88) <= 0.05 &&
                    std::abs(report.match_travels_km - 4356.368) <= 0.05 * 4356.368;
    return verdict(ok, fmt::format("edges {} (38730), cardinality {} (1370), mean chain {:.3f} (3.88+-0.05), "
                                   "match travels {:.3f} km (4356.368+-5%)",
                                   dag.edges.size(), m.cardinality(), mean_chain, report.match_travels_km));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome reproducibility() {
    const auto root = fs::temp_directory_path() / "tripsim-acceptance";
    fs::remove_all(root);
    std::ostringstream sink;
    auto run = [&](std::vector<std::string> args) { return cli::run(args, sink, sink); };
    if (run({"synth", "--n", "240", "--waypoints", "10", "--seed", "12", "--out", root.string()}) != 0) {
        return fail_with("synth failed: " + sink.str());
    }
    const auto trips = (root / "trips.jsonl").string();
    const std::vector<std::vector<std::string>> pipelines{
        {"stats", "--trips", trips, "--count-grid", "30"},
        {"affinity", "--trips", trips},
        {"cluster", "--trips", trips, "--k", "4"},
        {"match", "--trips", trips, "--n-requests", "40", "--dist-threshold", "3000"},
        {"compare", "--trips", trips, "--n-requests", "40", "--points", "10", "--dist-threshold", "3000"},
        {"carshare", "--trips", trips},
    };
    std::size_t files = 0, differing = 0;
    for (auto args : pipelines) {
        const auto first = root / (args[0] + "-a");
        const auto second = root / (args[0] + "-b");
        args.insert(args.end(), {"--out", first.string()});
        if (run(args) != 0) return fail_with(args[0] + " failed: " + sink.str());
        if (run({"--manifest", (first / "run_manifest.json").string(), "--out", second.string()}) != 0) {
            return fail_with(args[0] + " re-run failed: " + sink.str());
        }
        for (const auto& entry : fs::directory_iterator(first)) {
            if (entry.path().extension() != ".csv") continue;
            ++files;
            if (slurp(entry.path()) != slurp(second / entry.path().filename())) ++differing;
        }
    }
    fs::remove_all(root);
    return verdict(files > 0 && differing == 0,
                   fmt::format("6 pipelines re-run from run_manifest.json: {} csv files, {} differ", files, differing));
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "WGM closed form", 1.0, wgm_closed_form},
        {2, "linear WGM, m*n DP cells", 0.0, linearity},
        {3, "metric oracles", 10.0, metric_oracles},
        {4, "greedy matching oracle", 0.0, greedy_oracle},
        {5, "savings arithmetic", 0.0, savings},
        {6, "path-cover optimality", 60.0, path_cover},
        {7, "n_cars = n - cardinality", 0.0, cars_identity},
        {8, "planted-partition clustering", 0.0, planted_clusters},
        {9, "symmetric decomposition", 0.0, symmetric_decomposition,
         "binary64 cannot represent (a+b)/2 and (a-b)/2 exactly for every pair, so S+K may differ from A by "
         "one rounding"},
        {10, "distribution fitting", 0.0, distribution_fits},
        {11, "Cologne 8-9am figures", 0.0, cologne},
        {12, "manifest reproducibility", 0.0, reproducibility},
    };
    int unexplained = 0, failed = 0, passed = 0, skipped = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = fail_with(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0.0 && secs > c.budget_s && o.status == Status::pass) {
            o = fail_with(fmt::format("{} (over the {:.0f} s budget)", o.detail, c.budget_s));
        }
        const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::skip ? "SKIP" : "FAIL";
        std::cout << fmt::format("{} {:>2} {}: {} [{:.2f} s]", tag, c.id, c.title, o.detail, secs);
        if (o.status == Status::fail && c.limitation) std::cout << " -- known limitation: " << c.limitation;
        std::cout << "\n";
        if (o.status == Status::pass) ++passed;
        if (o.status == Status::skip) ++skipped;
        if (o.status == Status::fail) {
            ++failed;
            if (!c.limitation) ++unexplained;
        }
    }
    std::cout << fmt::format("{} passed, {} failed ({} documented limitation), {} skipped\n", passed, failed,
                             failed - unexplained, skipped);
    return unexplained == 0 ? 0 : 1;
}
