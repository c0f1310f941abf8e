#include "tripsim/cli.hpp"

#include "tripsim/affinity.hpp"
#include "tripsim/carshare.hpp"
#include "tripsim/error.hpp"
#include "tripsim/matching.hpp"
#include "tripsim/stats.hpp"
#include "tripsim/trace.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

namespace tripsim::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr std::uint64_t default_seed = 20190101;
constexpr const char* out_env = "TRIPSIM_OUT";
constexpr const char* default_out = "tripsim-out";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// formatting

std::string km(double meters) { return fmt::format("{:.3f}", meters / 1000.0 + 0.0); }
std::string secs(double s) { return fmt::format("{}", std::llround(s)); }
std::string real(double v) { return fmt::format("{:.6f}", v + 0.0); }

double round_to(double v, int digits) {
    const double f = std::pow(10.0, digits);
    return std::round(v * f) / f + 0.0;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        T v{};
        auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc{} || p != item.data() + item.size()) {
            throw UsageError("bad list element '" + item + "' in '" + text + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("empty list");
    return out;
}

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
CLI::Validator list_of() {
    return CLI::Validator(
        [](std::string& v) -> std::string {
            try {
                parse_list<T>(v);
            } catch (const UsageError& e) {
                return e.what();
            }
            return {};
        },
        "LIST");
}

// ---------------------------------------------------------------------------
// files

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in.read(buf.data(), static_cast<std::streamsize>(buf.size())) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::vector<std::pair<std::string, std::string>> read_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::io, "cannot read config " + path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw UsageError(fmt::format("{}:{}: expected key = value", path.string(), lineno));
        }
        auto key = trim(std::string_view(s).substr(0, eq));
        auto value = trim(std::string_view(s).substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
            value = value.substr(1, value.size() - 2);
        }
        if (key.empty()) throw UsageError(fmt::format("{}:{}: empty key", path.string(), lineno));
        std::replace(key.begin(), key.end(), '_', '-');
        out.emplace_back(key, value);
    }
    return out;
}

class Output {
public:
    explicit Output(fs::path root) : root_(std::move(root)) {
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec) fail(ErrorCategory::io, "cannot create " + root_.string() + ": " + ec.message());
    }

    const fs::path& root() const { return root_; }

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(root_ / name, std::ios::binary);
        f << content;
        if (!f) fail(ErrorCategory::io, "cannot write " + (root_ / name).string());
        files_.push_back(name);
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path root_;
    std::vector<std::string> files_;
};

// ---------------------------------------------------------------------------
// arguments

struct Args {
    std::string out;
    std::uint64_t seed = default_seed;

    std::string trace;
    std::string format = "t id x y speed";
    double window_start = 28800.0;
    double window_end = 32400.0;

    std::size_t n = 1000;
    std::size_t waypoints = 50;
    double duration_shape = 2.0;
    double duration_scale = 300.0;
    double displacement_mu = 8.0;
    double displacement_sigma = 0.6;
    double x_min = 0.0, x_max = 30000.0, y_min = 0.0, y_max = 30000.0;

    std::string trips, requests, rides;
    std::size_t n_requests = 0;
    std::size_t n_rides = 0;

    double w_space = 0.6;
    double w_time = 0.4;
    std::string repr = "od";
    std::string compare_repr = "sampled";
    std::size_t points = 50;

    double dist_threshold = 1800.0;
    double time_threshold = 900.0;
    std::string mode = "car";
    std::string metric = "wgm";
    std::string curve_axis = "distance";
    std::string curve_thresholds = "300,600,900,1200,1500,1800,2100,2400,2700,3000";
    std::string curve_min_matches = "1,2,5,10";
    std::string metrics = "wgm,lcss,frechet,dtw,dtw_time,wgm_time";
    std::string weight_sweep = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";

    std::string affinity_score = "car";
    std::string cluster_score = "wgm";
    bool symmetricize = false;
    double kernel_gamma = 0.0;
    int k = 8;
    int restarts = 10;

    std::size_t count_grid = 300;
    std::size_t duration_grid = 10;

    std::string edge_weight = "endpoints";
};

const std::vector<std::string> repr_names{"od", "sampled"};
const std::vector<std::string> metric_names{"wgm", "wgm_time", "lcss", "dtw", "dtw_time", "frechet"};
const std::vector<std::string> mode_names{"car", "carpool", "cp"};
const std::vector<std::string> score_names{"wgm", "car", "cp"};

// Options whose values are paths; recorded absolute in the manifest.
const std::vector<std::string> path_options{"out", "trace", "trips", "requests", "rides"};
// Options naming files that are read; their digests go into the manifest.
const std::vector<std::string> input_options{"trace", "trips", "requests", "rides"};

void add_out(CLI::App* sub, Args& a) {
    sub->add_option("--out", a.out, "Output directory (default: $TRIPSIM_OUT, else ./tripsim-out)");
}

void add_seed(CLI::App* sub, Args& a) { sub->add_option("--seed", a.seed, "Seed for all randomness"); }

void add_weights(CLI::App* sub, Args& a) {
    sub->add_option("--w-space", a.w_space, "WGM spatial weight")->check(CLI::NonNegativeNumber);
    sub->add_option("--w-time", a.w_time, "WGM temporal weight")->check(CLI::NonNegativeNumber);
}

void add_repr(CLI::App* sub, std::string& target, Args& a) {
    sub->add_option("--repr", target, "Trip representation")->check(CLI::IsMember(repr_names));
    sub->add_option("--points", a.points, "Waypoints in the sampled representation")->check(CLI::Range(2, 100000));
}

void add_trips(CLI::App* sub, Args& a) {
    sub->add_option("--trips", a.trips, "Trip set (JSONL)")->required()->check(CLI::ExistingFile);
}

void add_thresholds(CLI::App* sub, Args& a) {
    sub->add_option("--dist-threshold", a.dist_threshold, "Distance threshold (m)")->check(CLI::PositiveNumber);
    sub->add_option("--time-threshold", a.time_threshold, "Time threshold (s)")->check(CLI::PositiveNumber);
}

void add_match_inputs(CLI::App* sub, Args& a) {
    auto* trips = sub->add_option("--trips", a.trips, "Trip set split into requests and rides")
                      ->check(CLI::ExistingFile);
    auto* req = sub->add_option("--requests", a.requests, "Request trips (JSONL)")->check(CLI::ExistingFile);
    auto* rides = sub->add_option("--rides", a.rides, "Ride trips (JSONL)")->check(CLI::ExistingFile);
    trips->excludes(req)->excludes(rides);
    sub->add_option("--n-requests", a.n_requests, "Requests drawn by the seeded split (default n/6)");
    sub->add_option("--n-rides", a.n_rides, "Cap on rides after the split (default: all the rest)");
    add_seed(sub, a);
    sub->add_option("--mode", a.mode, "Scenario")->check(CLI::IsMember(mode_names));
    add_thresholds(sub, a);
    add_weights(sub, a);
}

// ---------------------------------------------------------------------------
// run state

struct Run {
    std::string subcommand;
    json options = json::object();
    json inputs = json::array();
    std::unique_ptr<Output> out;
    json summary = json::object();

    void record_input(const std::string& option, const std::string& path) {
        inputs.push_back({{"option", option},
                          {"path", fs::absolute(path).lexically_normal().string()},
                          {"sha256", sha256_file(path)}});
    }
};

WgmWeights weights(const Args& a) {
    WgmWeights w{a.w_space, a.w_time};
    w.validate();
    return w;
}

Representation representation(const std::string& name) {
    return name == "od" ? Representation::od : Representation::sampled;
}

struct Population {
    std::vector<Trip> requests;
    std::vector<Trip> rides;
    bool split = false;
};

Population load_population(const Args& a, Run& run) {
    Population p;
    if (!a.trips.empty()) {
        auto all = load_trips(a.trips);
        run.record_input("trips", a.trips);
        if (all.size() < 2) fail(ErrorCategory::invalid_argument, "need at least two trips to split");
        std::size_t n_req = a.n_requests ? a.n_requests : std::max<std::size_t>(1, all.size() / 6);
        if (n_req >= all.size()) fail(ErrorCategory::invalid_argument, "--n-requests leaves no rides");
        std::vector<std::size_t> idx(all.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::mt19937_64 rng(a.seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<std::size_t> req(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_req));
        std::vector<std::size_t> rides(idx.begin() + static_cast<std::ptrdiff_t>(n_req), idx.end());
        if (a.n_rides && a.n_rides < rides.size()) rides.resize(a.n_rides);
        std::sort(req.begin(), req.end());
        std::sort(rides.begin(), rides.end());
        for (auto i : req) p.requests.push_back(all[i]);
        for (auto i : rides) p.rides.push_back(all[i]);
        p.split = true;
    } else if (!a.requests.empty() && !a.rides.empty()) {
        p.requests = load_trips(a.requests);
        run.record_input("requests", a.requests);
        p.rides = load_trips(a.rides);
        run.record_input("rides", a.rides);
    } else {
        throw UsageError("give --trips, or both --requests and --rides");
    }
    return p;
}

ScaleContext joint_bounds(const Population& p) {
    std::vector<Trip> all = p.requests;
    all.insert(all.end(), p.rides.begin(), p.rides.end());
    if (all.empty()) fail(ErrorCategory::degenerate_input, "no trips");
    return ScaleContext::from_trips(all);
}

MatchScenario scenario(const Args& a) {
    MatchScenario s;
    s.mode = parse_match_mode(a.mode);
    s.dist_threshold = a.dist_threshold;
    s.time_threshold = a.time_threshold;
    s.weights = weights(a);
    s.metric = parse_metric(a.metric);
    s.validate();
    return s;
}

std::string split_csv(const Population& p) {
    std::string s = "trip_id,role\n";
    for (const auto& t : p.requests) s += t.id() + ",request\n";
    for (const auto& t : p.rides) s += t.id() + ",ride\n";
    return s;
}

std::string matches_csv(const MatchReport& r) {
    std::string s = "request_id,ride_id,oo_dist_km,dd_dist_km,oo_time_s,dd_time_s,score\n";
    for (const auto& row : r.rows) {
        if (!row.ride_id) {
            s += row.request_id + ",,,,,,\n";
            continue;
        }
        s += fmt::format("{},{},{},{},{},{},{:.9g}\n", row.request_id, *row.ride_id, km(row.oo_dist_m),
                         km(row.dd_dist_m), secs(row.oo_time_s), secs(row.dd_time_s), row.score);
    }
    return s;
}

json report_json(const MatchReport& r, const MatchScenario& s, std::size_t n_rides) {
    json j;
    j["scenario"] = std::string(to_string(r.mode));
    j["metric"] = std::string(to_string(r.metric));
    j["dist threshold (m)"] = s.dist_threshold;
    j["time threshold (sec)"] = s.time_threshold;
    j["# requests"] = r.n_requests;
    j["# rides"] = n_rides;
    j["match travels (km)"] = round_to(r.match_travels_km, 3);
    j["req travels (km)"] = round_to(r.req_travels_km, 3);
    j["match to total travel ratio"] = round_to(100.0 * r.match_to_total_ratio, 2);
    j["origin-origin distance (km)"] = round_to(r.oo_dist_km, 3);
    j["dest-dest distance (km)"] = round_to(r.dd_dist_km, 3);
    j["origin-origin times (sec)"] = std::llround(r.oo_time_s);
    j["dest-dest times (sec)"] = std::llround(r.dd_time_s);
    j["# req with at least a match"] = r.n_matched;
    j["req travels for least a match (km)"] = round_to(r.req_travels_matched_km, 3);
    j["match to total travel ratio (at least a match)"] = round_to(100.0 * r.ratio_at_least_a_match, 2);
    j["savings (%)"] = round_to(r.savings_pct, 2);
    j["match travels, distinct rides (km)"] = round_to(r.match_travels_distinct_km, 3);
    j["n_matched"] = r.n_matched;
    return j;
}

// ---------------------------------------------------------------------------
// subcommands

void do_ingest(const Args& a, Run& run) {
    const TraceFormat format(a.format);
    const auto parsed = parse_trace_file(a.trace, format);
    run.record_input("trace", a.trace);
    const auto trips = build_trips(parsed.records, TimeWindow(a.window_start, a.window_end));
    std::ostringstream os;
    write_trips_jsonl(os, trips);
    run.out->write("trips.jsonl", os.str());
    run.summary["records"] = parsed.records.size();
    run.summary["malformed"] = parsed.malformed;
    run.summary["trips"] = trips.size();
    // Records outside the window are dropped, so straddling trips are clipped.
    run.summary["window_policy"] = "clip";
}

void do_synth(const Args& a, Run& run) {
    SynthConfig cfg;
    cfg.n_trips = a.n;
    cfg.bbox = ScaleContext{a.x_min, a.x_max, a.y_min, a.y_max, a.window_start, a.window_end};
    cfg.duration_shape = a.duration_shape;
    cfg.duration_scale = a.duration_scale;
    cfg.displacement_mu = a.displacement_mu;
    cfg.displacement_sigma = a.displacement_sigma;
    cfg.waypoints = a.waypoints;
    cfg.seed = a.seed;
    const auto trips = generate_synthetic(cfg);
    std::ostringstream os;
    write_trips_jsonl(os, trips);
    run.out->write("trips.jsonl", os.str());
    run.summary["trips"] = trips.size();
}

std::string cdf_csv(const std::string& column, std::span<const double> values) {
    std::string s = column + ",probability\n";
    for (auto [v, p] : empirical_cdf(values)) s += fmt::format("{:.6f},{:.6f}\n", v + 0.0, p);
    return s;
}

void do_stats(const Args& a, Run& run) {
    const auto trips = load_trips(a.trips);
    run.record_input("trips", a.trips);
    if (trips.empty()) fail(ErrorCategory::degenerate_input, "no trips");
    std::vector<double> duration, distance, displacement, waypoints;
    for (const auto& t : trips) {
        duration.push_back(t.duration());
        distance.push_back(path_length(t) / 1000.0);
        displacement.push_back(od_displacement(t) / 1000.0);
        waypoints.push_back(static_cast<double>(t.size()));
    }

    std::string fits = "quantity,family,param1_name,param1,param2_name,param2,log_likelihood,n\n";
    json fit_summary = json::object();
    for (const auto& [name, values] : {std::pair{"duration_s", &duration}, std::pair{"distance_km", &distance}}) {
        std::vector<double> positive;
        std::copy_if(values->begin(), values->end(), std::back_inserter(positive), [](double v) { return v > 0.0; });
        const auto ln = fit_lognormal(positive);
        const auto ga = fit_gamma(positive);
        fits += fmt::format("{},lognormal,mu,{:.6f},sigma,{:.6f},{:.3f},{}\n", name, ln.first, ln.second,
                            ln.log_likelihood, ln.n);
        fits += fmt::format("{},gamma,shape,{:.6f},scale,{:.6f},{:.3f},{}\n", name, ga.first, ga.second,
                            ga.log_likelihood, ga.n);
        fit_summary[name] = ga.log_likelihood >= ln.log_likelihood ? "gamma" : "lognormal";
    }
    run.out->write("fits.csv", fits);

    std::string corr = "x,y,r\n";
    auto add_corr = [&](const char* xn, const std::vector<double>& xs, const char* yn, const std::vector<double>& ys) {
        std::string r = "NA";
        try {
            r = fmt::format("{:.6f}", pearson(xs, ys));
        } catch (const Error& e) {
            if (e.category() != ErrorCategory::undefined_correlation) throw;
        }
        corr += fmt::format("{},{},{}\n", xn, yn, r);
    };
    add_corr("waypoints", waypoints, "distance_km", distance);
    add_corr("duration_s", duration, "distance_km", distance);
    add_corr("waypoints", waypoints, "duration_s", duration);
    run.out->write("correlations.csv", corr);

    run.out->write("cdf_duration.csv", cdf_csv("duration_s", duration));
    run.out->write("cdf_distance.csv", cdf_csv("distance_km", distance));
    run.out->write("cdf_displacement.csv", cdf_csv("displacement_km", displacement));

    const auto ctx = ScaleContext::from_trips(trips);
    const auto counts = grid_unique_counts(trips, ctx, a.count_grid, a.count_grid);
    std::string gu = "row,col,trips\n";
    for (std::size_t r = 0; r < counts.rows; ++r) {
        for (std::size_t c = 0; c < counts.cols; ++c) gu += fmt::format("{},{},{}\n", r, c, counts.at(r, c));
    }
    run.out->write("grid_unique.csv", gu);

    const auto box = grid_duration_stats(trips, ctx, a.duration_grid, a.duration_grid);
    std::string gd = "row,col,n,min_s,q1_s,median_s,q3_s,max_s\n";
    for (std::size_t r = 0; r < box.rows; ++r) {
        for (std::size_t c = 0; c < box.cols; ++c) {
            const auto& b = box.at(r, c);
            if (b.empty()) {
                gd += fmt::format("{},{},0,,,,,\n", r, c);
            } else {
                gd += fmt::format("{},{},{},{},{},{},{},{}\n", r, c, b.n, secs(b.min), secs(b.q1), secs(b.median),
                                  secs(b.q3), secs(b.max));
            }
        }
    }
    run.out->write("grid_duration.csv", gd);
    run.summary["trips"] = trips.size();
    run.summary["better_fit"] = fit_summary;
}

Scorer scorer_for(const std::string& name, const WgmWeights& w) {
    if (name == "car") return car_scorer(w);
    if (name == "cp") return cp_scorer(w);
    return wgm_scorer(w);
}

std::vector<ScaledTrip> scaled(std::span<const Trip> trips, Representation repr, std::size_t points) {
    const auto ctx = ScaleContext::from_trips(trips);
    std::vector<ScaledTrip> out;
    out.reserve(trips.size());
    for (const auto& t : trips) out.push_back(represent(t, ctx, repr, points));
    return out;
}

void apply_kernel(Eigen::MatrixXd& m, double gamma) {
    if (gamma <= 0.0) return;
    m = m.unaryExpr([gamma](double s) { return laplacian_kernel(s, gamma); });
}

void do_affinity(const Args& a, Run& run) {
    const auto trips = load_trips(a.trips);
    run.record_input("trips", a.trips);
    const auto st = scaled(trips, representation(a.repr), a.points);
    auto aff = build_affinity(st, scorer_for(a.affinity_score, weights(a)), a.symmetricize);
    apply_kernel(aff.values, a.kernel_gamma);
    const auto d = sym_decompose(aff.values);

    std::string csv = "id";
    for (const auto& t : trips) csv += "," + t.id();
    csv += "\n";
    for (std::size_t i = 0; i < trips.size(); ++i) {
        csv += trips[i].id();
        for (std::size_t j = 0; j < trips.size(); ++j) {
            csv += "," + real(aff.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        csv += "\n";
    }
    run.out->write("affinity.csv", csv);
    json j;
    j["n"] = trips.size();
    j["score"] = a.affinity_score;
    j["symmetric_energy"] = d.symmetric.squaredNorm();
    j["antisymmetric_energy"] = d.antisymmetric.squaredNorm();
    j["symmetry_ratio"] = d.ratio;
    run.out->write_json("decomposition.json", j);
    run.summary["trips"] = trips.size();
    run.summary["symmetry_ratio"] = round_to(d.ratio, 6);
}

std::string coords_csv(std::span<const Trip> trips, const Eigen::MatrixXd& coords) {
    std::string s = "id,x,y\n";
    for (std::size_t i = 0; i < trips.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        s += fmt::format("{},{},{}\n", trips[i].id(), real(coords(r, 0)), real(coords(r, 1)));
    }
    return s;
}

void do_cluster(const Args& a, Run& run) {
    const auto trips = load_trips(a.trips);
    run.record_input("trips", a.trips);
    const auto st = scaled(trips, representation(a.repr), a.points);
    const auto sc = scorer_for(a.cluster_score, weights(a));
    auto aff = build_affinity(st, sc, !sc.symmetric);
    apply_kernel(aff.values, a.kernel_gamma);

    ClusterOptions opts;
    opts.seed = a.seed;
    opts.restarts = a.restarts;
    const auto labels = spectral_cluster(aff.values, a.k, opts);

    std::string lab = "id,cluster\n";
    for (std::size_t i = 0; i < trips.size(); ++i) lab += fmt::format("{},{}\n", trips[i].id(), labels[i]);
    run.out->write("labels.csv", lab);

    // PCA on the scaled OD features.
    const auto ctx = ScaleContext::from_trips(trips);
    Eigen::MatrixXd features(static_cast<Eigen::Index>(trips.size()), 6);
    for (std::size_t i = 0; i < trips.size(); ++i) {
        const auto o = scale(trips[i].origin(), ctx);
        const auto d = scale(trips[i].destination(), ctx);
        features.row(static_cast<Eigen::Index>(i)) << o.x, o.y, o.t, d.x, d.y, d.t;
    }
    const auto pca = pca_2d(features);
    run.out->write("coords_pca.csv", coords_csv(trips, pca.coords));

    Eigen::MatrixXd dist = (1.0 - aff.values.array()).matrix();
    dist.diagonal().setZero();
    dist = (dist + dist.transpose()) / 2.0;
    const auto mds = mds_2d(dist);
    run.out->write("coords_mds.csv", coords_csv(trips, mds.coords));

    std::string cs = "cluster,n";
    for (const char* f : {"start_x_km", "start_y_km", "start_t_s", "end_x_km", "end_y_km", "end_t_s"}) {
        cs += fmt::format(",{0}_mean,{0}_median,{0}_std", f);
    }
    cs += "\n";
    json sizes = json::array();
    for (const auto& c : cluster_summary(trips, labels)) {
        cs += fmt::format("{},{}", c.cluster, c.n);
        for (std::size_t f = 0; f < c.fields.size(); ++f) {
            const auto& m = c.fields[f];
            const bool time = f == 2 || f == 5;
            for (double v : {m.mean, m.median, m.stddev}) cs += "," + (time ? secs(v) : km(v));
        }
        cs += "\n";
        sizes.push_back(c.n);
    }
    run.out->write("cluster_summary.csv", cs);
    run.summary["trips"] = trips.size();
    run.summary["k"] = a.k;
    run.summary["cluster_sizes"] = sizes;
    run.summary["pca_explained"] = {round_to(pca.explained(0), 6), round_to(pca.explained(1), 6)};
}

void do_match(const Args& a, Run& run) {
    const auto pop = load_population(a, run);
    const auto s = scenario(a);
    const auto ctx = joint_bounds(pop);
    const auto req = prepare_trips(pop.requests, ctx, representation(a.repr), a.points);
    const auto rides = prepare_trips(pop.rides, ctx, representation(a.repr), a.points);
    const auto report = greedy_match(req, rides, s);
    run.out->write("matches.csv", matches_csv(report));
    run.out->write_json("report.json", report_json(report, s, rides.size()));

    const auto axis = a.curve_axis == "time" ? SweepAxis::time : SweepAxis::distance;
    const auto thresholds = parse_list<double>(a.curve_thresholds);
    const auto ls = parse_list<std::size_t>(a.curve_min_matches);
    std::string curve = "axis,threshold,min_matches,requests\n";
    for (const auto& p : match_counts_curve(req, rides, s, axis, thresholds, ls)) {
        curve += fmt::format("{},{},{},{}\n", a.curve_axis, p.threshold, p.min_matches, p.requests);
    }
    run.out->write("curve.csv", curve);
    if (pop.split) run.out->write("split.csv", split_csv(pop));
    run.summary["requests"] = report.n_requests;
    run.summary["rides"] = rides.size();
    run.summary["n_matched"] = report.n_matched;
    run.summary["savings_pct"] = round_to(report.savings_pct, 2);
}

void do_compare(const Args& a, Run& run) {
    const auto pop = load_population(a, run);
    auto s = scenario(a);
    const auto ctx = joint_bounds(pop);
    const auto repr = representation(a.compare_repr);
    const auto req = prepare_trips(pop.requests, ctx, repr, a.points);
    const auto rides = prepare_trips(pop.rides, ctx, repr, a.points);

    std::vector<Metric> metrics;
    for (const auto& name : split_names(a.metrics)) metrics.push_back(parse_metric(name));
    if (metrics.empty()) throw UsageError("--metrics is empty");
    const auto reports = compare_metrics(req, rides, metrics, s);

    std::vector<json> tables;
    for (std::size_t m = 0; m < reports.size(); ++m) {
        const auto name = std::string(to_string(metrics[m]));
        tables.push_back(report_json(reports[m], s, rides.size()));
        run.out->write_json("report_" + name + ".json", tables.back());
        run.out->write("matches_" + name + ".csv", matches_csv(reports[m]));
    }
    std::string table = "field";
    for (auto m : metrics) table += "," + std::string(to_string(m));
    table += "\n";
    for (const auto& [key, value] : tables.front().items()) {
        if (!value.is_number()) continue;
        table += key.find(',') == std::string::npos ? key : "\"" + key + "\"";
        for (const auto& t : tables) table += "," + t[key].dump();
        table += "\n";
    }
    run.out->write("comparison.csv", table);

    const auto wts = parse_list<double>(a.weight_sweep);
    for (double w : wts) {
        if (!(w >= 0.0 && w <= 1.0)) throw UsageError("--weight-sweep values must lie in [0, 1]");
    }
    std::string sweep = "time_weight,oo_dist_km,dd_dist_km,oo_time_s,dd_time_s\n";
    for (const auto& p : weight_sweep(req, rides, s, wts)) {
        sweep += fmt::format("{},{:.3f},{:.3f},{},{}\n", p.time_weight, p.oo_dist_km + 0.0, p.dd_dist_km + 0.0,
                             secs(p.oo_time_s), secs(p.dd_time_s));
    }
    run.out->write("weight_sweep.csv", sweep);
    if (pop.split) run.out->write("split.csv", split_csv(pop));
    run.summary["requests"] = req.size();
    run.summary["rides"] = rides.size();
    json matched = json::object();
    for (std::size_t m = 0; m < reports.size(); ++m) matched[std::string(to_string(metrics[m]))] = reports[m].n_matched;
    run.summary["n_matched"] = matched;
}

void do_carshare(const Args& a, Run& run) {
    const auto trips = load_trips(a.trips);
    run.record_input("trips", a.trips);
    if (trips.empty()) fail(ErrorCategory::degenerate_input, "no trips");
    DagOptions opts;
    opts.dist_threshold = a.dist_threshold;
    opts.time_threshold = a.time_threshold;
    opts.weights = weights(a);
    opts.edge_weight = a.edge_weight == "whole_trip" ? EdgeWeight::whole_trip : EdgeWeight::endpoints;
    const auto dag = build_trip_dag(trips, ScaleContext::from_trips(trips), opts);
    const auto matching = max_card_max_weight_matching(dag_to_bipartite(dag));
    const auto schedule = extract_chains(dag, matching);

    std::string chains = "chain_id,position,trip_id\n";
    for (std::size_t c = 0; c < schedule.chains.size(); ++c) {
        for (std::size_t p = 0; p < schedule.chains[c].size(); ++p) {
            chains += fmt::format("{},{},{}\n", c, p, trips[schedule.chains[c][p]].id());
        }
    }
    run.out->write("chains.csv", chains);

    std::string stats = "chain_id,length,travel_km,pickup_km,pickup_s\n";
    const auto cs = chain_stats(schedule, trips);
    for (std::size_t c = 0; c < cs.size(); ++c) {
        stats += fmt::format("{},{},{:.3f},{:.3f},{}\n", c, cs[c].length, cs[c].travel_km + 0.0,
                             cs[c].pickup_km + 0.0, secs(cs[c].pickup_s));
    }
    run.out->write("chain_stats.csv", stats);

    json j;
    j["n_trips"] = trips.size();
    j["n_edges"] = dag.edges.size();
    j["n_cars"] = schedule.n_cars;
    j["cardinality"] = schedule.cardinality;
    j["singleton_count"] = schedule.singleton_count;
    j["mean_chain_length"] = round_to(schedule.mean_chain_length(), 6);
    j["mean_multi_chain_length"] = round_to(schedule.mean_multi_chain_length(), 6);
    j["matching_weight"] = round_to(matching.weight, 6);
    j["chain_length_histogram"] = chain_length_histogram(schedule);
    run.out->write_json("schedule_summary.json", j);
    run.summary["trips"] = trips.size();
    run.summary["n_cars"] = schedule.n_cars;
    run.summary["cardinality"] = schedule.cardinality;
}

// ---------------------------------------------------------------------------
// driver

struct Command {
    CLI::App* app;
    void (*handler)(const Args&, Run&);
};

std::vector<Command> build_app(CLI::App& app, Args& a) {
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.set_help_all_flag("--help-all", "Help for every subcommand");
    app.footer("Global: --manifest FILE (first argument) re-runs a recorded run; "
               "--config FILE reads key = value defaults for the subcommand.");
    std::vector<Command> cmds;

    auto* ingest = app.add_subcommand("ingest", "Parse a trace and cut one time window into trips");
    ingest->add_option("--trace", a.trace, "Trace file")->required()->check(CLI::ExistingFile);
    ingest->add_option("--format", a.format, "Column layout");
    ingest->add_option("--window-start", a.window_start, "Window start (s)");
    ingest->add_option("--window-end", a.window_end, "Window end (s, exclusive)");
    add_out(ingest, a);
    cmds.push_back({ingest, do_ingest});

    auto* synth = app.add_subcommand("synth", "Generate a synthetic trip set");
    synth->add_option("--n", a.n, "Number of trips")->check(CLI::PositiveNumber);
    synth->add_option("--waypoints", a.waypoints, "Waypoints per trip")->check(CLI::Range(2, 100000));
    synth->add_option("--duration-shape", a.duration_shape)->check(CLI::PositiveNumber);
    synth->add_option("--duration-scale", a.duration_scale)->check(CLI::PositiveNumber);
    synth->add_option("--displacement-mu", a.displacement_mu);
    synth->add_option("--displacement-sigma", a.displacement_sigma)->check(CLI::PositiveNumber);
    synth->add_option("--x-min", a.x_min);
    synth->add_option("--x-max", a.x_max);
    synth->add_option("--y-min", a.y_min);
    synth->add_option("--y-max", a.y_max);
    synth->add_option("--window-start", a.window_start, "Window start (s)");
    synth->add_option("--window-end", a.window_end, "Window end (s)");
    add_seed(synth, a);
    add_out(synth, a);
    cmds.push_back({synth, do_synth});

    auto* stats = app.add_subcommand("stats", "Distribution fits, CDFs, correlations and grids");
    add_trips(stats, a);
    stats->add_option("--count-grid", a.count_grid, "Cells per side of the trip-count grid")->check(CLI::Range(1, 5000));
    stats->add_option("--duration-grid", a.duration_grid, "Cells per side of the duration grid")
        ->check(CLI::Range(1, 5000));
    add_out(stats, a);
    cmds.push_back({stats, do_stats});

    auto* affinity = app.add_subcommand("affinity", "Pairwise affinity matrix and its symmetric share");
    add_trips(affinity, a);
    affinity->add_option("--score", a.affinity_score, "Pairwise score")->check(CLI::IsMember(score_names));
    add_repr(affinity, a.repr, a);
    add_weights(affinity, a);
    affinity->add_flag("--symmetricize", a.symmetricize, "Return (A + A^T)/2");
    affinity->add_option("--kernel-gamma", a.kernel_gamma, "Laplacian kernel gamma; 0 disables")
        ->check(CLI::NonNegativeNumber);
    add_out(affinity, a);
    cmds.push_back({affinity, do_affinity});

    auto* cluster = app.add_subcommand("cluster", "Spectral clustering with PCA and MDS coordinates");
    add_trips(cluster, a);
    cluster->add_option("--k", a.k, "Number of clusters")->check(CLI::Range(2, 1000000));
    cluster->add_option("--score", a.cluster_score, "Pairwise score (asymmetric scores are symmetrized)")
        ->check(CLI::IsMember(score_names));
    add_repr(cluster, a.repr, a);
    add_weights(cluster, a);
    cluster->add_option("--kernel-gamma", a.kernel_gamma, "Laplacian kernel gamma; 0 disables")
        ->check(CLI::NonNegativeNumber);
    cluster->add_option("--restarts", a.restarts, "k-means restarts")->check(CLI::Range(1, 100));
    add_seed(cluster, a);
    add_out(cluster, a);
    cmds.push_back({cluster, do_cluster});

    auto* match = app.add_subcommand("match", "Greedy rider-to-ride matching");
    add_match_inputs(match, a);
    match->add_option("--metric", a.metric, "Matching criterion")->check(CLI::IsMember(metric_names));
    add_repr(match, a.repr, a);
    match->add_option("--curve-axis", a.curve_axis, "Threshold swept by curve.csv")
        ->check(CLI::IsMember({"distance", "time"}));
    match->add_option("--curve-thresholds", a.curve_thresholds, "Comma-separated thresholds")
        ->check(list_of<double>());
    match->add_option("--curve-min-matches", a.curve_min_matches, "Comma-separated L values")
        ->check(list_of<std::size_t>());
    add_out(match, a);
    cmds.push_back({match, do_match});

    auto* compare = app.add_subcommand("compare", "Matching under several metrics with one shared filter");
    add_match_inputs(compare, a);
    compare->add_option("--metrics", a.metrics, "Comma-separated metric names");
    add_repr(compare, a.compare_repr, a);
    compare->add_option("--weight-sweep", a.weight_sweep, "Comma-separated WGM temporal weights")
        ->check(list_of<double>());
    add_out(compare, a);
    cmds.push_back({compare, do_compare});

    auto* carshare = app.add_subcommand("carshare", "Fewest shared cars covering a trip set");
    add_trips(carshare, a);
    add_thresholds(carshare, a);
    add_weights(carshare, a);
    carshare->add_option("--edge-weight", a.edge_weight, "Edge weight between consecutive trips")
        ->check(CLI::IsMember({"endpoints", "whole_trip"}));
    add_out(carshare, a);
    cmds.push_back({carshare, do_carshare});
    return cmds;
}

std::string option_value(const CLI::Option* opt) {
    if (opt->count() > 0) return opt->results().back();
    return opt->get_default_str();
}

void error_line(std::ostream& out, std::string_view category, const std::string& message) {
    json j;
    j["status"] = "error";
    j["category"] = category;
    j["message"] = message;
    out << j.dump() << "\n";
}

std::vector<std::string> expand_manifest(std::vector<std::string> args) {
    std::string path;
    if (args[0] == "--manifest") {
        if (args.size() < 2) throw UsageError("--manifest needs a file");
        path = args[1];
        args.erase(args.begin(), args.begin() + 2);
    } else if (args[0].rfind("--manifest=", 0) == 0) {
        path = args[0].substr(11);
        args.erase(args.begin());
    } else {
        return args;
    }
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::io, "cannot read manifest " + path);
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCategory::format, "manifest " + path + ": " + e.what());
    }
    if (!m.contains("subcommand") || !m.contains("options")) {
        fail(ErrorCategory::format, "manifest " + path + " lacks subcommand or options");
    }
    for (const auto& input : m.value("inputs", json::array())) {
        const auto p = input.at("path").get<std::string>();
        if (sha256_file(p) != input.at("sha256").get<std::string>()) {
            fail(ErrorCategory::invalid_argument, "input changed since the manifest was written: " + p);
        }
    }
    std::vector<std::string> out{m.at("subcommand").get<std::string>()};
    for (const auto& [key, value] : m.at("options").items()) {
        const auto v = value.get<std::string>();
        if (!v.empty()) out.push_back("--" + key + "=" + v);
    }
    out.insert(out.end(), args.begin(), args.end());
    return out;
}

std::vector<std::string> expand_config(std::vector<std::string> args) {
    for (std::size_t i = 1; i < args.size(); ++i) {
        std::string path;
        std::size_t width = 1;
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file");
            path = args[i + 1];
            width = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            continue;
        }
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                   args.begin() + static_cast<std::ptrdiff_t>(i + width));
        std::vector<std::string> from_file;
        for (const auto& [key, value] : read_config(path)) from_file.push_back("--" + key + "=" + value);
        // File values go first so later command-line flags win.
        args.insert(args.begin() + 1, from_file.begin(), from_file.end());
        return args;
    }
    return args;
}

} // namespace

int run(const std::vector<std::string>& raw, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spatio-temporal trip similarity, ride matching and car-sharing tools", "tripsim"};
    Args a;
    const auto cmds = build_app(app, a);
    try {
        auto args = raw;
        if (args.empty()) throw UsageError("missing subcommand");
        args = expand_config(expand_manifest(std::move(args)));
        if (args[0].rfind("-", 0) != 0 && app.get_subcommand_no_throw(args[0]) == nullptr) {
            throw UsageError("unknown subcommand '" + args[0] + "'");
        }
        std::reverse(args.begin(), args.end());
        try {
            app.parse(args);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            throw UsageError(e.what());
        }

        const Command* cmd = nullptr;
        for (const auto& c : cmds) {
            if (c.app->parsed()) cmd = &c;
        }
        if (!cmd) throw UsageError("missing subcommand");

        if (a.out.empty()) {
            const char* env = std::getenv(out_env);
            a.out = env && *env ? env : default_out;
        }
        Run run;
        run.subcommand = cmd->app->get_name();
        for (const auto* opt : cmd->app->get_options()) {
            if (opt->get_lnames().empty()) continue;
            const auto name = opt->get_lnames().front();
            if (name == "help" || name == "help-all") continue;
            auto value = name == "out" ? a.out : option_value(opt);
            const bool is_path = std::find(path_options.begin(), path_options.end(), name) != path_options.end();
            if (is_path && !value.empty()) value = fs::absolute(value).lexically_normal().string();
            run.options[name] = value;
        }
        run.out = std::make_unique<Output>(a.out);
        cmd->handler(a, run);

        json manifest;
        manifest["subcommand"] = run.subcommand;
        manifest["options"] = run.options;
        manifest["inputs"] = run.inputs;
        manifest["outputs"] = run.out->files();
        run.out->write_json("run_manifest.json", manifest);

        json summary;
        summary["status"] = "ok";
        summary["subcommand"] = run.subcommand;
        summary["out"] = fs::absolute(a.out).lexically_normal().string();
        for (const auto& [k, v] : run.summary.items()) summary[k] = v;
        out << summary.dump() << "\n";
        return 0;
    } catch (const UsageError& e) {
        error_line(out, "usage", e.what());
        err << "tripsim: " << e.what() << "\nRun 'tripsim --help' for usage.\n";
        return 2;
    } catch (const Error& e) {
        error_line(out, to_string(e.category()), e.what());
        err << "tripsim: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        error_line(out, "internal", e.what());
        err << "tripsim: " << e.what() << "\n";
        return 1;
    }
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace tripsim::cli
