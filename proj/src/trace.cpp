#include "tripsim/trace.hpp"

#include "tripsim/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

namespace tripsim {

namespace {

constexpr std::size_t max_placement_attempts = 1000;

bool parse_double(std::string_view token, double& out) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

} // namespace

TraceFormat::TraceFormat() : TraceFormat("t id x y speed") {}

TraceFormat::TraceFormat(std::string_view spec) {
    bool seen[5] = {};
    for (auto token : split_ws(spec)) {
        Field f;
        if (token == "t") f = Field::t;
        else if (token == "id") f = Field::id;
        else if (token == "x") f = Field::x;
        else if (token == "y") f = Field::y;
        else if (token == "speed") f = Field::speed;
        else fail(ErrorCategory::invalid_argument, "unknown trace column '" + std::string(token) + "'");
        auto slot = static_cast<int>(f);
        if (seen[slot]) {
            fail(ErrorCategory::invalid_argument, "duplicate trace column '" + std::string(token) + "'");
        }
        seen[slot] = true;
        columns_.push_back(f);
    }
    for (bool s : seen) {
        if (!s) fail(ErrorCategory::invalid_argument, "trace format must name t, id, x, y and speed");
    }
}

std::string TraceFormat::to_string() const {
    static constexpr const char* names[] = {"t", "id", "x", "y", "speed"};
    std::string out;
    for (auto f : columns_) {
        if (!out.empty()) out += ' ';
        out += names[static_cast<int>(f)];
    }
    return out;
}

ParseResult parse_trace(std::istream& in, const TraceFormat& format) {
    if (!in) fail(ErrorCategory::io, "trace stream is not readable");
    ParseResult result;
    std::size_t lines = 0;
    std::string line;
    const auto cols = format.columns();
    while (std::getline(in, line)) {
        auto fields = split_ws(line);
        if (fields.empty() || fields.front().starts_with('#')) continue;
        ++lines;
        if (fields.size() != cols.size()) {
            ++result.malformed;
            continue;
        }
        TraceRecord rec;
        bool ok = true;
        for (std::size_t i = 0; i < cols.size() && ok; ++i) {
            switch (cols[i]) {
            case TraceFormat::Field::t: ok = parse_double(fields[i], rec.t); break;
            case TraceFormat::Field::x: ok = parse_double(fields[i], rec.x); break;
            case TraceFormat::Field::y: ok = parse_double(fields[i], rec.y); break;
            case TraceFormat::Field::speed: ok = parse_double(fields[i], rec.speed); break;
            case TraceFormat::Field::id: rec.id.assign(fields[i]); break;
            }
        }
        if (!ok) {
            ++result.malformed;
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    if (in.bad()) fail(ErrorCategory::io, "error while reading trace stream");
    if (lines > 0 && result.malformed * 10 > lines) {
        fail(ErrorCategory::format, std::to_string(result.malformed) + " of " +
                                        std::to_string(lines) + " trace lines are malformed");
    }
    return result;
}

ParseResult parse_trace_file(const std::filesystem::path& path, const TraceFormat& format) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::io, "cannot open trace file " + path.string());
    return parse_trace(in, format);
}

void write_trace(std::ostream& out, std::span<const TraceRecord> records, const TraceFormat& format) {
    const auto cols = format.columns();
    char buf[64];
    auto num = [&](double v) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    };
    for (const auto& r : records) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out << ' ';
            switch (cols[i]) {
            case TraceFormat::Field::t: out << num(r.t); break;
            case TraceFormat::Field::x: out << num(r.x); break;
            case TraceFormat::Field::y: out << num(r.y); break;
            case TraceFormat::Field::speed: out << num(r.speed); break;
            case TraceFormat::Field::id: out << r.id; break;
            }
        }
        out << '\n';
    }
}

TimeWindow::TimeWindow(double s, double e) : start(s), end(e) {
    if (!(std::isfinite(s) && std::isfinite(e) && e > s)) {
        fail(ErrorCategory::invalid_argument, "time window end must be after its start");
    }
}

std::vector<Trip> build_trips(std::span<const TraceRecord> records, const TimeWindow& window) {
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::string> ids;
    std::vector<std::vector<Waypoint>> groups;
    for (const auto& r : records) {
        if (!window.contains(r.t)) continue;
        auto [it, inserted] = slot.try_emplace(r.id, groups.size());
        if (inserted) {
            ids.push_back(r.id);
            groups.emplace_back();
        }
        groups[it->second].push_back(Waypoint{r.x, r.y, r.t, r.speed});
    }
    std::vector<Trip> trips;
    trips.reserve(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        std::stable_sort(groups[i].begin(), groups[i].end(),
                         [](const Waypoint& a, const Waypoint& b) { return a.t < b.t; });
        trips.emplace_back(ids[i], std::move(groups[i]));
    }
    return trips;
}

void SynthConfig::validate() const {
    bbox.validate();
    if (n_trips < 1) fail(ErrorCategory::invalid_argument, "n_trips must be at least 1");
    if (waypoints < 2) fail(ErrorCategory::invalid_argument, "synthetic trips need at least 2 waypoints");
    if (!(duration_shape > 0.0) || !(duration_scale > 0.0) || !(displacement_sigma > 0.0)) {
        fail(ErrorCategory::invalid_argument, "distribution parameters must be strictly positive");
    }
    if (!std::isfinite(displacement_mu)) {
        fail(ErrorCategory::invalid_argument, "displacement mu must be finite");
    }
    const double diagonal = std::hypot(bbox.x_span(), bbox.y_span());
    if (std::exp(displacement_mu) >= diagonal) {
        fail(ErrorCategory::invalid_argument,
             "median displacement exceeds the bounding box diagonal");
    }
    if (duration_shape * duration_scale >= bbox.t_span()) {
        fail(ErrorCategory::invalid_argument, "mean duration does not fit in the time window");
    }
}

std::vector<Trip> generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::gamma_distribution<double> duration_dist(cfg.duration_shape, cfg.duration_scale);
    std::lognormal_distribution<double> displacement_dist(cfg.displacement_mu, cfg.displacement_sigma);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 1.0);

    const auto& box = cfg.bbox;
    const double diagonal = std::hypot(box.x_span(), box.y_span());
    const int width = static_cast<int>(std::to_string(cfg.n_trips).size());

    std::vector<Trip> trips;
    trips.reserve(cfg.n_trips);
    for (std::size_t n = 0; n < cfg.n_trips; ++n) {
        double duration = 0.0;
        do {
            duration = duration_dist(rng);
        } while (!(duration > 0.0) || duration >= box.t_span());
        const double start = box.t_min + unit(rng) * (box.t_span() - duration);

        double ox = 0.0, oy = 0.0, dx = 0.0, dy = 0.0;
        for (bool placed = false; !placed;) {
            double r = 0.0;
            do {
                r = displacement_dist(rng);
            } while (r >= diagonal);
            for (std::size_t attempt = 0; attempt < max_placement_attempts && !placed; ++attempt) {
                const double angle = 2.0 * std::numbers::pi * unit(rng);
                dx = r * std::cos(angle);
                dy = r * std::sin(angle);
                if (std::abs(dx) > box.x_span() || std::abs(dy) > box.y_span()) continue;
                const double lo_x = box.x_min + std::max(0.0, -dx);
                const double hi_x = box.x_max - std::max(0.0, dx);
                const double lo_y = box.y_min + std::max(0.0, -dy);
                const double hi_y = box.y_max - std::max(0.0, dy);
                ox = lo_x + unit(rng) * (hi_x - lo_x);
                oy = lo_y + unit(rng) * (hi_y - lo_y);
                placed = true;
            }
        }

        const double r = std::hypot(dx, dy);
        const double nx = r > 0.0 ? -dy / r : 0.0;
        const double ny = r > 0.0 ? dx / r : 0.0;
        const double sigma = 0.01 * r;
        std::vector<Waypoint> pts;
        pts.reserve(cfg.waypoints);
        const auto last = cfg.waypoints - 1;
        for (std::size_t i = 0; i <= last; ++i) {
            const double f = static_cast<double>(i) / static_cast<double>(last);
            double x = ox + f * dx;
            double y = oy + f * dy;
            if (i != 0 && i != last) {
                const double off = sigma * jitter(rng);
                x = std::clamp(x + off * nx, box.x_min, box.x_max);
                y = std::clamp(y + off * ny, box.y_min, box.y_max);
            }
            const double t = i == last ? start + duration : start + f * duration;
            pts.push_back(Waypoint{x, y, t, std::nullopt});
        }
        std::string id = std::to_string(n);
        id.insert(0, static_cast<std::size_t>(width) - id.size(), '0');
        trips.emplace_back("syn" + id, std::move(pts));
    }
    return trips;
}

void write_trips_jsonl(std::ostream& out, std::span<const Trip> trips) {
    for (const auto& trip : trips) {
        nlohmann::json points = nlohmann::json::array();
        for (const auto& w : trip.waypoints()) points.push_back({w.t, w.x, w.y});
        nlohmann::json line = {{"id", trip.id()}, {"waypoints", std::move(points)}};
        out << line.dump() << '\n';
    }
}

std::vector<Trip> read_trips_jsonl(std::istream& in) {
    if (!in) fail(ErrorCategory::io, "trip stream is not readable");
    std::vector<Trip> trips;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            std::vector<Waypoint> pts;
            for (const auto& p : j.at("waypoints")) {
                if (p.size() != 3) throw std::runtime_error("waypoint must be [t,x,y]");
                pts.push_back(Waypoint{p[1].get<double>(), p[2].get<double>(), p[0].get<double>(),
                                       std::nullopt});
            }
            trips.emplace_back(j.at("id").get<std::string>(), std::move(pts));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            fail(ErrorCategory::format, "trip file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return trips;
}

void save_trips(const std::filesystem::path& path, std::span<const Trip> trips) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCategory::io, "cannot write " + path.string());
    write_trips_jsonl(out, trips);
}

std::vector<Trip> load_trips(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot open trip file " + path.string());
    return read_trips_jsonl(in);
}

} // namespace tripsim
