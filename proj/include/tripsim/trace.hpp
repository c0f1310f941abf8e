#pragma once

#include "tripsim/trip.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tripsim {

struct TraceRecord {
    double t = 0.0;
    std::string id;
    double x = 0.0;
    double y = 0.0;
    double speed = 0.0;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Column layout of a whitespace-separated trace. Built from a format string
/// naming each column, e.g. "t id x y speed" (the default).
class TraceFormat {
public:
    enum class Field { t, id, x, y, speed };

    TraceFormat();
    explicit TraceFormat(std::string_view spec);

    std::span<const Field> columns() const noexcept { return columns_; }
    std::string to_string() const;

private:
    std::vector<Field> columns_;
};

struct ParseResult {
    std::vector<TraceRecord> records;
    std::size_t malformed = 0;
};

/// Reads one record per line. Blank lines and lines starting with '#' are
/// ignored; lines with the wrong arity or non-numeric fields are skipped and
/// counted. More than 10% malformed lines is a format error.
ParseResult parse_trace(std::istream& in, const TraceFormat& format = {});
ParseResult parse_trace_file(const std::filesystem::path& path, const TraceFormat& format = {});

/// Serializes records in the given column order; parse_trace reads it back
/// unchanged.
void write_trace(std::ostream& out, std::span<const TraceRecord> records,
                 const TraceFormat& format = {});

/// Half-open interval [start, end) in trace seconds.
struct TimeWindow {
    double start = 0.0;
    double end = 3600.0;

    TimeWindow() = default;
    TimeWindow(double start, double end);

    bool contains(double t) const noexcept { return t >= start && t < end; }
};

/// Groups in-window records by id. Trips come out in order of each id's
/// first in-window appearance; each trip's waypoints are stably sorted by t.
std::vector<Trip> build_trips(std::span<const TraceRecord> records, const TimeWindow& window);

struct SynthConfig {
    std::size_t n_trips = 1000;
    ScaleContext bbox{0.0, 30000.0, 0.0, 30000.0, 28800.0, 32400.0};
    double duration_shape = 2.0;
    double duration_scale = 300.0;
    double displacement_mu = 8.0;
    double displacement_sigma = 0.6;
    std::size_t waypoints = 50;
    std::uint64_t seed = 20190101;

    void validate() const;
};

/// Deterministic synthetic trip set: start uniform in the time window,
/// gamma durations, lognormal OD displacement, linearly interpolated
/// interior waypoints with a small perpendicular jitter.
std::vector<Trip> generate_synthetic(const SynthConfig& cfg);

/// Line-delimited JSON: {"id": ..., "waypoints": [[t,x,y], ...]} per line.
void write_trips_jsonl(std::ostream& out, std::span<const Trip> trips);
std::vector<Trip> read_trips_jsonl(std::istream& in);

void save_trips(const std::filesystem::path& path, std::span<const Trip> trips);
std::vector<Trip> load_trips(const std::filesystem::path& path);

} // namespace tripsim
