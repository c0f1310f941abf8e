#include "tripsim/similarity.hpp"

#include "tripsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tripsim {

namespace instrumentation {
namespace {
thread_local std::uint64_t psim_counter = 0;
thread_local std::uint64_t cell_counter = 0;
} // namespace

std::uint64_t psim_calls() noexcept { return psim_counter; }
std::uint64_t dp_cells() noexcept { return cell_counter; }
void reset() noexcept {
    psim_counter = 0;
    cell_counter = 0;
}
} // namespace instrumentation

void WgmWeights::validate() const {
    if (!(space >= 0.0) || !(time >= 0.0) || !(space + time > 0.0) || !std::isfinite(space + time)) {
        fail(ErrorCategory::invalid_argument, "weights must be nonnegative with a positive sum");
    }
}

double spatial_distance(const ScaledPoint& a, const ScaledPoint& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

PointScore psim_detail(const ScaledPoint& a, const ScaledPoint& b, const WgmWeights& w,
                       TimeMode mode, PointRole role) {
    ++instrumentation::psim_counter;
    const double d = spatial_distance(a, b);
    double tau = std::abs(a.t - b.t);
    if (mode != TimeMode::absolute && role != PointRole::interior) {
        const bool forward = (mode == TimeMode::signed_car) == (role == PointRole::origin);
        tau = forward ? b.t - a.t : a.t - b.t;
    }
    PointScore out;
    out.infeasible = tau < 0.0;
    const double tau_pos = std::max(tau, 0.0);
    const double log_sim = -(w.space * std::log1p(d) + w.time * std::log1p(tau_pos)) / (w.space + w.time);
    out.value = std::exp(log_sim);
    return out;
}

double psim(const ScaledPoint& a, const ScaledPoint& b, const WgmWeights& w, TimeMode mode,
            PointRole role) {
    return psim_detail(a, b, w, mode, role).value;
}

TripScore wgm_detail(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b,
                     const WgmWeights& w, TimeMode mode) {
    if (a.size() != b.size()) {
        fail(ErrorCategory::invalid_argument, "wgm: sequences differ in length");
    }
    if (a.empty()) fail(ErrorCategory::invalid_argument, "wgm: empty sequences");
    const std::size_t n = a.size();
    TripScore out{0.0, true};
    for (std::size_t i = 0; i < n; ++i) {
        PointRole role = PointRole::interior;
        if (n > 1 && i == 0) role = PointRole::origin;
        else if (n > 1 && i == n - 1) role = PointRole::destination;
        const auto p = psim_detail(a[i], b[i], w, mode, role);
        out.score += p.value;
        out.feasible = out.feasible && !p.infeasible;
    }
    out.score /= static_cast<double>(n);
    return out;
}

double wgm_sim(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b, const WgmWeights& w,
               TimeMode mode) {
    return wgm_detail(a, b, w, mode).score;
}

TripScore car_score(std::span<const ScaledPoint> rider, std::span<const ScaledPoint> ride,
                    const WgmWeights& w) {
    return wgm_detail(rider, ride, w, TimeMode::signed_car);
}

TripScore cp_score(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b,
                   const WgmWeights& w) {
    return wgm_detail(a, b, w, TimeMode::signed_cp);
}

void MetricParams::validate() const {
    if (!(lcss_eps_space > 0.0) || !(lcss_eps_time > 0.0)) {
        fail(ErrorCategory::invalid_argument, "LCSS epsilons must be positive");
    }
}

MetricParams MetricParams::from_thresholds(double dist_m, double time_s, const ScaleContext& ctx) {
    ctx.validate();
    MetricParams p;
    p.lcss_eps_space = dist_m / std::max(ctx.x_span(), ctx.y_span());
    p.lcss_eps_time = time_s / ctx.t_span();
    p.validate();
    return p;
}

std::size_t lcss(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b,
                 const MetricParams& params) {
    params.validate();
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            ++instrumentation::cell_counter;
            const bool match = spatial_distance(a[i - 1], b[j - 1]) <= params.lcss_eps_space &&
                               std::abs(a[i - 1].t - b[j - 1].t) <= params.lcss_eps_time;
            cur[j] = match ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

namespace {

void require_nonempty(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b,
                      const char* what) {
    if (a.empty() || b.empty()) {
        fail(ErrorCategory::invalid_argument, std::string(what) + ": empty sequence");
    }
}

} // namespace

double dtw(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b, DtwCost cost) {
    require_nonempty(a, b, "dtw");
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(n + 1, inf), cur(n + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= n; ++j) {
            ++instrumentation::cell_counter;
            double c = spatial_distance(a[i - 1], b[j - 1]);
            if (cost == DtwCost::distance_times_time) c *= std::abs(a[i - 1].t - b[j - 1].t);
            cur[j] = c + std::min({prev[j], cur[j - 1], prev[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

double frechet_discrete(std::span<const ScaledPoint> a, std::span<const ScaledPoint> b) {
    require_nonempty(a, b, "frechet");
    const std::size_t m = a.size();
    const std::size_t n = b.size();
    std::vector<double> prev(n), cur(n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            ++instrumentation::cell_counter;
            const double d = spatial_distance(a[i], b[j]);
            double reach;
            if (i == 0 && j == 0) reach = d;
            else if (i == 0) reach = cur[j - 1];
            else if (j == 0) reach = prev[j];
            else reach = std::min({prev[j], cur[j - 1], prev[j - 1]});
            cur[j] = std::max(d, reach);
        }
        std::swap(prev, cur);
    }
    return prev[n - 1];
}

double laplacian_kernel(double score, double gamma) {
    if (!(gamma > 0.0)) fail(ErrorCategory::invalid_argument, "kernel gamma must be positive");
    return std::exp(-gamma * (1.0 - score));
}

Metric parse_metric(std::string_view name) {
    if (name == "wgm") return Metric::wgm;
    if (name == "wgm_time") return Metric::wgm_time;
    if (name == "lcss") return Metric::lcss;
    if (name == "dtw") return Metric::dtw;
    if (name == "dtw_time") return Metric::dtw_time;
    if (name == "frechet") return Metric::frechet;
    fail(ErrorCategory::invalid_argument, "unknown metric '" + std::string(name) + "'");
}

std::string_view to_string(Metric metric) noexcept {
    switch (metric) {
    case Metric::wgm: return "wgm";
    case Metric::wgm_time: return "wgm_time";
    case Metric::lcss: return "lcss";
    case Metric::dtw: return "dtw";
    case Metric::dtw_time: return "dtw_time";
    case Metric::frechet: return "frechet";
    }
    return "unknown";
}

bool is_similarity(Metric metric) noexcept {
    return metric == Metric::wgm || metric == Metric::wgm_time || metric == Metric::lcss;
}

} // namespace tripsim
