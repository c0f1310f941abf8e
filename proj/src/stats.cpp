#include "tripsim/stats.hpp"

#include "tripsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

namespace tripsim {

namespace {

void require_positive_samples(std::span<const double> samples) {
    if (samples.size() < 2) fail(ErrorCategory::invalid_argument, "fit needs at least 2 samples");
    for (double v : samples) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            fail(ErrorCategory::invalid_argument, "fit samples must be finite and strictly positive");
        }
    }
}

bool all_equal(std::span<const double> v) {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

} // namespace

double digamma(double x) {
    if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double r = 1.0 / (x * x);
    // Bernoulli tail through B14.
    const double series =
        r * (1.0 / 12 -
             r * (1.0 / 120 -
                  r * (1.0 / 252 -
                       r * (1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r * (1.0 / 12)))))));
    return acc + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
    if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    while (x < 6.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double r = 1.0 / (x * x);
    const double series =
        1.0 / 6 -
        r * (1.0 / 30 -
             r * (1.0 / 42 - r * (1.0 / 30 - r * (5.0 / 66 - r * (691.0 / 2730 - r * (7.0 / 6))))));
    return acc + 1.0 / x + 0.5 * r + series * r / x;
}

double lognormal_log_likelihood(std::span<const double> samples, double mu, double sigma) {
    const double n = static_cast<double>(samples.size());
    double sum_log = 0.0;
    double sum_sq = 0.0;
    for (double v : samples) {
        const double l = std::log(v);
        sum_log += l;
        sum_sq += (l - mu) * (l - mu);
    }
    return -sum_log - n * std::log(sigma) - 0.5 * n * std::log(2.0 * std::numbers::pi) -
           sum_sq / (2.0 * sigma * sigma);
}

double gamma_log_likelihood(std::span<const double> samples, double shape, double scale) {
    const double n = static_cast<double>(samples.size());
    double sum_log = 0.0;
    double sum = 0.0;
    for (double v : samples) {
        sum_log += std::log(v);
        sum += v;
    }
    return (shape - 1.0) * sum_log - sum / scale - n * shape * std::log(scale) -
           n * std::lgamma(shape);
}

FitResult fit_lognormal(std::span<const double> samples) {
    require_positive_samples(samples);
    const double n = static_cast<double>(samples.size());
    double mu = 0.0;
    for (double v : samples) mu += std::log(v);
    mu /= n;
    double var = 0.0;
    for (double v : samples) {
        const double d = std::log(v) - mu;
        var += d * d;
    }
    const double sigma = std::sqrt(var / n);
    if (!(sigma > 1e-12 * std::max(1.0, std::abs(mu)))) {
        fail(ErrorCategory::degenerate_fit, "lognormal fit: log-samples have zero variance");
    }
    return FitResult{Family::lognormal, mu, sigma, lognormal_log_likelihood(samples, mu, sigma),
                     samples.size(), 0};
}

FitResult fit_gamma(std::span<const double> samples) {
    require_positive_samples(samples);
    if (all_equal(samples)) fail(ErrorCategory::degenerate_fit, "gamma fit: constant samples");
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    double mean_log = 0.0;
    for (double v : samples) {
        mean += v;
        mean_log += std::log(v);
    }
    mean /= n;
    mean_log /= n;
    const double s = std::log(mean) - mean_log;
    if (!(s > 0.0) || !std::isfinite(s)) {
        fail(ErrorCategory::degenerate_fit, "gamma fit: ln(mean) - mean(ln x) is not positive");
    }

    double k = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
    std::size_t iter = 0;
    for (; iter < 100; ++iter) {
        const double f = std::log(k) - digamma(k) - s;
        const double df = 1.0 / k - trigamma(k);
        double next = k - f / df;
        if (!(next > 0.0)) next = 0.5 * k;
        const double step = std::abs(next - k);
        k = next;
        if (step < 1e-10 * k) {
            ++iter;
            break;
        }
    }
    const double theta = mean / k;
    return FitResult{Family::gamma, k, theta, gamma_log_likelihood(samples, k, theta),
                     samples.size(), iter};
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) fail(ErrorCategory::invalid_argument, "pearson: length mismatch");
    if (xs.size() < 2) fail(ErrorCategory::invalid_argument, "pearson: need at least 2 pairs");
    if (all_equal(xs) || all_equal(ys)) {
        fail(ErrorCategory::undefined_correlation, "pearson: a sequence has zero variance");
    }
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> samples) {
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> out;
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
    }
    return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) fail(ErrorCategory::invalid_argument, "quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxSummary box_summary(std::vector<double> values) {
    BoxSummary b;
    b.n = values.size();
    if (values.empty()) return b;
    std::sort(values.begin(), values.end());
    b.min = values.front();
    b.q1 = quantile_sorted(values, 0.25);
    b.median = quantile_sorted(values, 0.5);
    b.q3 = quantile_sorted(values, 0.75);
    b.max = values.back();
    return b;
}

std::pair<std::size_t, std::size_t> grid_cell(const ScaledPoint& p, std::size_t rows, std::size_t cols) {
    auto bin = [](double v, std::size_t count) {
        auto i = static_cast<std::size_t>(std::floor(v * static_cast<double>(count)));
        return std::min(i, count - 1);
    };
    return {bin(p.y, rows), bin(p.x, cols)};
}

namespace {

void require_grid(const ScaleContext& ctx, std::size_t rows, std::size_t cols) {
    ctx.validate();
    if (rows < 1 || cols < 1) fail(ErrorCategory::invalid_argument, "grid needs at least one row and column");
}

} // namespace

GridStats<std::size_t> grid_unique_counts(std::span<const Trip> trips, const ScaleContext& ctx,
                                          std::size_t rows, std::size_t cols) {
    require_grid(ctx, rows, cols);
    GridStats<std::size_t> grid{rows, cols, std::vector<std::size_t>(rows * cols, 0)};
    std::set<std::size_t> visited;
    for (const auto& trip : trips) {
        visited.clear();
        for (const auto& w : trip.waypoints()) {
            auto [r, c] = grid_cell(scale(w, ctx), rows, cols);
            visited.insert(r * cols + c);
        }
        for (auto cell : visited) ++grid.cells[cell];
    }
    return grid;
}

GridStats<BoxSummary> grid_duration_stats(std::span<const Trip> trips, const ScaleContext& ctx,
                                          std::size_t rows, std::size_t cols) {
    require_grid(ctx, rows, cols);
    std::vector<std::vector<double>> durations(rows * cols);
    for (const auto& trip : trips) {
        auto [r, c] = grid_cell(scale(trip.origin(), ctx), rows, cols);
        durations[r * cols + c].push_back(trip.duration());
    }
    GridStats<BoxSummary> grid{rows, cols, {}};
    grid.cells.reserve(rows * cols);
    for (auto& d : durations) grid.cells.push_back(box_summary(std::move(d)));
    return grid;
}

} // namespace tripsim
