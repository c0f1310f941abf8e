#pragma once

#include "tripsim/trip.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace tripsim {

enum class Family { lognormal, gamma };

/// Maximum-likelihood fit. For lognormal, (first, second) = (mu, sigma);
/// for gamma, (shape k, scale theta).
struct FitResult {
    Family family = Family::lognormal;
    double first = 0.0;
    double second = 0.0;
    double log_likelihood = 0.0;
    std::size_t n = 0;
    std::size_t iterations = 0;
};

FitResult fit_lognormal(std::span<const double> samples);

/// Newton iteration on ln(k) - digamma(k) = ln(mean) - mean(ln x).
FitResult fit_gamma(std::span<const double> samples);

double lognormal_log_likelihood(std::span<const double> samples, double mu, double sigma);
double gamma_log_likelihood(std::span<const double> samples, double shape, double scale);

double digamma(double x);
double trigamma(double x);

double pearson(std::span<const double> xs, std::span<const double> ys);

/// Step function: one (value, P[X <= value]) pair per distinct value.
std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> samples);

/// Linear interpolation between order statistics; `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double p);

struct BoxSummary {
    std::size_t n = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;

    bool empty() const noexcept { return n == 0; }
};

BoxSummary box_summary(std::vector<double> values);

/// Row-major rows x cols grid. Row index grows with y, column with x.
template <class Cell>
struct GridStats {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Cell> cells;

    const Cell& at(std::size_t row, std::size_t col) const { return cells[row * cols + col]; }
    Cell& at(std::size_t row, std::size_t col) { return cells[row * cols + col]; }
};

/// Cell of a scaled point; points on the upper bound fall in the last cell.
std::pair<std::size_t, std::size_t> grid_cell(const ScaledPoint& p, std::size_t rows, std::size_t cols);

/// Distinct trips with at least one waypoint in each cell.
GridStats<std::size_t> grid_unique_counts(std::span<const Trip> trips, const ScaleContext& ctx,
                                          std::size_t rows, std::size_t cols);

/// Duration quartiles of trips keyed by the cell of their origin.
GridStats<BoxSummary> grid_duration_stats(std::span<const Trip> trips, const ScaleContext& ctx,
                                          std::size_t rows, std::size_t cols);

} // namespace tripsim
