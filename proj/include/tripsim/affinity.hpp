#pragma once

#include "tripsim/similarity.hpp"
#include "tripsim/trip.hpp"

#include <Eigen/Dense>

#include <array>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace tripsim {

struct AffinityMatrix {
    Eigen::MatrixXd values;
    bool symmetric = false;

    Eigen::Index size() const noexcept { return values.rows(); }
};

/// Pairwise scoring function. A symmetric scorer is evaluated only on the
/// upper triangle and mirrored.
struct Scorer {
    std::function<double(const ScaledTrip&, const ScaledTrip&)> score;
    bool symmetric = false;
};

Scorer wgm_scorer(const WgmWeights& w);
Scorer car_scorer(const WgmWeights& w);
Scorer cp_scorer(const WgmWeights& w);

/// A[i][j] = scorer(trips[i], trips[j]). With `symmetricize`, the symmetric
/// part (A + A^T)/2 is returned instead.
AffinityMatrix build_affinity(std::span<const ScaledTrip> trips, const Scorer& scorer,
                              bool symmetricize = false);

struct SymDecomposition {
    Eigen::MatrixXd symmetric;
    Eigen::MatrixXd antisymmetric;
    /// ||S||_F^2 / ||A||_F^2; 1 for the zero matrix.
    double ratio = 1.0;
};

SymDecomposition sym_decompose(const Eigen::MatrixXd& a);

struct ClusterOptions {
    std::uint64_t seed = 7;
    /// k-means++ restarts; the lowest-inertia run wins. Capped at 100.
    int restarts = 10;
    int max_iterations = 300;
};

/// Normalized spectral clustering: eigenvectors of the k smallest eigenvalues
/// of I - D^-1/2 S D^-1/2, rows normalized, then k-means. Labels are numbered
/// by first appearance, so equal partitions produce equal label vectors.
std::vector<int> spectral_cluster(const Eigen::MatrixXd& s, int k, const ClusterOptions& opts = {});

/// Seeded k-means++ with restarts on the rows of `points`. Labels are
/// numbered by first appearance.
std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, const ClusterOptions& opts);

struct Projection {
    Eigen::MatrixXd coords; // n x 2
    /// PCA: fraction of total variance per component. MDS: eigenvalues of B.
    Eigen::Vector2d explained = Eigen::Vector2d::Zero();
};

/// Top two principal components by power iteration with deflation.
Projection pca_2d(const Eigen::MatrixXd& points);

/// Classical (Torgerson) MDS of a symmetric zero-diagonal distance matrix.
Projection mds_2d(const Eigen::MatrixXd& distances);

struct Moments {
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0; // population
};

/// Per-cluster spread of trip endpoints, in the order
/// start_x, start_y, start_t, end_x, end_y, end_t (meters, seconds).
struct ClusterSummary {
    int cluster = 0;
    std::size_t n = 0;
    std::array<Moments, 6> fields{};
};

/// One entry per label value present, ascending.
std::vector<ClusterSummary> cluster_summary(std::span<const Trip> trips, std::span<const int> labels);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

} // namespace tripsim
