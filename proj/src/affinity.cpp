#include "tripsim/affinity.hpp"

#include "tripsim/error.hpp"
#include "tripsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace tripsim {

Scorer wgm_scorer(const WgmWeights& w) {
    w.validate();
    return {[w](const ScaledTrip& a, const ScaledTrip& b) { return wgm_sim(a.points, b.points, w); },
            true};
}

Scorer car_scorer(const WgmWeights& w) {
    w.validate();
    return {[w](const ScaledTrip& a, const ScaledTrip& b) {
                return car_score(a.points, b.points, w).score;
            },
            false};
}

Scorer cp_scorer(const WgmWeights& w) {
    w.validate();
    return {[w](const ScaledTrip& a, const ScaledTrip& b) {
                return cp_score(a.points, b.points, w).score;
            },
            false};
}

AffinityMatrix build_affinity(std::span<const ScaledTrip> trips, const Scorer& scorer,
                              bool symmetricize) {
    const auto n = static_cast<Eigen::Index>(trips.size());
    if (n < 2) fail(ErrorCategory::invalid_argument, "affinity needs at least 2 trips");
    AffinityMatrix out{Eigen::MatrixXd(n, n), scorer.symmetric};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = scorer.symmetric ? i : 0; j < n; ++j) {
            const double v = scorer.score(trips[static_cast<std::size_t>(i)], trips[static_cast<std::size_t>(j)]);
            out.values(i, j) = v;
            if (scorer.symmetric) out.values(j, i) = v;
        }
    }
    if (symmetricize && !out.symmetric) {
        Eigen::MatrixXd s = 0.5 * (out.values + out.values.transpose());
        out.values = std::move(s);
        out.symmetric = true;
    }
    return out;
}

SymDecomposition sym_decompose(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) fail(ErrorCategory::invalid_argument, "sym_decompose: matrix is not square");
    SymDecomposition d;
    d.symmetric = 0.5 * (a + a.transpose());
    d.antisymmetric = 0.5 * (a - a.transpose());
    const double total = a.squaredNorm();
    d.ratio = total > 0.0 ? d.symmetric.squaredNorm() / total : 1.0;
    return d;
}

namespace {

std::vector<int> relabel_by_first_appearance(const std::vector<int>& labels) {
    std::map<int, int> remap;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
        out[i] = it->second;
    }
    return out;
}

struct KmeansRun {
    std::vector<int> labels;
    double inertia = std::numeric_limits<double>::infinity();
};

KmeansRun kmeans_once(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng, int max_iter) {
    const Eigen::Index n = x.rows();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd centers(k, x.cols());
    std::vector<char> used(static_cast<std::size_t>(n), 0);

    auto first = static_cast<Eigen::Index>(unit(rng) * static_cast<double>(n));
    first = std::min(first, n - 1);
    centers.row(0) = x.row(first);
    used[static_cast<std::size_t>(first)] = 1;
    Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = -1;
        if (total > 0.0) {
            double target = unit(rng) * total;
            for (Eigen::Index i = 0; i < n; ++i) {
                target -= d2(i);
                if (target < 0.0 && d2(i) > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {
                for (Eigen::Index i = n - 1; i >= 0; --i) {
                    if (d2(i) > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            for (Eigen::Index i = 0; i < n && pick < 0; ++i) {
                if (!used[static_cast<std::size_t>(i)]) pick = i;
            }
        }
        used[static_cast<std::size_t>(pick)] = 1;
        centers.row(c) = x.row(pick);
        d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    KmeansRun run;
    run.labels.assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
            if (run.labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
                run.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
                changed = true;
            }
        }
        if (!changed) break;
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int l = run.labels[static_cast<std::size_t>(i)];
            sums.row(l) += x.row(i);
            ++counts[static_cast<std::size_t>(l)];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
            }
        }
    }
    run.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        run.inertia += (x.row(i) - centers.row(run.labels[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return run;
}

} // namespace

std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, const ClusterOptions& opts) {
    const Eigen::Index n = points.rows();
    if (k < 1 || k > n) fail(ErrorCategory::invalid_argument, "k-means: k must be in [1, n]");
    if (k == n) {
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i);
        return labels;
    }
    const int restarts = std::clamp(opts.restarts, 1, 100);
    std::mt19937_64 rng(opts.seed);
    KmeansRun best;
    for (int r = 0; r < restarts; ++r) {
        auto run = kmeans_once(points, k, rng, opts.max_iterations);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    return relabel_by_first_appearance(best.labels);
}

std::vector<int> spectral_cluster(const Eigen::MatrixXd& s, int k, const ClusterOptions& opts) {
    const Eigen::Index n = s.rows();
    if (s.cols() != n) fail(ErrorCategory::invalid_argument, "spectral_cluster: matrix is not square");
    if (k < 2 || k > n) fail(ErrorCategory::invalid_argument, "spectral_cluster: k must be in [2, n]");
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        fail(ErrorCategory::invalid_argument, "spectral_cluster: affinity is not symmetric");
    }
    const Eigen::VectorXd degree = s.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(degree(i) > 0.0)) {
            fail(ErrorCategory::degenerate_input, "spectral_cluster: row with zero degree");
        }
    }
    if (k == n) return kmeans(Eigen::MatrixXd::Identity(n, n), k, opts);

    const Eigen::VectorXd inv_sqrt = degree.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd lap = -(inv_sqrt.asDiagonal() * s * inv_sqrt.asDiagonal());
    lap.diagonal().array() += 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (lap + lap.transpose()));
    if (eig.info() != Eigen::Success) {
        fail(ErrorCategory::degenerate_input, "spectral_cluster: eigendecomposition failed");
    }
    Eigen::MatrixXd embed = eig.eigenvectors().leftCols(k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double norm = embed.row(i).norm();
        if (norm > 0.0) embed.row(i) /= norm;
    }
    return kmeans(embed, k, opts);
}

namespace {

/// Dominant eigenpair of a symmetric PSD matrix.
std::pair<double, Eigen::VectorXd> power_iteration(const Eigen::MatrixXd& c) {
    const Eigen::Index d = c.rows();
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = 1.0 + 0.1 * static_cast<double>(i);
    v.normalize();
    double lambda = v.dot(c * v);
    for (int iter = 0; iter < 100000; ++iter) {
        Eigen::VectorXd w = c * v;
        const double norm = w.norm();
        if (norm == 0.0) return {0.0, v};
        w /= norm;
        const double next = w.dot(c * w);
        const bool done = std::abs(next - lambda) <= 1e-10 * std::max(std::abs(next), 1e-300) &&
                          std::min((w - v).norm(), (w + v).norm()) <= 1e-10;
        v = std::move(w);
        lambda = next;
        if (done) break;
    }
    return {lambda, v};
}

} // namespace

Projection pca_2d(const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.rows();
    if (n < 3 || points.cols() < 2) {
        fail(ErrorCategory::invalid_argument, "pca_2d needs at least 3 rows and 2 columns");
    }
    const Eigen::MatrixXd centered = points.rowwise() - points.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    const double total = cov.trace();
    if (!(total > 0.0)) fail(ErrorCategory::degenerate_input, "pca_2d: data has zero variance");

    auto [l1, v1] = power_iteration(cov);
    cov -= l1 * v1 * v1.transpose();
    auto [l2, v2] = power_iteration(cov);
    // A rank-1 input leaves an arbitrary direction after deflation.
    if (l2 < 1e-12 * l1) l2 = 0.0;

    Eigen::MatrixXd basis(points.cols(), 2);
    basis.col(0) = v1;
    basis.col(1) = v2;
    Projection p;
    p.coords = centered * basis;
    p.explained = Eigen::Vector2d(l1 / total, std::max(l2, 0.0) / total);
    return p;
}

Projection mds_2d(const Eigen::MatrixXd& distances) {
    const Eigen::Index n = distances.rows();
    if (distances.cols() != n) fail(ErrorCategory::invalid_argument, "mds_2d: matrix is not square");
    if (n < 1) fail(ErrorCategory::invalid_argument, "mds_2d: empty matrix");
    const double scale = std::max(1.0, distances.cwiseAbs().maxCoeff());
    if ((distances - distances.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        fail(ErrorCategory::invalid_argument, "mds_2d: distance matrix is not symmetric");
    }
    if (distances.diagonal().cwiseAbs().maxCoeff() > 1e-9 * scale) {
        fail(ErrorCategory::invalid_argument, "mds_2d: distance matrix diagonal is not zero");
    }
    const Eigen::MatrixXd sq = distances.cwiseProduct(distances);
    const Eigen::MatrixXd j =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    Eigen::MatrixXd b = -0.5 * j * sq * j;
    b = 0.5 * (b + b.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    if (eig.info() != Eigen::Success) fail(ErrorCategory::degenerate_input, "mds_2d: eigendecomposition failed");

    Projection p;
    p.coords = Eigen::MatrixXd::Zero(n, 2);
    // Eigenvalues are ascending.
    for (int c = 0; c < 2 && c < n; ++c) {
        const Eigen::Index idx = n - 1 - c;
        const double lambda = std::max(eig.eigenvalues()(idx), 0.0);
        p.explained(c) = lambda;
        p.coords.col(c) = eig.eigenvectors().col(idx) * std::sqrt(lambda);
    }
    return p;
}

std::vector<ClusterSummary> cluster_summary(std::span<const Trip> trips, std::span<const int> labels) {
    if (trips.size() != labels.size()) fail(ErrorCategory::invalid_argument, "cluster_summary: size mismatch");
    std::map<int, std::array<std::vector<double>, 6>> groups;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        const auto& o = trips[i].origin();
        const auto& d = trips[i].destination();
        auto& g = groups[labels[i]];
        const double values[6] = {o.x, o.y, o.t, d.x, d.y, d.t};
        for (int f = 0; f < 6; ++f) g[f].push_back(values[f]);
    }
    std::vector<ClusterSummary> out;
    for (auto& [label, g] : groups) {
        ClusterSummary s;
        s.cluster = label;
        s.n = g[0].size();
        for (int f = 0; f < 6; ++f) {
            auto& v = g[f];
            std::sort(v.begin(), v.end());
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            s.fields[f] = Moments{mean, quantile_sorted(v, 0.5), std::sqrt(ss / static_cast<double>(v.size()))};
        }
        out.push_back(s);
    }
    return out;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) fail(ErrorCategory::invalid_argument, "ARI: labelings differ in length");
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        ra[a[i]] += 1.0;
        rb[b[i]] += 1.0;
    }
    auto pairs = [](double c) { return c * (c - 1.0) / 2.0; };
    double index = 0.0, sa = 0.0, sb = 0.0;
    for (const auto& [key, c] : joint) index += pairs(c);
    for (const auto& [key, c] : ra) sa += pairs(c);
    for (const auto& [key, c] : rb) sb += pairs(c);
    const double total = pairs(static_cast<double>(a.size()));
    const double expected = total > 0.0 ? sa * sb / total : 0.0;
    const double max_index = 0.5 * (sa + sb);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

} // namespace tripsim
