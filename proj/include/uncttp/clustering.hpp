#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "uncttp/core.hpp"
#include "uncttp/error.hpp"
#include "uncttp/retrieval.hpp"
#include "uncttp/rng.hpp"
#include "uncttp/selection.hpp"

namespace uncttp {

template <typename Scalar>
struct KMeansResult {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> centroids;
    std::vector<std::size_t> assignment;
    int iterations = 0;
};

/// Number of pairwise-distinct rows.
template <typename Derived>
std::size_t distinct_rows(const Eigen::MatrixBase<Derived>& points) {
    std::size_t distinct = 0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        bool seen = false;
        for (Eigen::Index j = 0; j < i && !seen; ++j) seen = points.row(i) == points.row(j);
        if (!seen) ++distinct;
    }
    return distinct;
}

/// Farthest-point seeding from `first`: each further centroid is the point
/// with the largest squared distance to its nearest chosen centroid, ties
/// to the lowest index.
template <typename Derived>
std::vector<Eigen::Index> farthest_point_seeds(const Eigen::MatrixBase<Derived>& points,
                                               std::size_t k, Eigen::Index first) {
    using Scalar = typename Derived::Scalar;
    std::vector<Eigen::Index> seeds{first};
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nearest(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        nearest(i) = (points.row(i) - points.row(first)).squaredNorm();
    }
    while (seeds.size() < k) {
        Eigen::Index best = 0;
        nearest.maxCoeff(&best);
        seeds.push_back(best);
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            nearest(i) = std::min<Scalar>(nearest(i), (points.row(i) - points.row(best)).squaredNorm());
        }
    }
    return seeds;
}

/// Index of the centroid nearest to `point`, ties to the lowest index.
template <typename DerivedP, typename DerivedC>
std::size_t nearest_centroid(const Eigen::MatrixBase<DerivedP>& point,
                             const Eigen::MatrixBase<DerivedC>& centroids) {
    Eigen::Index best = 0;
    (centroids.rowwise() - point).rowwise().squaredNorm().minCoeff(&best);
    return static_cast<std::size_t>(best);
}

/// Lloyd's k-means over the rows of `points`. Stops after `max_iterations`
/// or once no centroid moves by `tolerance` or more; an emptied cluster
/// keeps its previous centroid. The returned assignment is relative to
/// the returned centroids.
template <typename Derived>
KMeansResult<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points, std::size_t k,
                                              Eigen::Index first_seed, int max_iterations = 100,
                                              double tolerance = 1e-6) {
    using Scalar = typename Derived::Scalar;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (k == 0) throw DegenerateClustering("cluster count must be positive");
    if (distinct_rows(points) < k) {
        throw DegenerateClustering("only " + std::to_string(distinct_rows(points)) +
                                   " distinct points for " + std::to_string(k) + " clusters");
    }
    const auto rows = points.rows();
    const auto seeds = farthest_point_seeds(points, k, first_seed);

    KMeansResult<Scalar> result;
    result.centroids.resize(static_cast<Eigen::Index>(k), points.cols());
    for (std::size_t c = 0; c < k; ++c) {
        result.centroids.row(static_cast<Eigen::Index>(c)) = points.row(seeds[c]);
    }
    result.assignment.assign(static_cast<std::size_t>(rows), 0);

    auto assign = [&] {
        for (Eigen::Index i = 0; i < rows; ++i) {
            result.assignment[static_cast<std::size_t>(i)] = nearest_centroid(points.row(i), result.centroids);
        }
    };

    for (result.iterations = 0; result.iterations < max_iterations;) {
        assign();
        Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), points.cols());
        std::vector<std::size_t> counts(k, 0);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const auto c = result.assignment[static_cast<std::size_t>(i)];
            sums.row(static_cast<Eigen::Index>(c)) += points.row(i);
            ++counts[c];
        }
        Scalar movement = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            const auto row = static_cast<Eigen::Index>(c);
            const auto updated = (sums.row(row) / static_cast<Scalar>(counts[c])).eval();
            movement = std::max<Scalar>(movement, (updated - result.centroids.row(row)).norm());
            result.centroids.row(row) = updated;
        }
        ++result.iterations;
        if (movement < static_cast<Scalar>(tolerance)) break;
    }
    assign();
    return result;
}

/// One instance per k-means cluster (K*N clusters over the embeddings),
/// the one nearest its centroid; then label quotas are restored by
/// replacing picks of over-represented labels with the nearest unused
/// instance of an under-represented label, cheapest swap first.
DemonstrationSet select_diversity(std::span<const Instance> train, const LabelSet& labels,
                                  std::size_t ways, std::size_t shots, Embedder& embedder, Rng& rng);

}  // namespace uncttp
