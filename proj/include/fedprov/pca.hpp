#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "fedprov/model.hpp"

namespace fedprov {

struct PcaResult {
    RowMatrix scores;               // n x kept, projections of the centered points
    Eigen::VectorXd eigenvalues;    // kept eigenvalues, descending
    RowMatrix components;           // kept x d, unit rows
    Eigen::RowVectorXd mean;        // 1 x d

    /// Projects rows of `x` (same width as the fitted points) onto the kept components.
    RowMatrix project(const RowMatrix& x) const;
};

/// Eigen-decomposition of the sample covariance (divisor n - 1) after
/// mean-centering. Components whose eigenvalue is below `floor` (or
/// negligible relative to the largest) are dropped, so `scores` may have
/// fewer than `components` columns. When d > n the decomposition runs on the
/// n x n Gram matrix, which has the same non-zero spectrum.
PcaResult pca(const RowMatrix& points, std::size_t components, double floor = 1e-12);

/// Mahalanobis distance of every point to the projected cloud, using the
/// top-`components` principal subspace. All zeros when no component survives.
Eigen::VectorXd pca_mahalanobis(const RowMatrix& points, std::size_t components);

}  // namespace fedprov
