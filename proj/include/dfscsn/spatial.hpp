#pragma once

#include <memory>

#include "dfscsn/common.hpp"

namespace dfscsn {

/// Areal adjacency graph: symmetric binary W with zero diagonal.
struct AdjacencyGraph {
    int K = 0;
    Matrix W;         // K x K, entries in {0, 1}
    Vector degrees;   // row sums of W

    static AdjacencyGraph from_dense(const Matrix& W);
    static AdjacencyGraph from_edges(int K, const std::vector<std::pair<int, int>>& edges);
    void validate() const;
};

/// Rook-adjacency grid, row-major node order.
AdjacencyGraph build_grid_graph(int rows, int cols);

/// Eigendecomposition of the graph Laplacian diag(W1) - W, computed once per
/// dataset and shared read-only across chains. Eigenvalues ascending.
struct SpatialEigenCache {
    Vector eigvals;
    Matrix eigvecs;  // orthonormal columns
    int K() const { return static_cast<int>(eigvals.size()); }
};

SpatialEigenCache eigendecompose_laplacian(const AdjacencyGraph& graph);

/// All linear algebra for the Leroux covariance Omega = tau^2 Q^{-1},
/// Q = rhoS (diag(W1) - W) + (1 - rhoS) I, through the cached eigenpairs.
/// The square root is the SYMMETRIC (spectral) one, so it commutes with
/// permutations of the areas. Construction is O(K) on the cache.
class SpatialOperator {
public:
    SpatialOperator(std::shared_ptr<const SpatialEigenCache> cache, double tau2, double rhoS);

    int dim() const { return cache_->K(); }
    double tau2() const { return tau2_; }
    double rhoS() const { return rhoS_; }
    const Vector& q_eigvals() const { return q_eigvals_; }

    Vector apply_omega(const Vector& x) const;           // Omega x
    Vector apply_omega_inv(const Vector& x) const;       // Omega^{-1} x
    Vector apply_omega_sqrt(const Vector& x) const;      // Omega^s x
    Vector apply_omega_inv_sqrt(const Vector& x) const;  // Omega^{-s} x
    double log_det_omega() const;                        // K log tau^2 - sum log q_i

    Matrix dense_omega() const;
    Matrix dense_omega_sqrt() const;
    Matrix dense_omega_inv_sqrt() const;

private:
    Vector transform(const Vector& x, const Vector& spectrum) const;
    Matrix dense(const Vector& spectrum) const;

    std::shared_ptr<const SpatialEigenCache> cache_;
    double tau2_;
    double rhoS_;
    Vector q_eigvals_;  // rhoS * eigvals + (1 - rhoS)
};

SpatialOperator make_spatial_operator(std::shared_ptr<const SpatialEigenCache> cache,
                                      double tau2, double rhoS);

}  // namespace dfscsn
