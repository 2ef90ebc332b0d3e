#include "dfscsn/spatial.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace dfscsn {

void AdjacencyGraph::validate() const {
    if (K < 1) throw ValidationError("AdjacencyGraph: need at least one node");
    if (W.rows() != K || W.cols() != K)
        throw ValidationError("AdjacencyGraph: W must be K x K");
    for (int i = 0; i < K; ++i) {
        if (W(i, i) != 0.0) throw ValidationError("AdjacencyGraph: nonzero diagonal in W");
        for (int j = 0; j < i; ++j) {
            if (W(i, j) != W(j, i)) throw ValidationError("AdjacencyGraph: W not symmetric");
            if (W(i, j) != 0.0 && W(i, j) != 1.0)
                throw ValidationError("AdjacencyGraph: W entries must be 0 or 1");
        }
    }
}

AdjacencyGraph AdjacencyGraph::from_dense(const Matrix& W) {
    AdjacencyGraph g;
    g.K = static_cast<int>(W.rows());
    g.W = W;
    g.degrees = W.rowwise().sum();
    g.validate();
    return g;
}

AdjacencyGraph AdjacencyGraph::from_edges(int K, const std::vector<std::pair<int, int>>& edges) {
    if (K < 1) throw ValidationError("AdjacencyGraph: need at least one node");
    Matrix W = Matrix::Zero(K, K);
    for (auto [i, j] : edges) {
        if (i < 0 || j < 0 || i >= K || j >= K)
            throw ValidationError("AdjacencyGraph: edge index out of range");
        if (i == j) throw ValidationError("AdjacencyGraph: self loop in edge list");
        W(i, j) = 1.0;
        W(j, i) = 1.0;
    }
    return from_dense(W);
}

AdjacencyGraph build_grid_graph(int rows, int cols) {
    if (rows < 1 || cols < 1) throw ValidationError("build_grid_graph: rows, cols must be >= 1");
    const int K = rows * cols;
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(2 * K));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int id = r * cols + c;
            if (c + 1 < cols) edges.emplace_back(id, id + 1);
            if (r + 1 < rows) edges.emplace_back(id, id + cols);
        }
    }
    return AdjacencyGraph::from_edges(K, edges);
}

SpatialEigenCache eigendecompose_laplacian(const AdjacencyGraph& graph) {
    graph.validate();
    const Matrix laplacian = Matrix(graph.degrees.asDiagonal()) - graph.W;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(laplacian);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigendecompose_laplacian: eigensolver did not converge");
    SpatialEigenCache cache;
    cache.eigvals = solver.eigenvalues();  // ascending
    cache.eigvecs = solver.eigenvectors();
    return cache;
}

SpatialOperator::SpatialOperator(std::shared_ptr<const SpatialEigenCache> cache, double tau2,
                                 double rhoS)
    : cache_(std::move(cache)), tau2_(tau2), rhoS_(rhoS) {
    if (!cache_) throw ValidationError("SpatialOperator: null eigencache");
    if (!(tau2 > 0.0)) throw ValidationError("SpatialOperator: tau2 must be > 0");
    if (!(rhoS >= 0.0 && rhoS < 1.0))
        throw ValidationError("SpatialOperator: rhoS must lie in [0, 1)");
    q_eigvals_ = rhoS * cache_->eigvals.array() + (1.0 - rhoS);
    if ((q_eigvals_.array() <= 0.0).any())
        throw ValidationError("SpatialOperator: Q has a nonpositive eigenvalue");
}

Vector SpatialOperator::transform(const Vector& x, const Vector& spectrum) const {
    return cache_->eigvecs * (spectrum.asDiagonal() * (cache_->eigvecs.transpose() * x));
}

Matrix SpatialOperator::dense(const Vector& spectrum) const {
    return cache_->eigvecs * spectrum.asDiagonal() * cache_->eigvecs.transpose();
}

Vector SpatialOperator::apply_omega(const Vector& x) const {
    return transform(x, Vector(tau2_ * q_eigvals_.array().inverse()));
}

Vector SpatialOperator::apply_omega_inv(const Vector& x) const {
    return transform(x, Vector(q_eigvals_.array() / tau2_));
}

Vector SpatialOperator::apply_omega_sqrt(const Vector& x) const {
    return transform(x, Vector(std::sqrt(tau2_) * q_eigvals_.array().rsqrt()));
}

Vector SpatialOperator::apply_omega_inv_sqrt(const Vector& x) const {
    return transform(x, Vector(q_eigvals_.array().sqrt() / std::sqrt(tau2_)));
}

double SpatialOperator::log_det_omega() const {
    return dim() * std::log(tau2_) - q_eigvals_.array().log().sum();
}

Matrix SpatialOperator::dense_omega() const {
    return dense(Vector(tau2_ * q_eigvals_.array().inverse()));
}

Matrix SpatialOperator::dense_omega_sqrt() const {
    return dense(Vector(std::sqrt(tau2_) * q_eigvals_.array().rsqrt()));
}

Matrix SpatialOperator::dense_omega_inv_sqrt() const {
    return dense(Vector(q_eigvals_.array().sqrt() / std::sqrt(tau2_)));
}

SpatialOperator make_spatial_operator(std::shared_ptr<const SpatialEigenCache> cache, double tau2,
                                      double rhoS) {
    return SpatialOperator(std::move(cache), tau2, rhoS);
}

}  // namespace dfscsn
