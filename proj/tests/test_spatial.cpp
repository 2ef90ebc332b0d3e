#include <doctest.h>

#include "dfscsn/rng.hpp"
#include "dfscsn/spatial.hpp"

using namespace dfscsn;

namespace {

std::shared_ptr<const SpatialEigenCache> cache_of(const AdjacencyGraph& g) {
    return std::make_shared<const SpatialEigenCache>(eigendecompose_laplacian(g));
}

}  // namespace

TEST_CASE("grid graphs: single node, single edge, 5x5 rook lattice") {
    const AdjacencyGraph g1 = build_grid_graph(1, 1);
    CHECK(g1.K == 1);
    CHECK(g1.W(0, 0) == 0.0);
    CHECK(g1.degrees[0] == 0.0);

    const AdjacencyGraph g2 = build_grid_graph(1, 2);
    CHECK(g2.K == 2);
    CHECK(g2.W(0, 1) == 1.0);
    CHECK(g2.W(1, 0) == 1.0);
    CHECK(g2.degrees[0] == 1.0);
    CHECK(g2.degrees[1] == 1.0);

    const AdjacencyGraph g25 = build_grid_graph(5, 5);
    CHECK(g25.K == 25);
    CHECK(g25.degrees.sum() == doctest::Approx(2.0 * 40));  // 40 undirected edges
    // corners have 2 neighbours, edges 3, interior 4
    CHECK(g25.degrees[0] == 2.0);
    CHECK(g25.degrees[2] == 3.0);
    CHECK(g25.degrees[12] == 4.0);
}

TEST_CASE("laplacian eigendecomposition satisfies its contracts") {
    const AdjacencyGraph g1 = build_grid_graph(1, 1);
    const SpatialEigenCache c1 = eigendecompose_laplacian(g1);
    CHECK(c1.eigvals[0] == doctest::Approx(0.0));
    CHECK(std::abs(c1.eigvecs(0, 0)) == doctest::Approx(1.0));

    // two-node path: analytic eigenpairs of [[1,-1],[-1,1]]
    const AdjacencyGraph g2 = build_grid_graph(1, 2);
    const SpatialEigenCache c2 = eigendecompose_laplacian(g2);
    CHECK(c2.eigvals[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c2.eigvals[1] == doctest::Approx(2.0).epsilon(1e-12));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(c2.eigvecs(0, 0)) == doctest::Approx(inv_sqrt2));
    CHECK(std::abs(c2.eigvecs(1, 1)) == doctest::Approx(inv_sqrt2));

    const AdjacencyGraph g25 = build_grid_graph(5, 5);
    const SpatialEigenCache c25 = eigendecompose_laplacian(g25);
    // connected graph: exactly one zero eigenvalue
    int zeros = 0;
    for (int i = 0; i < 25; ++i)
        if (std::abs(c25.eigvals[i]) < 1e-8) ++zeros;
    CHECK(zeros == 1);
    CHECK(c25.eigvals.minCoeff() >= -1e-10);
    const Matrix lap = Matrix(g25.degrees.asDiagonal()) - g25.W;
    const Matrix recon =
        c25.eigvecs * c25.eigvals.asDiagonal() * c25.eigvecs.transpose();
    CHECK((recon - lap).cwiseAbs().maxCoeff() < 1e-10);
    const Matrix gram = c25.eigvecs.transpose() * c25.eigvecs;
    CHECK((gram - Matrix::Identity(25, 25)).cwiseAbs().maxCoeff() < 1e-10);
    // ascending order
    for (int i = 1; i < 25; ++i) CHECK(c25.eigvals[i] >= c25.eigvals[i - 1]);
}

TEST_CASE("spatial operator: scalar and 2x2 closed forms") {
    // isolated node: Omega = tau2 / (1 - rhoS)
    const auto c1 = cache_of(build_grid_graph(1, 1));
    for (double rho : {0.0, 0.3, 0.9}) {
        const SpatialOperator op(c1, 1.0, rho);
        CHECK(op.dense_omega()(0, 0) == doctest::Approx(1.0 / (1.0 - rho)).epsilon(1e-12));
    }

    // two-node path, tau2 = 1, rhoS = 0.5: hand-inverted 2x2
    const auto c2 = cache_of(build_grid_graph(1, 2));
    const SpatialOperator op2(c2, 1.0, 0.5);
    const Matrix omega = op2.dense_omega();
    CHECK(omega(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(omega(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(omega(1, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

    // rhoS = 0 reduces to independence
    const auto c25 = cache_of(build_grid_graph(5, 5));
    const SpatialOperator op0(c25, 2.5, 0.0);
    CHECK((op0.dense_omega() - 2.5 * Matrix::Identity(25, 25)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("operator actions are mutually consistent") {
    const auto cache = cache_of(build_grid_graph(5, 5));
    const SpatialOperator op(cache, 1.7, 0.6);
    RngStream rng(11, 0);
    Vector x(25);
    for (int i = 0; i < 25; ++i) x[i] = rng.normal();

    // inverse round trip
    const Vector round = op.apply_omega(op.apply_omega_inv(x));
    CHECK((round - x).norm() / x.norm() < 1e-8);

    // symmetric square root squares to Omega
    const Vector via_sqrt = op.apply_omega_sqrt(op.apply_omega_sqrt(x));
    const Vector direct = op.apply_omega(x);
    CHECK((via_sqrt - direct).norm() / direct.norm() < 1e-8);

    // Omega^{-s} Omega Omega^{-s} = I (what collapses the CSN constant)
    const Vector identity_action =
        op.apply_omega_inv_sqrt(op.apply_omega(op.apply_omega_inv_sqrt(x)));
    CHECK((identity_action - x).cwiseAbs().maxCoeff() < 1e-8);

    // log determinant vs dense determinant at K = 25
    const double direct_logdet = std::log(op.dense_omega().determinant());
    CHECK(op.log_det_omega() == doctest::Approx(direct_logdet).epsilon(1e-8));
}

TEST_CASE("symmetric square root commutes with permutations") {
    // relabel the nodes of a path graph and compare the dense roots
    const int K = 6;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < K; ++i) edges.emplace_back(i, i + 1);
    const AdjacencyGraph g = AdjacencyGraph::from_edges(K, edges);

    std::vector<int> perm{3, 1, 5, 0, 4, 2};
    Matrix p = Matrix::Zero(K, K);
    for (int i = 0; i < K; ++i) p(i, perm[i]) = 1.0;

    const Matrix w_perm = p * g.W * p.transpose();
    const AdjacencyGraph g_perm = AdjacencyGraph::from_dense(w_perm);

    const SpatialOperator op(cache_of(g), 1.3, 0.7);
    const SpatialOperator op_perm(cache_of(g_perm), 1.3, 0.7);
    const Matrix lhs = op_perm.dense_omega_sqrt();
    const Matrix rhs = p * op.dense_omega_sqrt() * p.transpose();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("disconnected graphs are allowed, rhoS = 1 is not") {
    const AdjacencyGraph isolated = AdjacencyGraph::from_edges(3, {});
    const auto cache = cache_of(isolated);
    CHECK_NOTHROW(SpatialOperator(cache, 1.0, 0.99));
    CHECK_THROWS_AS(SpatialOperator(cache, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(SpatialOperator(cache, 0.0, 0.5), ValidationError);
}

TEST_CASE("adjacency validation catches bad matrices") {
    Matrix w(2, 2);
    w << 0, 1, 0, 0;  // asymmetric
    CHECK_THROWS_AS(AdjacencyGraph::from_dense(w), ValidationError);
    w << 1, 0, 0, 0;  // nonzero diagonal
    CHECK_THROWS_AS(AdjacencyGraph::from_dense(w), ValidationError);
    w << 0, 2, 2, 0;  // non-binary
    CHECK_THROWS_AS(AdjacencyGraph::from_dense(w), ValidationError);
    CHECK_THROWS_AS(AdjacencyGraph::from_edges(2, {{0, 0}}), ValidationError);
    CHECK_THROWS_AS(AdjacencyGraph::from_edges(2, {{0, 5}}), ValidationError);
}
