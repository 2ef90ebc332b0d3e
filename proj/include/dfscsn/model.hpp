#pragma once

#include <vector>

#include "dfscsn/common.hpp"
#include "dfscsn/rng.hpp"
#include "dfscsn/skew.hpp"
#include "dfscsn/spatial.hpp"

namespace dfscsn {

/// Full parameter set of the dynamic model. tau2/rhoS enter through a
/// SpatialOperator built from the shared eigencache; lambda through
/// SkewConstants. lambda = 0 is exactly the Gaussian dynamic CAR model.
struct ModelParams {
    Vector beta;          // r regression coefficients
    double sigma2 = 1.0;  // observation noise variance
    double tau2 = 1.0;    // latent variance scale
    double rhoS = 0.5;    // spatial dependence, [0, 1)
    double rhoT = 0.5;    // temporal AR coefficient, (0, 1)
    SkewConstants skew;   // lambda and derived constants

    void validate() const;
};

/// Panel observations: y[t] is the K-vector at time t, X[t] the K x r
/// feature matrix.
struct PanelData {
    int T = 0;
    int K = 0;
    int r = 0;
    Matrix y;                // T x K
    std::vector<Matrix> X;   // T matrices, each K x r
    AdjacencyGraph graph;

    void validate() const;
};

/// Latent field theta and the nonnegative augmentation alpha, both T x K.
struct LatentState {
    Matrix theta;
    Matrix alpha;
};

/// Temporal covariance R of the stacked AR(1) process and its
/// lower-triangular factor L, L[t1][t2] = rhoT^(t1-t2) for t2 <= t1.
/// L L' = R exactly; test support for the Kronecker form.
struct TemporalStructure {
    double rhoT;
    explicit TemporalStructure(double rhoT_) : rhoT(rhoT_) {}
    Matrix r_matrix(int T) const;
    Matrix lower_factor(int T) const;
};

/// Forward simulation through the AR recursion
///   theta_t = rhoT theta_{t-1} + w_t, w_t ~ FS-CSN_K(0, Omega, lambda, Omega^s),
/// theta_0 = 0, y_t = X_t beta + theta_t + N(0, sigma2 I). The returned
/// LatentState records the alpha draws actually used by each w_t.
struct SimulationResult {
    LatentState state;
    Matrix y;  // T x K
};
SimulationResult simulate(const ModelParams& params, const std::vector<Matrix>& X,
                          const SpatialOperator& op, int T, RngStream& rng);

/// Joint latent log density in the factorized AR form:
///   sum_t log f_FS-CSN(theta_t - rhoT theta_{t-1}; 0, Omega, lambda, Omega^s).
double latent_logpdf_ar(const Matrix& theta, const ModelParams& params,
                        const SpatialOperator& op);

/// Same density through the stacked TK-dimensional form with covariance
/// R (x) Omega and root L (x) Omega^s. Dense test-support path, T*K <= 200.
double latent_logpdf_kron(const Matrix& theta, const ModelParams& params,
                          const SpatialOperator& op);

/// Gaussian observation log likelihood sum_{t,k} log N(y_tk; (X_t beta)_k + theta_tk, sigma2).
double observation_loglik(const Matrix& y, const std::vector<Matrix>& X, const Matrix& theta,
                          const ModelParams& params);

}  // namespace dfscsn
