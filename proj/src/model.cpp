#include "dfscsn/model.hpp"

#include <cmath>
#include <unsupported/Eigen/KroneckerProduct>

#include "dfscsn/stats.hpp"

namespace dfscsn {

void ModelParams::validate() const {
    if (!(sigma2 > 0.0)) throw ValidationError("ModelParams: sigma2 must be > 0");
    if (!(tau2 > 0.0)) throw ValidationError("ModelParams: tau2 must be > 0");
    if (!(rhoS >= 0.0 && rhoS < 1.0)) throw ValidationError("ModelParams: rhoS must be in [0, 1)");
    if (!(rhoT >= 0.0 && rhoT < 1.0)) throw ValidationError("ModelParams: rhoT must be in [0, 1)");
}

void PanelData::validate() const {
    if (T < 1 || K < 1) throw ValidationError("PanelData: T and K must be >= 1");
    if (y.rows() != T || y.cols() != K) throw ValidationError("PanelData: y must be T x K");
    if (static_cast<int>(X.size()) != T) throw ValidationError("PanelData: need T feature matrices");
    for (const Matrix& xt : X)
        if (xt.rows() != K || xt.cols() != r)
            throw ValidationError("PanelData: every X_t must be K x r");
    if (!y.allFinite()) throw ValidationError("PanelData: y contains non-finite entries");
    for (const Matrix& xt : X)
        if (!xt.allFinite()) throw ValidationError("PanelData: X contains non-finite entries");
    if (graph.K != K) throw ValidationError("PanelData: graph size does not match K");
}

Matrix TemporalStructure::r_matrix(int T) const {
    Matrix R(T, T);
    // R_tt = sum_{i=1}^t rhoT^{2(i-1)}; off-diagonals decay by rhoT^{t2-t1}
    std::vector<double> diag(T);
    double acc = 0.0, pow2 = 1.0;
    for (int t = 0; t < T; ++t) {
        acc += pow2;
        pow2 *= rhoT * rhoT;
        diag[t] = acc;
    }
    for (int t1 = 0; t1 < T; ++t1) {
        R(t1, t1) = diag[t1];
        for (int t2 = t1 + 1; t2 < T; ++t2) {
            const double v = std::pow(rhoT, t2 - t1) * diag[t1];
            R(t1, t2) = v;
            R(t2, t1) = v;
        }
    }
    return R;
}

Matrix TemporalStructure::lower_factor(int T) const {
    Matrix L = Matrix::Zero(T, T);
    for (int t1 = 0; t1 < T; ++t1)
        for (int t2 = 0; t2 <= t1; ++t2) L(t1, t2) = std::pow(rhoT, t1 - t2);
    return L;
}

SimulationResult simulate(const ModelParams& params, const std::vector<Matrix>& X,
                          const SpatialOperator& op, int T, RngStream& rng) {
    params.validate();
    const int K = op.dim();
    if (static_cast<int>(X.size()) != T) throw ValidationError("simulate: X must have T entries");

    SimulationResult out;
    out.state.theta.resize(T, K);
    out.state.alpha.resize(T, K);
    out.y.resize(T, K);

    SpatialCovariance cov(op);
    const FsCsnSpec innovation(cov, Vector::Zero(K), params.skew);
    const double sd = std::sqrt(params.sigma2);

    Vector prev = Vector::Zero(K);
    for (int t = 0; t < T; ++t) {
        Vector alpha;
        const Vector w = fscsn_sample(innovation, rng, &alpha);
        const Vector theta_t = params.rhoT * prev + w;
        out.state.theta.row(t) = theta_t.transpose();
        out.state.alpha.row(t) = alpha.transpose();
        const Vector mean = X[t] * params.beta + theta_t;
        for (int k = 0; k < K; ++k) out.y(t, k) = mean[k] + sd * rng.normal();
        prev = theta_t;
    }
    return out;
}

double latent_logpdf_ar(const Matrix& theta, const ModelParams& params,
                        const SpatialOperator& op) {
    const int T = static_cast<int>(theta.rows());
    const int K = op.dim();
    if (theta.cols() != K) throw ValidationError("latent_logpdf_ar: theta must be T x K");

    SpatialCovariance cov(op);
    const FsCsnSpec innovation(cov, Vector::Zero(K), params.skew);

    double total = 0.0;
    Vector prev = Vector::Zero(K);
    for (int t = 0; t < T; ++t) {
        const Vector w = theta.row(t).transpose() - params.rhoT * prev;
        total += fscsn_logpdf(w, innovation);
        prev = theta.row(t).transpose();
    }
    return total;
}

double latent_logpdf_kron(const Matrix& theta, const ModelParams& params,
                          const SpatialOperator& op) {
    const int T = static_cast<int>(theta.rows());
    const int K = op.dim();
    if (theta.cols() != K) throw ValidationError("latent_logpdf_kron: theta must be T x K");
    if (T * K > 200)
        throw ValidationError("latent_logpdf_kron: dense path capped at T*K <= 200");

    const TemporalStructure temporal(params.rhoT);
    const Matrix R = temporal.r_matrix(T);
    const Matrix L = temporal.lower_factor(T);
    const Matrix sigma_big = Eigen::kroneckerProduct(R, op.dense_omega());
    const Matrix root_big = Eigen::kroneckerProduct(L, op.dense_omega_sqrt());

    DenseCovariance cov(sigma_big, root_big);
    const FsCsnSpec spec(cov, Vector::Zero(T * K), params.skew);

    // stack row-major in time: (theta_1', ..., theta_T')'
    Vector stacked(T * K);
    for (int t = 0; t < T; ++t) stacked.segment(t * K, K) = theta.row(t).transpose();
    return fscsn_logpdf(stacked, spec);
}

double observation_loglik(const Matrix& y, const std::vector<Matrix>& X, const Matrix& theta,
                          const ModelParams& params) {
    const int T = static_cast<int>(y.rows());
    const int K = static_cast<int>(y.cols());
    if (theta.rows() != T || theta.cols() != K || static_cast<int>(X.size()) != T)
        throw ValidationError("observation_loglik: shape mismatch");
    if (!(params.sigma2 > 0.0)) throw ValidationError("observation_loglik: sigma2 must be > 0");

    const double sd = std::sqrt(params.sigma2);
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
        const Vector mean = X[t] * params.beta + theta.row(t).transpose();
        for (int k = 0; k < K; ++k) total += norm_logpdf(y(t, k), mean[k], sd);
    }
    return total;
}

}  // namespace dfscsn
