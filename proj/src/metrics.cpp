#include "dfscsn/metrics.hpp"

#include <cmath>

#include "dfscsn/stats.hpp"

namespace dfscsn {

namespace {

// Forward latent trajectory from theta_T under one parameter draw; returns
// the T_future x K latent field.
Matrix roll_latent(const Vector& theta_last, double rhoT, const FsCsnSpec& innovation,
                   int t_future, RngStream& rng) {
    const int K = static_cast<int>(theta_last.size());
    Matrix theta(t_future, K);
    Vector prev = theta_last;
    for (int s = 0; s < t_future; ++s) {
        const Vector w = fscsn_sample(innovation, rng);
        prev = rhoT * prev + w;
        theta.row(s) = prev.transpose();
    }
    return theta;
}

}  // namespace

PredictiveDraws predict_future(const PosteriorDraws& draws, const std::vector<Matrix>& X_future,
                               const std::shared_ptr<const SpatialEigenCache>& cache,
                               std::uint64_t seed) {
    const int S = draws.size();
    if (S < 1) throw ValidationError("predict_future: no posterior draws");
    const int t_future = static_cast<int>(X_future.size());
    if (t_future < 1) throw ValidationError("predict_future: X_future is empty");
    const int K = draws.K;
    for (const Matrix& x : X_future)
        if (x.rows() != K || x.cols() != draws.r)
            throw ValidationError("predict_future: X_future shape mismatch");

    PredictiveDraws out;
    out.T_future = t_future;
    out.K = K;
    out.seed = seed;
    out.yhat.resize(S, t_future * K);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < S; ++i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i));
        const SpatialOperator op(cache, draws.tau2[i], draws.rhoS[i]);
        const SpatialCovariance cov(op);
        const FsCsnSpec innovation(cov, Vector::Zero(K), skew_constants(draws.lambda[i]));
        const Matrix theta =
            roll_latent(draws.theta[i].row(draws.T - 1).transpose(), draws.rhoT[i], innovation,
                        t_future, rng);
        const double sd = std::sqrt(draws.sigma2[i]);
        for (int s = 0; s < t_future; ++s) {
            const Vector mean = X_future[s] * draws.beta.row(i).transpose() +
                                theta.row(s).transpose();
            for (int k = 0; k < K; ++k)
                out.yhat(i, s * K + k) = mean[k] + sd * rng.normal();
        }
    }
    return out;
}

double lmpl(const PosteriorDraws& draws, const PanelData& data) {
    const int S = draws.size();
    if (S < 1) throw ValidationError("lmpl: no posterior draws");
    if (draws.T != data.T || draws.K != data.K)
        throw ValidationError("lmpl: draws and data shapes differ");

    double total = 0.0;
    std::vector<double> neg_logdens(S);
    for (int t = 0; t < data.T; ++t) {
        for (int k = 0; k < data.K; ++k) {
            for (int i = 0; i < S; ++i) {
                const double mean =
                    data.X[t].row(k).dot(draws.beta.row(i)) + draws.theta[i](t, k);
                neg_logdens[i] = -norm_logpdf(data.y(t, k), mean, std::sqrt(draws.sigma2[i]));
            }
            // log CPO = log S - logsumexp(-log p_i)
            const double lse = log_sum_exp(neg_logdens);
            if (!std::isfinite(lse)) return -std::numeric_limits<double>::infinity();
            total += std::log(static_cast<double>(S)) - lse;
        }
    }
    return total;
}

double forward_predictive_logpdf(const Matrix& y_future, const std::vector<Matrix>& X_future,
                                 const Vector& theta_last, const ModelParams& params,
                                 const SpatialOperator& op, int qmc_points,
                                 std::uint64_t seed) {
    const int K = op.dim();
    const int t_future = static_cast<int>(y_future.rows());
    const int n = t_future * K;
    const SkewConstants& sc = params.skew;

    // stacked future block: y = X beta + rho^s theta_T + (L (x) I) w + noise,
    // w_t iid FS-CSN(0, Omega, lambda, Omega^s). The affine map and the
    // Gaussian noise keep the block CSN with q = n and Delta-normalizer 2^{-n}.
    const TemporalStructure temporal(params.rhoT);
    const Matrix roll = temporal.lower_factor(t_future);
    const Matrix r_roll = roll * roll.transpose();
    const Matrix omega = op.dense_omega();
    const Matrix omega_sqrt = op.dense_omega_sqrt();

    Vector mean(n);
    {
        Vector prev = theta_last;
        const Vector w_mean = -sc.b * sc.delta * sc.gamma * (omega_sqrt * Vector::Ones(K));
        Vector drift = Vector::Zero(K);
        for (int s = 0; s < t_future; ++s) {
            prev = params.rhoT * prev;
            drift = params.rhoT * drift + w_mean;
            mean.segment(s * K, K) =
                X_future[s] * params.beta + prev + drift;
        }
    }
    Matrix sigma_y(n, n);
    for (int s1 = 0; s1 < t_future; ++s1)
        for (int s2 = 0; s2 < t_future; ++s2)
            sigma_y.block(s1 * K, s2 * K, K, K) =
                (sc.gamma * sc.gamma * r_roll(s1, s2)) * omega;
    sigma_y += params.sigma2 * Matrix::Identity(n, n);

    Eigen::LLT<Matrix> llt(sigma_y);
    if (llt.info() != Eigen::Success)
        throw NumericalError("forward_predictive_logpdf: predictive covariance not SPD");
    Vector resid(n);
    for (int s = 0; s < t_future; ++s)
        resid.segment(s * K, K) = y_future.row(s).transpose() - mean.segment(s * K, K);
    double log_det = 0.0;
    for (int i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    const Vector half = llt.matrixL().solve(resid);
    const double log_phi = -0.5 * n * kLog2Pi - 0.5 * log_det - 0.5 * half.squaredNorm();
    if (sc.lambda == 0.0) return log_phi;  // Gaussian subclass: no CDF term at all

    // skew factor: A = lambda gamma (L' (x) Omega^s); u = A Sigma_y^{-1} resid;
    // Delta = (1+lambda^2) I - A Sigma_y^{-1} A'
    Matrix a(n, n);
    for (int s1 = 0; s1 < t_future; ++s1)
        for (int s2 = 0; s2 < t_future; ++s2)
            a.block(s1 * K, s2 * K, K, K) =
                (sc.lambda * sc.gamma * roll(s2, s1)) * omega_sqrt;
    const Matrix a_solved = llt.solve(a.transpose());  // Sigma_y^{-1} A'
    const Vector u = a_solved.transpose() * resid;
    Matrix delta = (1.0 + sc.lambda * sc.lambda) * Matrix::Identity(n, n) - a * a_solved;
    delta = 0.5 * (delta + delta.transpose());

    const double log_cdf = log_mvn_cdf_qmc(u, delta, qmc_points, 8, seed);
    return log_phi + log_cdf + n * std::log(2.0);
}

double flmpl(const PosteriorDraws& draws, const Matrix& y_future,
             const std::vector<Matrix>& X_future,
             const std::shared_ptr<const SpatialEigenCache>& cache, int inner_mc_size,
             std::uint64_t seed) {
    const int S = draws.size();
    if (S < 1) throw ValidationError("flmpl: no posterior draws");
    if (inner_mc_size < 1) throw ValidationError("flmpl: inner_mc_size must be >= 1");
    const int t_future = static_cast<int>(y_future.rows());
    const int K = draws.K;
    if (y_future.cols() != K || static_cast<int>(X_future.size()) != t_future)
        throw ValidationError("flmpl: future shapes mismatch");

    Vector per_draw(S);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < S; ++i) {
        const SpatialOperator op(cache, draws.tau2[i], draws.rhoS[i]);
        ModelParams params;
        params.beta = draws.beta.row(i).transpose();
        params.sigma2 = draws.sigma2[i];
        params.tau2 = draws.tau2[i];
        params.rhoS = draws.rhoS[i];
        params.rhoT = draws.rhoT[i];
        params.skew = skew_constants(draws.lambda[i]);
        per_draw[i] = forward_predictive_logpdf(
            y_future, X_future, draws.theta[i].row(draws.T - 1).transpose(), params, op,
            inner_mc_size, seed + static_cast<std::uint64_t>(i));
    }
    return per_draw.mean();
}

double energy_score(const Vector& y_future, const Matrix& samples) {
    const int S = static_cast<int>(samples.rows());
    if (S < 1) throw ValidationError("energy_score: need at least one sample");
    if (samples.cols() != y_future.size())
        throw ValidationError("energy_score: dimension mismatch");

    double fit = 0.0;
    for (int i = 0; i < S; ++i)
        fit += (samples.row(i).transpose() - y_future).norm();
    fit /= S;

    double spread = 0.0;
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < S; ++j)
            spread += (samples.row(i) - samples.row(j)).norm();
    spread /= 2.0 * static_cast<double>(S) * static_cast<double>(S);
    return fit - spread;
}

double frmse(const Vector& y_future, const Matrix& samples) {
    const int S = static_cast<int>(samples.rows());
    if (S < 1) throw ValidationError("frmse: need at least one sample");
    if (samples.cols() != y_future.size()) throw ValidationError("frmse: dimension mismatch");
    double acc = 0.0;
    for (int i = 0; i < S; ++i)
        acc += (samples.row(i).transpose() - y_future).squaredNorm();
    return std::sqrt(acc / S);
}

std::map<std::string, double> parameter_rmse(const PosteriorDraws& draws,
                                             const ModelParams& truth) {
    const int S = draws.size();
    if (S < 1) throw ValidationError("parameter_rmse: no posterior draws");
    if (truth.beta.size() != draws.r)
        throw ValidationError("parameter_rmse: beta dimension mismatch");

    auto rmse_of = [S](const Vector& trace, double target) {
        return std::sqrt((trace.array() - target).square().sum() / S);
    };
    std::map<std::string, double> out;
    for (int j = 0; j < draws.r; ++j)
        out["beta_" + std::to_string(j)] = rmse_of(draws.beta.col(j), truth.beta[j]);
    out["sigma2"] = rmse_of(draws.sigma2, truth.sigma2);
    out["tau2"] = rmse_of(draws.tau2, truth.tau2);
    out["rhoS"] = rmse_of(draws.rhoS, truth.rhoS);
    out["rhoT"] = rmse_of(draws.rhoT, truth.rhoT);
    if (draws.model_kind == ModelKind::DFsCsn)
        out["lambda"] = rmse_of(draws.lambda, truth.skew.lambda);
    return out;
}

}  // namespace dfscsn
