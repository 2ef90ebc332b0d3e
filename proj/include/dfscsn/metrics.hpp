#pragma once

#include <map>
#include <string>

#include "dfscsn/gibbs.hpp"

namespace dfscsn {

/// Simulated future observations, one row per posterior draw, columns
/// stacked time-major: (t = T+1 ... T+T_future) x (k = 0 ... K-1).
struct PredictiveDraws {
    Matrix yhat;  // S x (T_future * K)
    int T_future = 0;
    int K = 0;
    std::uint64_t seed = 0;
    std::uint64_t source_stream = 0;
};

/// Roll the AR recursion forward from each kept draw's theta_T:
/// theta_{T+s} = rhoT theta_{T+s-1} + w, w ~ FS-CSN_K(0, Omega_i, lambda_i, Omega_i^s),
/// then yhat = X_future beta_i + theta + N(0, sigma2_i I).
PredictiveDraws predict_future(const PosteriorDraws& draws, const std::vector<Matrix>& X_future,
                               const std::shared_ptr<const SpatialEigenCache>& cache,
                               std::uint64_t seed);

/// Log marginal predictive likelihood via harmonic-mean CPO per cell
/// (observation density conditioned on the sampled theta).
double lmpl(const PosteriorDraws& draws, const PanelData& data);

/// log p(y_{T+1:T+Tf} | Theta, theta_T), evaluated in closed form: the
/// stacked future block is CSN (the AR roll is an affine map of iid FS-CSN
/// innovations and observation noise convolves to another CSN whose
/// normalizer is exactly 2^{-n}), so the density is one Gaussian term plus
/// one n-dimensional normal CDF, computed by seeded QMC with qmc_points per
/// randomization. lambda = 0 short-circuits to the exact Gaussian predictive.
double forward_predictive_logpdf(const Matrix& y_future, const std::vector<Matrix>& X_future,
                                 const Vector& theta_last, const ModelParams& params,
                                 const SpatialOperator& op, int qmc_points, std::uint64_t seed);

/// Forward LMPL: (1/S) sum_i log p(y_future | Theta_i) with the inner density
/// from forward_predictive_logpdf; inner_mc_size is the QMC budget per draw.
double flmpl(const PosteriorDraws& draws, const Matrix& y_future,
             const std::vector<Matrix>& X_future,
             const std::shared_ptr<const SpatialEigenCache>& cache, int inner_mc_size,
             std::uint64_t seed);

/// Energy score (1/S) sum ||y - yhat_i|| - (1/2S^2) sum_ij ||yhat_i - yhat_j||.
double energy_score(const Vector& y_future, const Matrix& samples);

/// sqrt((1/S) sum_i ||y - yhat_i||^2), no division by dimension.
double frmse(const Vector& y_future, const Matrix& samples);

/// Per-parameter root mean squared error over posterior draws against a
/// known truth; keys beta_0.., sigma2, tau2, rhoS, rhoT (lambda for D-FS-CSN).
std::map<std::string, double> parameter_rmse(const PosteriorDraws& draws,
                                             const ModelParams& truth);

}  // namespace dfscsn
