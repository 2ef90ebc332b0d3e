#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dfscsn/common.hpp"
#include "dfscsn/model.hpp"
#include "dfscsn/rng.hpp"
#include "dfscsn/spatial.hpp"

namespace dfscsn {

/// Prior hyperparameters. Defaults follow the simulation-study setup:
/// beta ~ N(0, 100 I), sigma2, tau2 ~ InverseGamma(1, 0.01),
/// rhoS, rhoT ~ Uniform(0,1), lambda ~ N(0, 9).
struct Priors {
    double sigma2_beta = 100.0;
    double a_sigma2 = 1.0;
    double b_sigma2 = 0.01;
    double a_tau2 = 1.0;
    double b_tau2 = 0.01;
    double sigma2_lambda = 9.0;
    void validate() const;
};

enum class ModelKind { DFsCsn, DCar };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Random-walk step sizes on the transformed scales.
struct MhStepSizes {
    double log_tau2 = 0.5;
    double logit_rhoS = 0.5;
    double lambda = 0.5;
};

struct ChainConfig {
    int iterations = 2000;
    int burnin = 500;
    int thin = 1;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;  // substream id, e.g. chain index
    ModelKind model_kind = ModelKind::DFsCsn;
    MhStepSizes steps;
    bool adapt = true;  // Robbins-Monro step adaptation, burn-in only
    void validate() const;
};

struct AcceptanceCounter {
    std::int64_t accepted = 0;
    std::int64_t proposed = 0;
    double rate() const { return proposed > 0 ? double(accepted) / double(proposed) : 0.0; }
};

struct BlockTimings {
    double ffbs = 0.0;
    double lambda = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double sigma2 = 0.0;
    double rho_t = 0.0;
    double spatial = 0.0;
};

/// Kept draws of one chain, in iteration order.
struct PosteriorDraws {
    ModelKind model_kind = ModelKind::DFsCsn;
    int r = 0, T = 0, K = 0;
    Matrix beta;    // S x r
    Vector sigma2;  // S
    Vector tau2;
    Vector rhoS;
    Vector rhoT;
    Vector lambda;
    std::vector<Matrix> theta;  // S entries, each T x K
    std::vector<Matrix> alpha;  // S entries, each T x K
    AcceptanceCounter acc_tau2, acc_rhoS, acc_lambda;
    BlockTimings timings;
    MhStepSizes adapted_steps;

    int size() const { return static_cast<int>(sigma2.size()); }
};

/// One joint draw of theta_{1:T} from its Gaussian conditional given alpha,
/// by forward filtering / backward sampling. Filter covariances are
/// symmetrized every step and eigenvalue-floored at 1e-12 before inversion.
Matrix ffbs_theta(const Matrix& y, const std::vector<Matrix>& X, const Matrix& alpha,
                  const ModelParams& params, const SpatialOperator& op, RngStream& rng);

/// Exact mean and covariance of the stacked T*K-dimensional Gaussian that
/// ffbs_theta draws from, composed over the backward conditionals. Lets the
/// sampler be checked against dense-oracle moments to floating point rather
/// than Monte Carlo accuracy.
struct FfbsMoments {
    Vector mean;  // T*K, time-major
    Matrix cov;   // T*K x T*K
};
FfbsMoments ffbs_moments(const Matrix& y, const std::vector<Matrix>& X, const Matrix& alpha,
                         const ModelParams& params, const SpatialOperator& op);

/// Exact moments of the beta full conditional (N(mean, covariance)).
struct BetaConditional {
    Vector mean;
    Matrix covariance;
};
BetaConditional beta_conditional(const Matrix& y, const std::vector<Matrix>& X,
                                 const Matrix& theta, double sigma2, const Priors& priors);

/// One Gaussian random-walk Metropolis step on a scalar coordinate; the
/// kernel shared by the tau2 / rhoS / lambda updates.
struct MhStepResult {
    double value;
    bool accepted;
};
MhStepResult random_walk_mh(double current, double step,
                            const std::function<double(double)>& log_target, RngStream& rng);

/// alpha_t | theta ~ TN_K(m_t, I) coordinatewise, with
/// m_t = (lambda/gamma) Omega^{-s} (theta_t - rhoT theta_{t-1} + b delta gamma Omega^s 1).
Matrix sample_alpha(const Matrix& theta, const ModelParams& params, const SpatialOperator& op,
                    RngStream& rng);

Vector sample_beta(const Matrix& y, const std::vector<Matrix>& X, const Matrix& theta,
                   double sigma2, const Priors& priors, RngStream& rng);

double sample_sigma2(const Matrix& y, const std::vector<Matrix>& X, const Matrix& theta,
                     const Vector& beta, const Priors& priors, RngStream& rng);

/// Truncated-normal conditional on (0,1); T = 1 falls back to Uniform(0,1).
double sample_rho_t(const Matrix& theta, const Matrix& alpha, const ModelParams& params,
                    const SpatialOperator& op, RngStream& rng);

struct MhResult {
    double tau2;
    double rhoS;
    bool accepted_tau2 = false;
    bool accepted_rhoS = false;
};

/// One random-walk MH step each on log tau2 and logit rhoS, targeting the
/// Gaussian conditional of theta given alpha times the InverseGamma /
/// Uniform priors (Jacobian-corrected).
MhResult mh_update_spatial(const Matrix& theta, const Matrix& alpha, const ModelParams& params,
                           const Priors& priors,
                           const std::shared_ptr<const SpatialEigenCache>& cache, RngStream& rng,
                           const MhStepSizes& steps);

struct LambdaResult {
    double lambda;
    bool accepted = false;
};

/// Random-walk MH on lambda targeting the alpha-collapsed conditional
/// p(lambda | theta, Omega, rhoT) ∝ latent_logpdf_ar * N(lambda; 0, sigma2_lambda).
/// Callers must refresh alpha immediately afterwards (partially collapsed Gibbs).
LambdaResult mh_update_lambda(const Matrix& theta, const ModelParams& params,
                              const Priors& priors, const SpatialOperator& op, RngStream& rng,
                              double step);

/// The full blocked Gibbs sweep. Per-iteration update order:
/// theta (FFBS) -> lambda MH -> alpha -> beta -> sigma2 -> rhoT -> (tau2, rhoS) MH.
/// model_kind = DCar pins lambda = 0 and skips the lambda and alpha blocks.
PosteriorDraws run_chain(const PanelData& data,
                         const std::shared_ptr<const SpatialEigenCache>& cache,
                         const Priors& priors, const ChainConfig& config);

/// Several chains with substreams by chain index; results are identical for
/// any thread count.
std::vector<PosteriorDraws> run_chains(const PanelData& data,
                                       const std::shared_ptr<const SpatialEigenCache>& cache,
                                       const Priors& priors, const ChainConfig& config,
                                       int n_chains);

/// Initial-positive-sequence autocorrelation estimate; a constant trace has
/// ESS 1 by convention.
double effective_sample_size(const std::vector<double>& trace);

}  // namespace dfscsn
