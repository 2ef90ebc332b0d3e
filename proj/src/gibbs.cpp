#include "dfscsn/gibbs.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dfscsn/stats.hpp"

namespace dfscsn {

void Priors::validate() const {
    if (!(sigma2_beta > 0.0 && a_sigma2 > 0.0 && b_sigma2 > 0.0 && a_tau2 > 0.0 &&
          b_tau2 > 0.0 && sigma2_lambda > 0.0))
        throw ValidationError("Priors: all hyperparameters must be > 0");
}

void ChainConfig::validate() const {
    if (iterations < 1) throw ValidationError("ChainConfig: iterations must be >= 1");
    if (burnin < 0 || burnin >= iterations)
        throw ValidationError("ChainConfig: need 0 <= burnin < iterations");
    if (thin < 1) throw ValidationError("ChainConfig: thin must be >= 1");
    if (!(steps.log_tau2 >= 0.0 && steps.logit_rhoS >= 0.0 && steps.lambda >= 0.0))
        throw ValidationError("ChainConfig: step sizes must be >= 0");
}

std::string to_string(ModelKind kind) {
    return kind == ModelKind::DFsCsn ? "dfscsn" : "dcar";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "dfscsn") return ModelKind::DFsCsn;
    if (name == "dcar") return ModelKind::DCar;
    throw ValidationError("unknown model kind '" + name + "' (expected dfscsn or dcar)");
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Symmetrize and floor eigenvalues at 1e-12; large negative eigenvalues mean
// the filter genuinely lost positive definiteness.
Matrix psd_floor(const Matrix& m) {
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericalError("psd_floor: eigensolve failed");
    const double scale = std::max(1.0, std::abs(solver.eigenvalues().maxCoeff()));
    if (solver.eigenvalues().minCoeff() < -1e-6 * scale)
        throw NumericalError("filter covariance lost positive definiteness");
    const Vector floored = solver.eigenvalues().array().max(1e-12);
    return solver.eigenvectors() * floored.asDiagonal() * solver.eigenvectors().transpose();
}

// Gaussian conditional of theta given alpha, as a function of the spatial
// operator, plus the InverseGamma(tau2) prior (rhoS prior is flat).
double spatial_log_target(const Matrix& theta, const Matrix& alpha, const ModelParams& params,
                          const Priors& priors, const SpatialOperator& op) {
    const int T = static_cast<int>(theta.rows());
    const int K = static_cast<int>(theta.cols());
    const SkewConstants& sc = params.skew;
    const double lam2p1 = 1.0 + sc.lambda * sc.lambda;
    const double c = sc.gamma * sc.gamma / lam2p1;

    double quad = 0.0;
    Vector prev = Vector::Zero(K);
    for (int t = 0; t < T; ++t) {
        const Vector diff = theta.row(t).transpose() - params.rhoT * prev;
        Vector e = op.apply_omega_inv_sqrt(diff);
        e.array() += sc.b * sc.delta * sc.gamma;
        e -= (sc.gamma * sc.lambda / lam2p1) * alpha.row(t).transpose();
        quad += e.squaredNorm();
        prev = theta.row(t).transpose();
    }
    const double loglik = -0.5 * T * K * kLog2Pi -
                          0.5 * T * (K * std::log(c) + op.log_det_omega()) - 0.5 * quad / c;
    const double log_prior_tau2 =
        -(priors.a_tau2 + 1.0) * std::log(op.tau2()) - priors.b_tau2 / op.tau2();
    return loglik + log_prior_tau2;
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double inv_logit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

namespace {

struct FilterPass {
    std::vector<Vector> mu_pred, mu_filt;
    std::vector<Matrix> sig_pred, sig_filt;
};

FilterPass run_filter(const Matrix& y, const std::vector<Matrix>& X, const Matrix& alpha,
                      const ModelParams& params, const SpatialOperator& op) {
    const int T = static_cast<int>(y.rows());
    const int K = static_cast<int>(y.cols());
    if (alpha.rows() != T || alpha.cols() != K || static_cast<int>(X.size()) != T)
        throw ValidationError("ffbs_theta: shape mismatch");
    if ((alpha.array() < 0.0).any()) throw ValidationError("ffbs_theta: alpha must be >= 0");

    const SkewConstants& sc = params.skew;
    const double lam2p1 = 1.0 + sc.lambda * sc.lambda;
    const Matrix innov_cov = (sc.gamma * sc.gamma / lam2p1) * op.dense_omega();
    const Vector base_shift =
        -sc.b * sc.delta * sc.gamma * op.apply_omega_sqrt(Vector::Ones(K));
    const double alpha_coef = sc.gamma * sc.lambda / lam2p1;

    FilterPass f;
    f.mu_pred.resize(T);
    f.mu_filt.resize(T);
    f.sig_pred.resize(T);
    f.sig_filt.resize(T);
    for (int t = 0; t < T; ++t) {
        const Vector m_t = base_shift + alpha_coef * op.apply_omega_sqrt(alpha.row(t).transpose());
        if (t == 0) {
            f.mu_pred[t] = m_t;
            f.sig_pred[t] = innov_cov;
        } else {
            f.mu_pred[t] = params.rhoT * f.mu_filt[t - 1] + m_t;
            f.sig_pred[t] = psd_floor(params.rhoT * params.rhoT * f.sig_filt[t - 1] + innov_cov);
        }
        const Matrix gain_sys = f.sig_pred[t] + params.sigma2 * Matrix::Identity(K, K);
        Eigen::LLT<Matrix> llt(gain_sys);
        if (llt.info() != Eigen::Success)
            throw NumericalError("ffbs_theta: innovation system not positive definite");
        // gain = sig_pred (sig_pred + sigma2 I)^{-1}
        const Matrix gain = llt.solve(f.sig_pred[t]).transpose();
        const Vector resid = y.row(t).transpose() - X[t] * params.beta - f.mu_pred[t];
        f.mu_filt[t] = f.mu_pred[t] + gain * resid;
        f.sig_filt[t] = psd_floor(params.sigma2 * gain);
    }
    return f;
}

// smoother gain J_t = rhoT * sig_filt[t] * sig_pred[t+1]^{-1}
Matrix smoother_gain(const FilterPass& f, int t, double rhoT) {
    Eigen::LLT<Matrix> llt(f.sig_pred[t + 1]);
    if (llt.info() != Eigen::Success)
        throw NumericalError("ffbs_theta: predicted covariance not positive definite");
    return rhoT * llt.solve(f.sig_filt[t]).transpose();
}

}  // namespace

Matrix ffbs_theta(const Matrix& y, const std::vector<Matrix>& X, const Matrix& alpha,
                  const ModelParams& params, const SpatialOperator& op, RngStream& rng) {
    const int T = static_cast<int>(y.rows());
    const int K = static_cast<int>(y.cols());
    const FilterPass f = run_filter(y, X, alpha, params, op);

    Matrix theta(T, K);
    Vector draw = sample_mvn(f.mu_filt[T - 1], f.sig_filt[T - 1], rng);
    theta.row(T - 1) = draw.transpose();
    for (int t = T - 2; t >= 0; --t) {
        const Matrix gain = smoother_gain(f, t, params.rhoT);
        const Vector mean = f.mu_filt[t] + gain * (draw - f.mu_pred[t + 1]);
        const Matrix cov =
            f.sig_filt[t] - gain * f.sig_pred[t + 1] * gain.transpose();
        draw = sample_mvn(mean, psd_floor(cov), rng);
        theta.row(t) = draw.transpose();
    }
    return theta;
}

FfbsMoments ffbs_moments(const Matrix& y, const std::vector<Matrix>& X, const Matrix& alpha,
                         const ModelParams& params, const SpatialOperator& op) {
    const int T = static_cast<int>(y.rows());
    const int K = static_cast<int>(y.cols());
    const FilterPass f = run_filter(y, X, alpha, params, op);

    FfbsMoments m;
    m.mean = Vector::Zero(T * K);
    m.cov = Matrix::Zero(T * K, T * K);
    m.mean.segment((T - 1) * K, K) = f.mu_filt[T - 1];
    m.cov.block((T - 1) * K, (T - 1) * K, K, K) = f.sig_filt[T - 1];
    for (int t = T - 2; t >= 0; --t) {
        const Matrix gain = smoother_gain(f, t, params.rhoT);
        m.mean.segment(t * K, K) =
            f.mu_filt[t] + gain * (m.mean.segment((t + 1) * K, K) - f.mu_pred[t + 1]);
        const Matrix cond_cov =
            f.sig_filt[t] - gain * f.sig_pred[t + 1] * gain.transpose();
        m.cov.block(t * K, t * K, K, K) =
            cond_cov + gain * m.cov.block((t + 1) * K, (t + 1) * K, K, K) * gain.transpose();
        for (int s = t + 1; s < T; ++s) {
            const Matrix cross = gain * m.cov.block((t + 1) * K, s * K, K, K);
            m.cov.block(t * K, s * K, K, K) = cross;
            m.cov.block(s * K, t * K, K, K) = cross.transpose();
        }
    }
    return m;
}

Matrix sample_alpha(const Matrix& theta, const ModelParams& params, const SpatialOperator& op,
                    RngStream& rng) {
    const int T = static_cast<int>(theta.rows());
    const int K = static_cast<int>(theta.cols());
    const SkewConstants& sc = params.skew;

    Matrix alpha(T, K);
    Vector prev = Vector::Zero(K);
    for (int t = 0; t < T; ++t) {
        const Vector diff = theta.row(t).transpose() - params.rhoT * prev;
        Vector mean = (sc.lambda / sc.gamma) * op.apply_omega_inv_sqrt(diff);
        mean.array() += (sc.lambda / sc.gamma) * sc.b * sc.delta * sc.gamma;
        for (int k = 0; k < K; ++k)
            alpha(t, k) = sample_truncated_normal_lower0(mean[k], 1.0, rng);
        prev = theta.row(t).transpose();
    }
    return alpha;
}

BetaConditional beta_conditional(const Matrix& y, const std::vector<Matrix>& X,
                                 const Matrix& theta, double sigma2, const Priors& priors) {
    const int T = static_cast<int>(y.rows());
    const int r = static_cast<int>(X.at(0).cols());

    Matrix xtx = Matrix::Zero(r, r);
    Vector xte = Vector::Zero(r);
    for (int t = 0; t < T; ++t) {
        xtx.noalias() += X[t].transpose() * X[t];
        xte.noalias() += X[t].transpose() * (y.row(t).transpose() - theta.row(t).transpose());
    }
    const Matrix precision = xtx / sigma2 + Matrix::Identity(r, r) / priors.sigma2_beta;
    Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success)
        throw NumericalError("sample_beta: singular posterior precision");
    BetaConditional out;
    out.mean = llt.solve(xte / sigma2);
    out.covariance = llt.solve(Matrix::Identity(r, r));
    return out;
}

Vector sample_beta(const Matrix& y, const std::vector<Matrix>& X, const Matrix& theta,
                   double sigma2, const Priors& priors, RngStream& rng) {
    const BetaConditional cond = beta_conditional(y, X, theta, sigma2, priors);
    return sample_mvn(cond.mean, cond.covariance, rng);
}

double sample_sigma2(const Matrix& y, const std::vector<Matrix>& X, const Matrix& theta,
                     const Vector& beta, const Priors& priors, RngStream& rng) {
    const int T = static_cast<int>(y.rows());
    const int K = static_cast<int>(y.cols());
    double ssr = 0.0;
    for (int t = 0; t < T; ++t) {
        const Vector resid = y.row(t).transpose() - X[t] * beta - theta.row(t).transpose();
        ssr += resid.squaredNorm();
    }
    return rng.inverse_gamma(priors.a_sigma2 + 0.5 * K * T, priors.b_sigma2 + 0.5 * ssr);
}

double sample_rho_t(const Matrix& theta, const Matrix& alpha, const ModelParams& params,
                    const SpatialOperator& op, RngStream& rng) {
    const int T = static_cast<int>(theta.rows());
    if (T <= 1) return rng.uniform();  // empty sum: prior Uniform(0,1)

    const SkewConstants& sc = params.skew;
    const double lam2p1 = 1.0 + sc.lambda * sc.lambda;
    const double scale = lam2p1 / (sc.gamma * sc.gamma);

    double precision = 0.0;
    double linear = 0.0;
    for (int t = 1; t < T; ++t) {
        const Vector u_prev = op.apply_omega_inv_sqrt(theta.row(t - 1).transpose());
        Vector v = op.apply_omega_inv_sqrt(theta.row(t).transpose());
        v.array() += sc.b * sc.delta * sc.gamma;
        v -= (sc.gamma * sc.lambda / lam2p1) * alpha.row(t).transpose();
        precision += u_prev.squaredNorm();
        linear += u_prev.dot(v);
    }
    precision *= scale;
    linear *= scale;
    if (!(precision > 0.0) || !std::isfinite(precision))
        return rng.uniform();  // no information (theta identically zero)
    return sample_truncated_normal_interval(linear / precision, 1.0 / std::sqrt(precision), 0.0,
                                            1.0, rng);
}

MhStepResult random_walk_mh(double current, double step,
                            const std::function<double(double)>& log_target, RngStream& rng) {
    const double proposal = current + step * rng.normal();
    const double log_ratio = log_target(proposal) - log_target(current);
    if (std::log(rng.uniform()) < log_ratio) return {proposal, true};
    return {current, false};
}

MhResult mh_update_spatial(const Matrix& theta, const Matrix& alpha, const ModelParams& params,
                           const Priors& priors,
                           const std::shared_ptr<const SpatialEigenCache>& cache, RngStream& rng,
                           const MhStepSizes& steps) {
    MhResult out{params.tau2, params.rhoS, false, false};
    ModelParams cur = params;

    // log tau2 coordinate (Jacobian: + log tau2)
    {
        const auto target = [&](double log_tau2) {
            ModelParams cand = cur;
            cand.tau2 = std::exp(log_tau2);
            const SpatialOperator op(cache, cand.tau2, cand.rhoS);
            return spatial_log_target(theta, alpha, cand, priors, op) + log_tau2;
        };
        const MhStepResult step = random_walk_mh(std::log(cur.tau2), steps.log_tau2, target, rng);
        out.tau2 = std::exp(step.value);
        out.accepted_tau2 = step.accepted;
        cur.tau2 = out.tau2;
    }
    // logit rhoS coordinate (Jacobian: + log rho(1-rho))
    {
        const auto target = [&](double logit_rho) {
            ModelParams cand = cur;
            cand.rhoS = inv_logit(logit_rho);
            const SpatialOperator op(cache, cand.tau2, cand.rhoS);
            return spatial_log_target(theta, alpha, cand, priors, op) +
                   std::log(cand.rhoS * (1.0 - cand.rhoS));
        };
        const MhStepResult step =
            random_walk_mh(logit(cur.rhoS), steps.logit_rhoS, target, rng);
        out.rhoS = inv_logit(step.value);
        out.accepted_rhoS = step.accepted;
    }
    return out;
}

LambdaResult mh_update_lambda(const Matrix& theta, const ModelParams& params,
                              const Priors& priors, const SpatialOperator& op, RngStream& rng,
                              double step) {
    const auto target = [&](double lambda) {
        ModelParams cand = params;
        cand.skew = skew_constants(lambda);
        return latent_logpdf_ar(theta, cand, op) -
               0.5 * lambda * lambda / priors.sigma2_lambda;
    };
    const MhStepResult res = random_walk_mh(params.skew.lambda, step, target, rng);
    return {res.value, res.accepted};
}

namespace {

// Robbins-Monro scale adaptation toward 0.44 acceptance, burn-in only.
void adapt_step(double& step, bool accepted, int iter) {
    const double gain = 1.0 / std::pow(iter + 1.0, 0.6);
    step *= std::exp(gain * ((accepted ? 1.0 : 0.0) - 0.44));
    step = std::clamp(step, 1e-4, 1e4);
}

}  // namespace

PosteriorDraws run_chain(const PanelData& data,
                         const std::shared_ptr<const SpatialEigenCache>& cache,
                         const Priors& priors, const ChainConfig& config) {
    data.validate();
    priors.validate();
    config.validate();
    if (!cache || cache->K() != data.K)
        throw ValidationError("run_chain: eigencache does not match data");

    const int T = data.T, K = data.K, r = data.r;
    const bool skewed = config.model_kind == ModelKind::DFsCsn;
    RngStream rng(config.seed, config.stream);

    // least-squares initialization
    Matrix x_stack(T * K, r);
    Vector y_stack(T * K);
    for (int t = 0; t < T; ++t) {
        x_stack.middleRows(t * K, K) = data.X[t];
        y_stack.segment(t * K, K) = data.y.row(t).transpose();
    }
    ModelParams params;
    params.beta = (x_stack.transpose() * x_stack +
                   1e-10 * Matrix::Identity(r, r))
                      .llt()
                      .solve(x_stack.transpose() * y_stack);
    Matrix theta(T, K);
    {
        const Vector resid = y_stack - x_stack * params.beta;
        for (int t = 0; t < T; ++t) theta.row(t) = resid.segment(t * K, K).transpose();
        const double rvar = std::max(resid.squaredNorm() / resid.size(), 1e-8);
        params.sigma2 = 0.5 * rvar;
        params.tau2 = 0.5 * rvar;
    }
    params.rhoS = 0.5;
    params.rhoT = 0.5;
    params.skew = skew_constants(0.0);
    Matrix alpha = Matrix::Constant(T, K, params.skew.b);

    MhStepSizes steps = config.steps;
    const int kept = (config.iterations - config.burnin) / config.thin;

    PosteriorDraws draws;
    draws.model_kind = config.model_kind;
    draws.r = r;
    draws.T = T;
    draws.K = K;
    draws.beta.resize(kept, r);
    draws.sigma2.resize(kept);
    draws.tau2.resize(kept);
    draws.rhoS.resize(kept);
    draws.rhoT.resize(kept);
    draws.lambda.resize(kept);
    draws.theta.reserve(kept);
    draws.alpha.reserve(kept);

    int stored = 0;
    for (int iter = 0; iter < config.iterations; ++iter) {
        try {
            SpatialOperator op(cache, params.tau2, params.rhoS);

            auto t0 = Clock::now();
            theta = ffbs_theta(data.y, data.X, alpha, params, op, rng);
            draws.timings.ffbs += elapsed(t0);

            if (skewed) {
                t0 = Clock::now();
                const LambdaResult lr =
                    mh_update_lambda(theta, params, priors, op, rng, steps.lambda);
                params.skew = skew_constants(lr.lambda);
                draws.acc_lambda.proposed++;
                draws.acc_lambda.accepted += lr.accepted ? 1 : 0;
                if (config.adapt && iter < config.burnin)
                    adapt_step(steps.lambda, lr.accepted, iter);
                draws.timings.lambda += elapsed(t0);

                t0 = Clock::now();
                alpha = sample_alpha(theta, params, op, rng);
                draws.timings.alpha += elapsed(t0);
            }

            t0 = Clock::now();
            params.beta = sample_beta(data.y, data.X, theta, params.sigma2, priors, rng);
            draws.timings.beta += elapsed(t0);

            t0 = Clock::now();
            params.sigma2 = sample_sigma2(data.y, data.X, theta, params.beta, priors, rng);
            draws.timings.sigma2 += elapsed(t0);

            t0 = Clock::now();
            params.rhoT = sample_rho_t(theta, alpha, params, op, rng);
            draws.timings.rho_t += elapsed(t0);

            t0 = Clock::now();
            const MhResult mh =
                mh_update_spatial(theta, alpha, params, priors, cache, rng, steps);
            draws.acc_tau2.proposed++;
            draws.acc_tau2.accepted += mh.accepted_tau2 ? 1 : 0;
            draws.acc_rhoS.proposed++;
            draws.acc_rhoS.accepted += mh.accepted_rhoS ? 1 : 0;
            if (config.adapt && iter < config.burnin) {
                adapt_step(steps.log_tau2, mh.accepted_tau2, iter);
                adapt_step(steps.logit_rhoS, mh.accepted_rhoS, iter);
            }
            params.tau2 = mh.tau2;
            params.rhoS = mh.rhoS;
            draws.timings.spatial += elapsed(t0);
        } catch (const NumericalError& err) {
            throw NumericalError("chain aborted at iteration " + std::to_string(iter) + ": " +
                                 err.what());
        }

        const int idx = iter - config.burnin;
        if (idx >= 0 && (idx + 1) % config.thin == 0 && stored < kept) {
            draws.beta.row(stored) = params.beta.transpose();
            draws.sigma2[stored] = params.sigma2;
            draws.tau2[stored] = params.tau2;
            draws.rhoS[stored] = params.rhoS;
            draws.rhoT[stored] = params.rhoT;
            draws.lambda[stored] = params.skew.lambda;
            draws.theta.push_back(theta);
            draws.alpha.push_back(alpha);
            ++stored;
        }
    }
    draws.adapted_steps = steps;
    return draws;
}

std::vector<PosteriorDraws> run_chains(const PanelData& data,
                                       const std::shared_ptr<const SpatialEigenCache>& cache,
                                       const Priors& priors, const ChainConfig& config,
                                       int n_chains) {
    if (n_chains < 1) throw ValidationError("run_chains: need at least one chain");
    std::vector<PosteriorDraws> out(n_chains);
    std::vector<std::string> failures(n_chains);

#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < n_chains; ++c) {
        try {
            ChainConfig chain_cfg = config;
            chain_cfg.stream = config.stream + static_cast<std::uint64_t>(c);
            out[c] = run_chain(data, cache, priors, chain_cfg);
        } catch (const std::exception& err) {
            failures[c] = err.what();
        }
    }
    for (int c = 0; c < n_chains; ++c)
        if (!failures[c].empty())
            throw NumericalError("chain " + std::to_string(c) + " failed: " + failures[c]);
    return out;
}

double effective_sample_size(const std::vector<double>& trace) {
    const int n = static_cast<int>(trace.size());
    if (n < 10) throw ValidationError("effective_sample_size: trace shorter than 10");

    double mean = 0.0;
    for (double v : trace) mean += v;
    mean /= n;
    auto autocov = [&](int lag) {
        double acc = 0.0;
        for (int i = 0; i + lag < n; ++i) acc += (trace[i] - mean) * (trace[i + lag] - mean);
        return acc / n;
    };
    const double gamma0 = autocov(0);
    if (!(gamma0 > 0.0)) return 1.0;  // constant trace

    // Geyer's initial positive sequence on pairs of autocorrelations
    double iact = -1.0;
    for (int m = 0; 2 * m + 1 < n; ++m) {
        const double pair = (autocov(2 * m) + autocov(2 * m + 1)) / gamma0;
        if (pair <= 0.0) break;
        iact += 2.0 * pair;
    }
    iact = std::max(iact, 1e-12);
    return std::clamp(static_cast<double>(n) / iact, 1.0, static_cast<double>(n));
}

}  // namespace dfscsn
