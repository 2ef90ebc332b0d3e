// Acceptance suite: every release criterion with its stated tolerance, one
// PASS/FAIL line each. Returns the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dfscsn/harness.hpp"
#include "dfscsn/io.hpp"
#include "dfscsn/stats.hpp"
#include "oracles.hpp"

using namespace dfscsn;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> run;
};

std::shared_ptr<const SpatialEigenCache> cache_of(const AdjacencyGraph& g) {
    return std::make_shared<const SpatialEigenCache>(eigendecompose_laplacian(g));
}

ModelParams make_params(double lambda, double rhoT, double sigma2, double tau2 = 1.0,
                        double rhoS = 0.5) {
    ModelParams p;
    p.beta = Vector::Zero(1);
    p.sigma2 = sigma2;
    p.tau2 = tau2;
    p.rhoS = rhoS;
    p.rhoT = rhoT;
    p.skew = skew_constants(lambda);
    return p;
}

// ---- 1: Prop 3.2 equivalence -------------------------------------------------

bool run_prop32(std::string& detail) {
    RngStream rng(1001, 0);
    double worst = 0.0;
    const double lambdas[3] = {0.0, 2.5, 7.0};
    for (int rep = 0; rep < 100; ++rep) {
        const int T = 1 + static_cast<int>(rng.uniform() * 5);   // <= 5
        const int K = 1 + static_cast<int>(rng.uniform() * 4);   // <= 4
        const AdjacencyGraph g = build_grid_graph(1, K);
        const SpatialOperator op(cache_of(g), 0.3 + 2.0 * rng.uniform(),
                                 rng.uniform() * 0.95);
        ModelParams p = make_params(lambdas[rep % 3], 0.02 + 0.95 * rng.uniform(), 1.0,
                                    op.tau2(), op.rhoS());
        Matrix theta(T, K);
        for (int t = 0; t < T; ++t)
            for (int k = 0; k < K; ++k) theta(t, k) = 2.0 * rng.normal();
        const double diff =
            std::abs(latent_logpdf_ar(theta, p, op) - latent_logpdf_kron(theta, p, op));
        worst = std::max(worst, diff);
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max |ar - kron| = %.3e (tol 1e-8)", worst);
    detail = buf;
    return worst <= 1e-8;
}

// ---- 2: Prop 3.1 symmetry + Cholesky counterexample ---------------------------

bool run_prop31(std::string& detail) {
    RngStream rng(1002, 0);
    double worst_sym = 0.0;
    for (int rep = 0; rep < 60; ++rep) {
        const int p = 2 + static_cast<int>(rng.uniform() * 5);  // <= 6
        Matrix a(p, p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) a(i, j) = rng.normal();
        const Matrix omega = a * a.transpose() + 0.5 * Matrix::Identity(p, p);
        Vector mu(p), z(p);
        for (int i = 0; i < p; ++i) {
            mu[i] = rng.normal();
            z[i] = rng.normal();
        }
        std::vector<int> perm(p);
        for (int i = 0; i < p; ++i) perm[i] = i;
        for (int i = p - 1; i > 0; --i)
            std::swap(perm[i], perm[static_cast<int>(rng.uniform() * (i + 1))]);
        Matrix pm = Matrix::Zero(p, p);
        for (int i = 0; i < p; ++i) pm(i, perm[i]) = 1.0;

        const double lam = (rep % 3 == 0) ? 0.0 : (rep % 3 == 1 ? 2.5 : 7.0);
        const DenseCovariance cov = DenseCovariance::spectral(omega);
        const FsCsnSpec spec(cov, mu, skew_constants(lam));
        const DenseCovariance cov_p = DenseCovariance::spectral(pm * omega * pm.transpose());
        const FsCsnSpec spec_p(cov_p, pm * mu, skew_constants(lam));
        worst_sym =
            std::max(worst_sym, std::abs(fscsn_logpdf(z, spec) - fscsn_logpdf(pm * z, spec_p)));
    }

    // Cholesky violation witness
    Matrix omega(3, 3);
    omega << 2.0, 0.9, 0.3, 0.9, 1.5, 0.5, 0.3, 0.5, 1.2;
    Vector z(3);
    z << 0.7, -0.4, 1.1;
    Matrix pm = Matrix::Zero(3, 3);
    pm(0, 2) = pm(1, 0) = pm(2, 1) = 1.0;
    const DenseCovariance chol = DenseCovariance::cholesky(omega);
    const FsCsnSpec spec(chol, Vector::Zero(3), skew_constants(2.5));
    const DenseCovariance chol_p = DenseCovariance::cholesky(pm * omega * pm.transpose());
    const FsCsnSpec spec_p(chol_p, Vector::Zero(3), skew_constants(2.5));
    const double viol = std::abs(fscsn_logpdf(z, spec) - fscsn_logpdf(pm * z, spec_p));

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "max symmetric-root diff = %.3e (tol 1e-10); Cholesky violation = %.3e (> 1e-6)",
                  worst_sym, viol);
    detail = buf;
    return worst_sym <= 1e-10 && viol > 1e-6;
}

// ---- 3: Prop 3.3 Mardia ------------------------------------------------------

bool run_mardia(std::string& detail) {
    struct Case {
        int p;
        double lam;
    };
    std::ostringstream msg;
    bool ok = true;
    int stream = 0;
    for (const Case c : {Case{1, 2.5}, Case{2, 2.5}, Case{1, 7.0}}) {
        RngStream rng(1003, ++stream);
        const int n = 200000;
        const DenseCovariance cov = DenseCovariance::spectral(Matrix::Identity(c.p, c.p));
        const FsCsnSpec spec(cov, Vector::Zero(c.p), skew_constants(c.lam));
        Matrix samples(n, c.p);
        for (int i = 0; i < n; ++i) samples.row(i) = fscsn_sample(spec, rng).transpose();
        const MardiaMoments emp = mardia_empirical(samples);
        const MardiaMoments cf = mardia_closed_form(c.p, c.lam);
        const double ms_rel = std::abs(emp.skewness - cf.skewness) / cf.skewness;
        const double mk_rel = std::abs(emp.kurtosis - cf.kurtosis) / cf.kurtosis;
        ok = ok && ms_rel < 0.05 && mk_rel < 0.05;
        msg << "(p=" << c.p << ",l=" << c.lam << "): MS rel " << std::round(1e4 * ms_rel) / 1e2
            << "%, MK rel " << std::round(1e4 * mk_rel) / 1e2 << "%  ";
    }
    // lambda = 0 reference
    {
        RngStream rng(1003, 9);
        const int n = 200000, p = 2;
        const DenseCovariance cov = DenseCovariance::spectral(Matrix::Identity(p, p));
        const FsCsnSpec spec(cov, Vector::Zero(p), skew_constants(0.0));
        Matrix samples(n, p);
        for (int i = 0; i < n; ++i) samples.row(i) = fscsn_sample(spec, rng).transpose();
        const MardiaMoments emp = mardia_empirical(samples);
        const bool gauss_ok = emp.skewness < 0.002 &&
                              std::abs(emp.kurtosis - 8.0) <
                                  3 * std::sqrt(8.0 * p * (p + 2.0) / n);
        ok = ok && gauss_ok;
        msg << "lambda=0: MS " << emp.skewness << ", MK " << emp.kurtosis << " (want 0, 8)";
    }
    detail = msg.str();
    return ok;
}

// ---- 4: mean / covariance preservation ----------------------------------------

bool run_preservation(std::string& detail) {
    const AdjacencyGraph g = build_grid_graph(1, 2);
    const auto cache = cache_of(g);
    const int T = 2, K = 2, n = 50000;
    std::ostringstream msg;
    bool ok = true;
    int stream = 0;
    for (double lam : {0.0, 2.5, 7.0}) {
        ModelParams p = make_params(lam, 0.5, 1.0);
        const SpatialOperator op(cache, p.tau2, p.rhoS);
        RngStream rng(1004, ++stream);
        const std::vector<Matrix> X(T, Matrix::Zero(K, 1));
        Matrix stacked(n, T * K);
        for (int i = 0; i < n; ++i) {
            const SimulationResult sim = simulate(p, X, op, T, rng);
            for (int t = 0; t < T; ++t)
                stacked.block(i, t * K, 1, K) = sim.state.theta.row(t);
        }
        const Matrix want = oracle::kron(TemporalStructure(p.rhoT).r_matrix(T),
                                         op.dense_omega());
        const Vector mean = stacked.colwise().mean();
        Matrix centered = stacked.rowwise() - mean.transpose();
        const Matrix cov = centered.transpose() * centered / n;

        double worst_mean_z = 0.0, worst_cov_z = 0.0;
        for (int j = 0; j < T * K; ++j)
            worst_mean_z =
                std::max(worst_mean_z, std::abs(mean[j]) / std::sqrt(want(j, j) / n));
        for (int i = 0; i < T * K; ++i)
            for (int j = 0; j < T * K; ++j) {
                const double se =
                    std::sqrt((want(i, i) * want(j, j) + want(i, j) * want(i, j)) / n);
                worst_cov_z = std::max(worst_cov_z, std::abs(cov(i, j) - want(i, j)) / se);
            }
        ok = ok && worst_mean_z < 3.0 && worst_cov_z < 3.0;
        msg << "l=" << lam << ": max |z|(mean) " << std::round(100 * worst_mean_z) / 100
            << ", max |z|(cov) " << std::round(100 * worst_cov_z) / 100 << "  ";
    }
    detail = msg.str() + "(3 SE bound)";
    return ok;
}

// ---- 5: Gibbs vs quadrature on the exact CSN posterior -------------------------

bool run_sampler_vs_oracle(std::string& detail) {
    const AdjacencyGraph g1 = build_grid_graph(1, 1);
    const auto cache = cache_of(g1);
    const double lam = 2.5, sigma2 = 0.3;
    std::ostringstream msg;
    bool ok = true;

    // K = 1, T = 1
    {
        ModelParams p = make_params(lam, 0.5, sigma2, 1.0, 0.0);  // omega = 1
        const SpatialOperator op(cache, 1.0, 0.0);
        Matrix y(1, 1);
        y << 1.2;
        const std::vector<Matrix> X(1, Matrix::Zero(1, 1));
        RngStream rng(1005, 1);
        Matrix alpha = Matrix::Constant(1, 1, p.skew.b);
        std::vector<double> trace;
        trace.reserve(100000);
        for (int i = 0; i < 100500; ++i) {
            const Matrix theta = ffbs_theta(y, X, alpha, p, op, rng);
            alpha = sample_alpha(theta, p, op, rng);
            if (i >= 500) trace.push_back(theta(0, 0));
        }
        double mean = 0.0, var = 0.0;
        for (double v : trace) mean += v;
        mean /= trace.size();
        for (double v : trace) var += (v - mean) * (v - mean);
        var /= trace.size();
        const double se = std::sqrt(var / effective_sample_size(trace));

        const Matrix eye = Matrix::Identity(1, 1);
        const CsnParams post =
            oracle::csn_posterior(Vector::Constant(1, 1.2), Vector::Zero(1), sigma2, eye, eye,
                                  eye, eye, lam);
        const auto gl = oracle::GaussLegendre::on(-10.0, 10.0, 400);
        double norm = 0.0, mean_quad = 0.0;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            const double f =
                std::exp(csn_logpdf_oracle(Vector::Constant(1, gl.nodes[i]), post));
            norm += gl.weights[i] * f;
            mean_quad += gl.weights[i] * gl.nodes[i] * f;
        }
        mean_quad /= norm;
        const double z = std::abs(mean - mean_quad) / se;
        ok = ok && std::abs(norm - 1.0) < 1e-6 && z < 3.0;
        msg << "T=1: |int-1| = " << std::abs(norm - 1.0) << ", |z| = "
            << std::round(100 * z) / 100 << "  ";
    }

    // K = 1, T = 2 (p = q = 2 posterior, bivariate-CDF oracle)
    {
        ModelParams p = make_params(lam, 0.5, sigma2, 1.0, 0.0);
        const SpatialOperator op(cache, 1.0, 0.0);
        Matrix y(2, 1);
        y << 1.2, -0.4;
        const std::vector<Matrix> X(2, Matrix::Zero(1, 1));
        RngStream rng(1005, 2);
        Matrix alpha = Matrix::Constant(2, 1, p.skew.b);
        std::vector<double> trace0, trace1;
        trace0.reserve(100000);
        trace1.reserve(100000);
        for (int i = 0; i < 100500; ++i) {
            const Matrix theta = ffbs_theta(y, X, alpha, p, op, rng);
            alpha = sample_alpha(theta, p, op, rng);
            if (i >= 500) {
                trace0.push_back(theta(0, 0));
                trace1.push_back(theta(1, 0));
            }
        }
        const TemporalStructure ts(p.rhoT);
        const Matrix eye = Matrix::Identity(1, 1);
        const CsnParams post = oracle::csn_posterior(
            Vector(Eigen::Vector2d(1.2, -0.4)), Vector::Zero(2), sigma2, ts.r_matrix(2),
            ts.lower_factor(2), eye, eye, lam);

        const auto gl = oracle::GaussLegendre::on(-8.0, 8.0, 160);
        double norm = 0.0, m0 = 0.0, m1 = 0.0;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
                Vector zv(2);
                zv << gl.nodes[i], gl.nodes[j];
                const double f = std::exp(csn_logpdf_oracle(zv, post));
                const double w = gl.weights[i] * gl.weights[j];
                norm += w * f;
                m0 += w * zv[0] * f;
                m1 += w * zv[1] * f;
            }
        }
        m0 /= norm;
        m1 /= norm;
        auto zscore = [](const std::vector<double>& trace, double target) {
            double mean = 0.0, var = 0.0;
            for (double v : trace) mean += v;
            mean /= trace.size();
            for (double v : trace) var += (v - mean) * (v - mean);
            var /= trace.size();
            return std::abs(mean - target) / std::sqrt(var / effective_sample_size(trace));
        };
        const double z0 = zscore(trace0, m0), z1 = zscore(trace1, m1);
        ok = ok && std::abs(norm - 1.0) < 1e-6 && z0 < 3.0 && z1 < 3.0;
        msg << "T=2: |int-1| = " << std::abs(norm - 1.0) << ", |z| = ("
            << std::round(100 * z0) / 100 << ", " << std::round(100 * z1) / 100 << ")";
    }
    detail = msg.str() + "  (3 SE bound)";
    return ok;
}

// ---- 6: Gaussian-subclass exactness -------------------------------------------

bool run_gaussian_subclass(std::string& detail) {
    const AdjacencyGraph g = build_grid_graph(1, 2);
    const auto cache = cache_of(g);
    std::ostringstream msg;
    bool ok = true;

    // theta block: filter moments vs dense conditional at 1e-6
    {
        ModelParams p = make_params(0.0, 0.6, 0.25);
        const SpatialOperator op(cache, p.tau2, p.rhoS);
        RngStream rng(1006, 0);
        const int T = 3, K = 2;
        Matrix y(T, K);
        for (int t = 0; t < T; ++t)
            for (int k = 0; k < K; ++k) y(t, k) = rng.normal();
        const Matrix alpha = Matrix::Zero(T, K);
        const std::vector<Matrix> X(T, Matrix::Zero(K, 1));
        const FfbsMoments got = ffbs_moments(y, X, alpha, p, op);
        const oracle::DensePosterior want = oracle::augmented_dense_posterior(
            y, Matrix::Zero(T, K), alpha, p.sigma2, p.rhoT, p.skew, op.dense_omega(),
            op.dense_omega_sqrt());
        const double mean_err = (got.mean - want.mean).cwiseAbs().maxCoeff();
        const double cov_err = (got.cov - want.cov).cwiseAbs().maxCoeff();
        ok = ok && mean_err < 1e-6 && cov_err < 1e-6;
        msg << "theta block: mean err " << mean_err << ", cov err " << cov_err << " (tol 1e-6)";
    }

    // conjugate blocks at 3 SE
    {
        RngStream rng(1006, 1);
        const int T = 4, K = 2;
        Matrix y(T, K), theta(T, K);
        for (int t = 0; t < T; ++t)
            for (int k = 0; k < K; ++k) {
                y(t, k) = rng.normal();
                theta(t, k) = 0.3 * rng.normal();
            }
        std::vector<Matrix> X(T, Matrix::Ones(K, 1));
        Priors priors;

        // beta: draws vs stated conditional
        const BetaConditional cond = beta_conditional(y, X, theta, 0.7, priors);
        const int n = 20000;
        oracle::RunningStat beta_stat;
        for (int i = 0; i < n; ++i)
            beta_stat.add(sample_beta(y, X, theta, 0.7, priors, rng)[0]);
        const double z_beta =
            std::abs(beta_stat.mean - cond.mean[0]) / std::sqrt(cond.covariance(0, 0) / n);

        // sigma2: reciprocal draws are Gamma with known mean
        Vector beta_fix = Vector::Constant(1, 0.4);
        double ssr = 0.0;
        for (int t = 0; t < T; ++t)
            ssr += (y.row(t).transpose() - X[t] * beta_fix - theta.row(t).transpose())
                       .squaredNorm();
        const double shape = priors.a_sigma2 + 0.5 * K * T;
        const double scale = priors.b_sigma2 + 0.5 * ssr;
        oracle::RunningStat recip;
        for (int i = 0; i < n; ++i)
            recip.add(1.0 / sample_sigma2(y, X, theta, beta_fix, priors, rng));
        const double z_sigma = std::abs(recip.mean - shape / scale) /
                               (std::sqrt(shape) / scale / std::sqrt(double(n)));

        // rhoT: truncated-normal moments from the stated precision/mean
        ModelParams p = make_params(0.0, 0.5, 0.7);
        const SpatialOperator op(cache, p.tau2, p.rhoS);
        const Matrix alpha = Matrix::Zero(T, K);
        double prec = 0.0, lin = 0.0;
        for (int t = 1; t < T; ++t) {
            const Vector uprev = op.apply_omega_inv_sqrt(theta.row(t - 1).transpose());
            prec += uprev.squaredNorm();
            lin += uprev.dot(op.apply_omega_inv_sqrt(theta.row(t).transpose()));
        }
        const double mu_rho = lin / prec, sd_rho = 1.0 / std::sqrt(prec);
        const double zl = (0.0 - mu_rho) / sd_rho, zh = (1.0 - mu_rho) / sd_rho;
        const double mass = norm_cdf(zh) - norm_cdf(zl);
        const double want_mean = mu_rho + sd_rho * (norm_pdf(zl) - norm_pdf(zh)) / mass;
        oracle::RunningStat rho_stat;
        for (int i = 0; i < n; ++i) rho_stat.add(sample_rho_t(theta, alpha, p, op, rng));
        const double z_rho = std::abs(rho_stat.mean - want_mean) / rho_stat.se();

        ok = ok && z_beta < 3.0 && z_sigma < 3.0 && z_rho < 3.0;
        msg << "; conjugates |z|: beta " << std::round(100 * z_beta) / 100 << ", sigma2 "
            << std::round(100 * z_sigma) / 100 << ", rhoT " << std::round(100 * z_rho) / 100;
    }
    detail = msg.str();
    return ok;
}

// ---- 7: O(T K^3) scaling -------------------------------------------------------

double time_block(const PanelData& data, int reps) {
    const auto cache = cache_of(data.graph);
    ModelParams p = make_params(2.5, 0.5, 0.01);
    const SpatialOperator op(cache, p.tau2, p.rhoS);
    RngStream rng(1007, data.T);
    Matrix alpha = Matrix::Constant(data.T, data.K, p.skew.b);
    Matrix theta = ffbs_theta(data.y, data.X, alpha, p, op, rng);
    alpha = sample_alpha(theta, p, op, rng);
    double best = 1e300;
    for (int chunk = 0; chunk < 5; ++chunk) {
        const auto t0 = Clock::now();
        for (int i = 0; i < reps; ++i) {
            theta = ffbs_theta(data.y, data.X, alpha, p, op, rng);
            alpha = sample_alpha(theta, p, op, rng);
        }
        best = std::min(best,
                        std::chrono::duration<double>(Clock::now() - t0).count() / reps);
    }
    return best;
}

bool run_scaling(std::string& detail) {
    const int Ts[3] = {10, 20, 40};
    double secs[3];
    for (int i = 0; i < 3; ++i) {
        SimStudyCase sc;
        sc.T = Ts[i];
        const ModelParams truth = sc.truth();
        const AdjacencyGraph g = build_grid_graph(5, 5);
        const auto cache = cache_of(g);
        const SpatialOperator op(cache, truth.tau2, truth.rhoS);
        RngStream rng(1007, 7 + i);
        std::vector<Matrix> X(Ts[i], Matrix::Ones(25, 1));
        const SimulationResult sim = simulate(truth, X, op, Ts[i], rng);
        PanelData data;
        data.T = Ts[i];
        data.K = 25;
        data.r = 1;
        data.y = sim.y;
        data.X = std::move(X);
        data.graph = g;
        secs[i] = time_block(data, 25);
    }
    // least squares fit secs ~ a + b T and the growth exponent
    const double mean_t = (10.0 + 20.0 + 40.0) / 3.0;
    const double mean_s = (secs[0] + secs[1] + secs[2]) / 3.0;
    double sxx = 0.0, sxy = 0.0, sst = 0.0, sse = 0.0;
    const double ts[3] = {10.0, 20.0, 40.0};
    for (int i = 0; i < 3; ++i) {
        sxx += (ts[i] - mean_t) * (ts[i] - mean_t);
        sxy += (ts[i] - mean_t) * (secs[i] - mean_s);
    }
    const double slope = sxy / sxx, intercept = mean_s - slope * mean_t;
    for (int i = 0; i < 3; ++i) {
        sst += (secs[i] - mean_s) * (secs[i] - mean_s);
        const double fit = intercept + slope * ts[i];
        sse += (secs[i] - fit) * (secs[i] - fit);
    }
    const double r2 = 1.0 - sse / sst;
    const double exponent = std::log(secs[2] / secs[0]) / std::log(4.0);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "t(10,20,40) = (%.2f, %.2f, %.2f) ms, R^2 = %.4f, exponent = %.3f (< 1.2)",
                  1e3 * secs[0], 1e3 * secs[1], 1e3 * secs[2], r2, exponent);
    detail = buf;
    return r2 > 0.99 && exponent < 1.2;
}

// ---- 8: desk-scale simulation study --------------------------------------------

bool run_sim_study(std::string& detail) {
    ChainConfig cfg;
    cfg.iterations = 800;
    cfg.burnin = 300;
    cfg.thin = 1;

    std::vector<SimStudyCase> cases;
    for (const SimStudyCase& sc : enumerate_cases())
        if (sc.case_id == 1 || sc.case_id == 3) cases.push_back(sc);
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);

    const auto results = run_sweep(cases, seeds, cfg, Priors{}, 60);

    // index results by (case, rhoS, seed, model)
    std::map<std::tuple<int, double, std::uint64_t, std::string>, const ReplicationResult*> by_key;
    int failures = 0;
    for (const auto& res : results) {
        by_key[{res.case_id, res.rhoS, res.seed, res.model}] = &res;
        if (!res.metrics) ++failures;
    }
    if (failures > 0) {
        detail = std::to_string(failures) + " chains failed";
        return false;
    }

    // Case 3: median paired RMSE difference over parameters <= 0
    std::vector<double> case3_rmse_diffs;
    const char* common_params[] = {"beta_0", "beta_1", "sigma2", "tau2", "rhoS", "rhoT"};
    for (double rho : {0.25, 0.5, 0.75}) {
        for (std::uint64_t seed : seeds) {
            const auto* fs = by_key[{3, rho, seed, "dfscsn"}];
            const auto* dc = by_key[{3, rho, seed, "dcar"}];
            for (const char* name : common_params)
                case3_rmse_diffs.push_back(fs->metrics->rmse.at(name) -
                                           dc->metrics->rmse.at(name));
        }
    }
    const double rmse_median = quantile(case3_rmse_diffs, 0.5);

    // FLMPL: majority of seeds favor the skew model in Cases 1 and 3
    int favored1 = 0, favored3 = 0;
    for (std::uint64_t seed : seeds) {
        double d1 = 0.0, d3 = 0.0;
        for (double rho : {0.25, 0.5, 0.75}) {
            d1 += by_key[{1, rho, seed, "dfscsn"}]->metrics->flmpl -
                  by_key[{1, rho, seed, "dcar"}]->metrics->flmpl;
            d3 += by_key[{3, rho, seed, "dfscsn"}]->metrics->flmpl -
                  by_key[{3, rho, seed, "dcar"}]->metrics->flmpl;
        }
        if (d1 > 0.0) ++favored1;
        if (d3 > 0.0) ++favored3;
    }
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "case-3 median RMSE diff = %.4f (<= 0); FLMPL favors skew model %d/10 (case 1), "
                  "%d/10 (case 3)",
                  rmse_median, favored1, favored3);
    detail = buf;
    return rmse_median <= 0.0 && favored1 >= 6 && favored3 >= 6;
}

// ---- 9: metric unit fixtures ----------------------------------------------------

bool run_metric_fixtures(std::string& detail) {
    std::ostringstream msg;
    bool ok = true;

    Vector y(1);
    y << 0.0;
    Matrix samples(2, 1);
    samples << 1.0, -1.0;
    const double es = energy_score(y, samples);
    const double fr = frmse(y, samples);
    ok = ok && es == 0.5 && fr == 1.0;
    msg << "energy = " << es << " (0.5 exact), frmse = " << fr << " (1 exact)";

    // lmpl single-draw identity
    {
        const AdjacencyGraph g = build_grid_graph(1, 1);
        PanelData data;
        data.T = 1;
        data.K = 1;
        data.r = 1;
        data.y = Matrix::Zero(1, 1);
        data.X.assign(1, Matrix::Zero(1, 1));
        data.graph = g;
        PosteriorDraws d;
        d.model_kind = ModelKind::DFsCsn;
        d.r = 1;
        d.T = 1;
        d.K = 1;
        d.beta = Matrix::Zero(1, 1);
        d.sigma2 = Vector::Constant(1, 0.49);
        d.tau2 = Vector::Constant(1, 1.0);
        d.rhoS = Vector::Constant(1, 0.5);
        d.rhoT = Vector::Constant(1, 0.5);
        d.lambda = Vector::Zero(1);
        d.theta.assign(1, Matrix::Constant(1, 1, 0.3));
        d.alpha.assign(1, Matrix::Zero(1, 1));
        const double got = lmpl(d, data);
        const double want = norm_logpdf(0.0, 0.3, 0.7);
        ok = ok && std::abs(got - want) < 1e-14;
        msg << "; lmpl S=1 err = " << std::abs(got - want);
    }

    // flmpl converges to the Gaussian predictive at M = 1e4
    {
        const AdjacencyGraph g = build_grid_graph(1, 2);
        const auto cache = cache_of(g);
        ModelParams p = make_params(0.0, 0.5, 0.2);
        p.beta = Vector::Constant(1, 0.7);
        Matrix theta_train(1, 2);
        theta_train << 0.3, -0.2;
        PosteriorDraws d;
        d.model_kind = ModelKind::DFsCsn;
        d.r = 1;
        d.T = 1;
        d.K = 2;
        d.beta = Matrix::Constant(1, 1, 0.7);
        d.sigma2 = Vector::Constant(1, p.sigma2);
        d.tau2 = Vector::Constant(1, p.tau2);
        d.rhoS = Vector::Constant(1, p.rhoS);
        d.rhoT = Vector::Constant(1, p.rhoT);
        d.lambda = Vector::Zero(1);
        d.theta.assign(1, theta_train);
        d.alpha.assign(1, Matrix::Zero(1, 2));

        Matrix y_future(2, 2);
        y_future << 1.1, 0.4, 0.8, 0.9;
        const std::vector<Matrix> X_future(2, Matrix::Ones(2, 1));
        const SpatialOperator op(cache, p.tau2, p.rhoS);
        const Matrix omega = op.dense_omega();
        const int K = 2, Tf = 2;
        Vector mean(Tf * K);
        Matrix cov = Matrix::Zero(Tf * K, Tf * K);
        Vector prev = theta_train.row(0).transpose();
        for (int s = 0; s < Tf; ++s) {
            prev = p.rhoT * prev;
            mean.segment(s * K, K) = prev + Vector::Constant(K, p.beta[0]);
        }
        for (int s1 = 0; s1 < Tf; ++s1)
            for (int s2 = 0; s2 < Tf; ++s2) {
                double scale = 0.0;
                for (int j = 1; j <= std::min(s1, s2) + 1; ++j)
                    scale += std::pow(p.rhoT, s1 + 1 - j) * std::pow(p.rhoT, s2 + 1 - j);
                cov.block(s1 * K, s2 * K, K, K) = scale * omega;
            }
        cov += p.sigma2 * Matrix::Identity(Tf * K, Tf * K);
        Vector y_flat(Tf * K);
        for (int s = 0; s < Tf; ++s) y_flat.segment(s * K, K) = y_future.row(s).transpose();
        const double exact = oracle::mvn_logpdf(y_flat, mean, cov);
        const double got = flmpl(d, y_future, X_future, cache, 10000, 77);
        ok = ok && std::abs(got - exact) < 0.05;
        msg << "; flmpl |err| = " << std::abs(got - exact) << " (tol 0.05)";
    }
    detail = msg.str();
    return ok;
}

// ---- 10: determinism -------------------------------------------------------------

bool run_determinism(std::string& detail) {
    SimStudyCase sc;
    sc.T = 6;
    sc.grid_rows = 2;
    sc.grid_cols = 3;
    const ModelParams truth = sc.truth();
    const AdjacencyGraph g = build_grid_graph(2, 3);
    const auto cache = cache_of(g);
    const SpatialOperator op(cache, truth.tau2, truth.rhoS);
    RngStream rng(1010, 0);
    std::vector<Matrix> X(6);
    for (int t = 0; t < 6; ++t) {
        Matrix xt(6, 2);
        for (int k = 0; k < 6; ++k) {
            xt(k, 0) = 1.0;
            xt(k, 1) = rng.normal();
        }
        X[t] = std::move(xt);
    }
    const SimulationResult sim = simulate(truth, X, op, 6, rng);
    PanelData data;
    data.T = 6;
    data.K = 6;
    data.r = 2;
    data.y = sim.y;
    data.X = std::move(X);
    data.graph = g;

    Priors priors;
    ChainConfig cfg;
    cfg.iterations = 120;
    cfg.burnin = 40;
    cfg.seed = 31415;

    auto render = [&](int threads) {
#ifdef _OPENMP
        omp_set_num_threads(threads);
#else
        (void)threads;
#endif
        const auto chains = run_chains(data, cache, priors, cfg, 3);
        const fs::path dir =
            fs::temp_directory_path() / ("dfscsn_accept_det_" + std::to_string(threads));
        fs::remove_all(dir);
        write_outputs(chains, true, std::nullopt, dir);
        std::ifstream in(dir / "draws.csv", std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    const std::string a = render(1);
    const std::string b = render(1);
    const std::string c = render(4);
    const bool ok = !a.empty() && a == b && a == c;
    detail = "draws.csv identical across reruns and thread counts: " +
             std::string(ok ? "yes" : "NO");
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    const std::vector<Criterion> criteria = {
        {1, "AR vs Kronecker latent density equivalence", run_prop32},
        {2, "permutation symmetry + Cholesky counterexample", run_prop31},
        {3, "Mardia moments match the closed forms", run_mardia},
        {4, "mean/covariance preservation of simulated fields", run_preservation},
        {5, "Gibbs posterior vs quadrature on the exact CSN posterior", run_sampler_vs_oracle},
        {6, "Gaussian-subclass exactness of the conditional blocks", run_gaussian_subclass},
        {7, "theta+alpha block scales linearly in T", run_scaling},
        {8, "desk-scale paired simulation study", run_sim_study},
        {9, "metric unit fixtures", run_metric_fixtures},
        {10, "byte-identical outputs across runs and thread counts", run_determinism},
    };

    int failed = 0;
    for (const auto& criterion : criteria) {
        if (only != 0 && criterion.id != only) continue;
        const auto t0 = Clock::now();
        std::string deta;
        bool ok = false;
        try {
            ok = criterion.run(deta);
        } catch (const std::exception& err) {
            deta = std::string("exception: ") + err.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        std::printf("[%s] criterion %2d: %s (%.1f s)\n    %s\n", ok ? "PASS" : "FAIL",
                    criterion.id, criterion.name, secs, deta.c_str());
        std::fflush(stdout);
        if (!ok) ++failed;
    }
    if (failed == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criteria FAILED\n", failed);
    return failed;
}
