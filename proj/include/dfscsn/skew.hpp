#pragma once

#include <memory>

#include "dfscsn/common.hpp"
#include "dfscsn/rng.hpp"
#include "dfscsn/spatial.hpp"

namespace dfscsn {

/// Constants derived from the skewness parameter lambda:
/// b = sqrt(2/pi), delta = lambda / sqrt(1 + lambda^2), gamma = 1 / sqrt(1 - b^2 delta^2).
/// gamma rescales the covariance so that mean and variance are preserved for
/// every lambda; lambda = 0 collapses to the Gaussian case (delta = 0, gamma = 1).
struct SkewConstants {
    double lambda = 0.0;
    double b = 0.0;
    double delta = 0.0;
    double gamma = 1.0;
};

SkewConstants skew_constants(double lambda);

/// Covariance matrix together with a chosen square-root factor W (W W' = Sigma).
/// The factor choice matters: the spectral root keeps the distribution
/// permutation-symmetric, a Cholesky factor does not.
class CovarianceAction {
public:
    virtual ~CovarianceAction() = default;
    virtual int dim() const = 0;
    virtual Vector apply_cov(const Vector& x) const = 0;       // Sigma x
    virtual Vector apply_sqrt(const Vector& x) const = 0;      // W x
    virtual Vector apply_inv_sqrt(const Vector& x) const = 0;  // W^{-1} x
    virtual double log_det_cov() const = 0;                    // log |Sigma|
};

/// Adapter exposing a SpatialOperator (symmetric spectral root) as a
/// CovarianceAction.
class SpatialCovariance final : public CovarianceAction {
public:
    explicit SpatialCovariance(SpatialOperator op) : op_(std::move(op)) {}
    int dim() const override { return op_.dim(); }
    Vector apply_cov(const Vector& x) const override { return op_.apply_omega(x); }
    Vector apply_sqrt(const Vector& x) const override { return op_.apply_omega_sqrt(x); }
    Vector apply_inv_sqrt(const Vector& x) const override {
        return op_.apply_omega_inv_sqrt(x);
    }
    double log_det_cov() const override { return op_.log_det_omega(); }

private:
    SpatialOperator op_;
};

/// Dense covariance with an explicit root factor. Supports both the
/// symmetric spectral root and arbitrary factors (Cholesky, Kronecker
/// factors) for test oracles and small-scale assemblies.
class DenseCovariance final : public CovarianceAction {
public:
    /// sigma SPD; W given explicitly with W W' = sigma.
    DenseCovariance(Matrix sigma, Matrix w);
    /// Symmetric spectral root of an SPD matrix.
    static DenseCovariance spectral(const Matrix& sigma);
    /// Lower-triangular Cholesky root.
    static DenseCovariance cholesky(const Matrix& sigma);

    int dim() const override { return static_cast<int>(sigma_.rows()); }
    Vector apply_cov(const Vector& x) const override { return sigma_ * x; }
    Vector apply_sqrt(const Vector& x) const override { return w_ * x; }
    Vector apply_inv_sqrt(const Vector& x) const override;
    double log_det_cov() const override { return log_det_; }
    const Matrix& sigma() const { return sigma_; }
    const Matrix& root() const { return w_; }

private:
    Matrix sigma_;
    Matrix w_;
    Eigen::PartialPivLU<Matrix> w_lu_;
    double log_det_ = 0.0;
};

/// FS-CSN_p(mu, Sigma, lambda, W): location mu, covariance Sigma with root
/// factor W, skewness lambda. Mean and covariance equal mu and Sigma exactly.
struct FsCsnSpec {
    const CovarianceAction* omega = nullptr;
    Vector mu;
    SkewConstants skew;

    FsCsnSpec(const CovarianceAction& om, Vector mu_, SkewConstants sk)
        : omega(&om), mu(std::move(mu_)), skew(sk) {
        if (mu.size() != om.dim()) throw ValidationError("FsCsnSpec: mu dimension mismatch");
    }
    int dim() const { return omega->dim(); }
};

/// One exact draw via the additive representation
///   z = mu - b delta gamma W 1 + psi + (gamma lambda / (1+lambda^2)) W alpha,
/// psi ~ N(0, gamma^2/(1+lambda^2) Sigma), alpha ~ TN(0, (1+lambda^2) I).
/// If alpha_out is non-null the alpha draw actually used is stored there.
Vector fscsn_sample(const FsCsnSpec& spec, RngStream& rng, Vector* alpha_out = nullptr);

/// Log density in the factorized form
///   log phi_p(z; xi, gamma^2 Sigma) + sum_i log Phi(u_i) + p log 2,
/// xi = mu - b delta gamma W 1, u = (lambda/gamma) W^{-1} (z - xi).
/// The normalizing CDF collapses to 2^{-p} exactly because W^{-1} Sigma W^{-T} = I,
/// so no multivariate normal CDF is ever evaluated.
double fscsn_logpdf(const Vector& z, const FsCsnSpec& spec);

/// General CSN_{p,q} parameters; test oracle only, q <= 2.
struct CsnParams {
    Vector mu;     // p
    Matrix sigma;  // p x p SPD
    Matrix d;      // q x p
    Vector nu;     // q
    Matrix delta;  // q x q SPD
    int p() const { return static_cast<int>(mu.size()); }
    int q() const { return static_cast<int>(nu.size()); }
};

/// Log density of CSN_{p,q}(mu, Sigma, D, nu, Delta) using exact univariate /
/// bivariate normal CDFs. Throws for q > 2.
double csn_logpdf_oracle(const Vector& z, const CsnParams& params);

struct MardiaMoments {
    double skewness = 0.0;
    double kurtosis = 0.0;
};

/// Closed-form Mardia moments of FS-CSN_p:
///   MS = p b^2 (2b^2-1)^2 delta^6 gamma^6,
///   MK = p (p + 2 + 2 b^2 (2 - 3 b^2) delta^4 gamma^4).
MardiaMoments mardia_closed_form(int p, double lambda);
/// lambda -> infinity limits (half-normal endpoint).
MardiaMoments mardia_limit(int p);

/// Standard sample estimators on an N x p matrix of draws (rows = samples):
///   MS = (1/N^2) sum_{i,j} (d_i' S^{-1} d_j)^3,  MK = (1/N) sum_i (d_i' S^{-1} d_i)^2,
/// with biased (1/N) sample covariance S. Computed via the third-moment
/// tensor, O(N p^3) instead of O(N^2 p).
MardiaMoments mardia_empirical(const Matrix& samples);

}  // namespace dfscsn
