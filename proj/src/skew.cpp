#include "dfscsn/skew.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "dfscsn/stats.hpp"

namespace dfscsn {

SkewConstants skew_constants(double lambda) {
    if (!std::isfinite(lambda)) throw ValidationError("skew_constants: lambda must be finite");
    SkewConstants sc;
    sc.lambda = lambda;
    sc.b = std::sqrt(2.0 / M_PI);
    sc.delta = lambda / std::sqrt(1.0 + lambda * lambda);
    sc.gamma = 1.0 / std::sqrt(1.0 - sc.b * sc.b * sc.delta * sc.delta);
    return sc;
}

DenseCovariance::DenseCovariance(Matrix sigma, Matrix w)
    : sigma_(std::move(sigma)), w_(std::move(w)) {
    if (sigma_.rows() != sigma_.cols() || w_.rows() != w_.cols() || w_.rows() != sigma_.rows())
        throw ValidationError("DenseCovariance: shape mismatch");
    w_lu_ = Eigen::PartialPivLU<Matrix>(w_);
    // |Sigma| = |W|^2
    double log_abs_det_w = 0.0;
    const Matrix& lu = w_lu_.matrixLU();
    for (int i = 0; i < lu.rows(); ++i) log_abs_det_w += std::log(std::abs(lu(i, i)));
    log_det_ = 2.0 * log_abs_det_w;
}

Vector DenseCovariance::apply_inv_sqrt(const Vector& x) const { return w_lu_.solve(x); }

DenseCovariance DenseCovariance::spectral(const Matrix& sigma) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sigma);
    if (solver.info() != Eigen::Success)
        throw NumericalError("DenseCovariance::spectral: eigensolver failed");
    if ((solver.eigenvalues().array() <= 0.0).any())
        throw NumericalError("DenseCovariance::spectral: matrix not positive definite");
    Matrix root = solver.eigenvectors() *
                  solver.eigenvalues().array().sqrt().matrix().asDiagonal() *
                  solver.eigenvectors().transpose();
    return DenseCovariance(sigma, std::move(root));
}

DenseCovariance DenseCovariance::cholesky(const Matrix& sigma) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw NumericalError("DenseCovariance::cholesky: matrix not positive definite");
    return DenseCovariance(sigma, Matrix(llt.matrixL()));
}

Vector fscsn_sample(const FsCsnSpec& spec, RngStream& rng, Vector* alpha_out) {
    const int p = spec.dim();
    const SkewConstants& sc = spec.skew;
    const double lam2p1 = 1.0 + sc.lambda * sc.lambda;

    Vector alpha(p);
    const double alpha_sd = std::sqrt(lam2p1);
    for (int i = 0; i < p; ++i)
        alpha[i] = sample_truncated_normal_lower0(0.0, alpha_sd, rng);

    Vector zeta(p);
    for (int i = 0; i < p; ++i) zeta[i] = rng.normal();

    const Vector shift = spec.omega->apply_sqrt(Vector::Ones(p));
    Vector z = spec.mu - sc.b * sc.delta * sc.gamma * shift +
               (sc.gamma / std::sqrt(lam2p1)) * spec.omega->apply_sqrt(zeta) +
               (sc.gamma * sc.lambda / lam2p1) * spec.omega->apply_sqrt(alpha);
    if (alpha_out) *alpha_out = std::move(alpha);
    return z;
}

double fscsn_logpdf(const Vector& z, const FsCsnSpec& spec) {
    const int p = spec.dim();
    if (z.size() != p) throw ValidationError("fscsn_logpdf: dimension mismatch");
    const SkewConstants& sc = spec.skew;

    const Vector xi = spec.mu - sc.b * sc.delta * sc.gamma * spec.omega->apply_sqrt(Vector::Ones(p));
    const Vector e = spec.omega->apply_inv_sqrt(z - xi);

    const double log_gamma2 = 2.0 * std::log(sc.gamma);
    double logpdf = -0.5 * p * kLog2Pi - 0.5 * (p * log_gamma2 + spec.omega->log_det_cov()) -
                    0.5 * e.squaredNorm() / (sc.gamma * sc.gamma);
    const double scale = sc.lambda / sc.gamma;
    for (int i = 0; i < p; ++i) logpdf += norm_logcdf(scale * e[i]);
    return logpdf + p * std::numbers::ln2;
}

namespace {

double mvn_logpdf_dense(const Vector& x, const Vector& mu, const Matrix& sigma) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw NumericalError("csn_logpdf_oracle: Sigma not positive definite");
    const Vector d = x - mu;
    const Vector half = llt.matrixL().solve(d);
    double log_det = 0.0;
    for (int i = 0; i < sigma.rows(); ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * x.size() * kLog2Pi - 0.5 * log_det - 0.5 * half.squaredNorm();
}

// log Phi_q(x; nu, Delta) for q in {1, 2} with exact normal CDFs.
double mvn_logcdf_small(const Vector& x, const Vector& nu, const Matrix& delta) {
    const int q = static_cast<int>(x.size());
    if (q == 1) {
        return norm_logcdf((x[0] - nu[0]) / std::sqrt(delta(0, 0)));
    }
    if (q == 2) {
        const double s0 = std::sqrt(delta(0, 0));
        const double s1 = std::sqrt(delta(1, 1));
        const double rho = delta(0, 1) / (s0 * s1);
        const double v = bvn_cdf((x[0] - nu[0]) / s0, (x[1] - nu[1]) / s1, rho);
        if (v <= 0.0) return -std::numeric_limits<double>::infinity();
        return std::log(v);
    }
    throw ValidationError("csn_logpdf_oracle: only q <= 2 supported");
}

}  // namespace

double csn_logpdf_oracle(const Vector& z, const CsnParams& params) {
    const int p = params.p();
    const int q = params.q();
    if (q > 2) throw ValidationError("csn_logpdf_oracle: only q <= 2 supported");
    if (z.size() != p || params.sigma.rows() != p || params.d.rows() != q ||
        params.d.cols() != p || params.delta.rows() != q)
        throw ValidationError("csn_logpdf_oracle: shape mismatch");

    const double log_phi = mvn_logpdf_dense(z, params.mu, params.sigma);
    const double log_num = mvn_logcdf_small(params.d * (z - params.mu), params.nu, params.delta);
    const Matrix denom_cov = params.delta + params.d * params.sigma * params.d.transpose();
    const double log_den = mvn_logcdf_small(Vector::Zero(q), params.nu, denom_cov);
    return log_phi + log_num - log_den;
}

MardiaMoments mardia_closed_form(int p, double lambda) {
    if (p < 1) throw ValidationError("mardia_closed_form: p must be >= 1");
    const SkewConstants sc = skew_constants(lambda);
    const double b2 = sc.b * sc.b;
    const double d2 = sc.delta * sc.delta;
    const double g2 = sc.gamma * sc.gamma;
    MardiaMoments m;
    m.skewness = p * b2 * (2.0 * b2 - 1.0) * (2.0 * b2 - 1.0) * d2 * d2 * d2 * g2 * g2 * g2;
    m.kurtosis = p * (p + 2.0 + 2.0 * b2 * (2.0 - 3.0 * b2) * d2 * d2 * g2 * g2);
    return m;
}

MardiaMoments mardia_limit(int p) {
    if (p < 1) throw ValidationError("mardia_limit: p must be >= 1");
    const double b2 = 2.0 / M_PI;
    const double omb2 = 1.0 - b2;
    MardiaMoments m;
    m.skewness = p * b2 * (2.0 * b2 - 1.0) * (2.0 * b2 - 1.0) / (omb2 * omb2 * omb2);
    m.kurtosis = p * (p + 2.0 + 2.0 * b2 * (2.0 - 3.0 * b2) / (omb2 * omb2));
    return m;
}

MardiaMoments mardia_empirical(const Matrix& samples) {
    const int n = static_cast<int>(samples.rows());
    const int p = static_cast<int>(samples.cols());
    if (n <= p) throw ValidationError("mardia_empirical: need more samples than dimensions");

    const Vector mean = samples.colwise().mean();
    Matrix centered = samples.rowwise() - mean.transpose();
    Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success)
        throw NumericalError("mardia_empirical: covariance eigensolve failed");
    const Vector& ev = solver.eigenvalues();
    if (ev.minCoeff() <= 1e-12 * std::max(1.0, ev.maxCoeff()))
        throw NumericalError("mardia_empirical: sample covariance is singular");
    const Matrix inv_root = solver.eigenvectors() *
                            ev.array().rsqrt().matrix().asDiagonal() *
                            solver.eigenvectors().transpose();

    // whitened samples: u_i' u_j = d_i' S^{-1} d_j
    Matrix u = centered * inv_root;

    MardiaMoments m;
    // MK = (1/N) sum (||u_i||^2)^2
    m.kurtosis = u.rowwise().squaredNorm().array().square().sum() / n;
    // MS = sum_{a,b,c} M_abc^2 with M_abc the third sample moment of u
    double ms = 0.0;
    for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
            for (int c = 0; c < p; ++c) {
                const double mabc =
                    (u.col(a).array() * u.col(b).array() * u.col(c).array()).sum() / n;
                ms += mabc * mabc;
            }
        }
    }
    m.skewness = ms;
    return m;
}

}  // namespace dfscsn
