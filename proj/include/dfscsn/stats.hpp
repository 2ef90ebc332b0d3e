#pragma once

#include <span>
#include <vector>

#include "dfscsn/common.hpp"
#include "dfscsn/rng.hpp"

namespace dfscsn {

inline constexpr double kLog2Pi = 1.8378770664093454836;

/// Standard normal pdf / cdf. The cdf is erfc-based and keeps full relative
/// accuracy in both tails down to the underflow limit.
double norm_pdf(double x);
double norm_cdf(double x);
/// log Phi(x); switches to the Mills-ratio asymptotic series below the
/// erfc underflow point (~ -37.5) so it never returns -inf for finite x.
double norm_logcdf(double x);
/// Inverse standard normal CDF (Wichura AS241, ~1e-15 relative error).
double norm_quantile(double p);

/// P(X <= h, Y <= k) for standard bivariate normal with correlation rho.
/// Genz's adaptation of the Drezner-Wesolowsky algorithm; |rho| = 1 allowed.
double bvn_cdf(double h, double k, double rho);

/// log Phi_n(upper; 0, cov) by sequential conditioning with greedy variable
/// reordering and a randomized sqrt-prime lattice rule (Genz-style QMC).
/// Deterministic for a fixed seed; relative accuracy ~1e-3 at n ~ 50 with the
/// default budget. rel_err (optional) receives a spread-based error estimate
/// on the log value.
double log_mvn_cdf_qmc(const Vector& upper, const Matrix& cov, int points_per_shift,
                       int shifts, std::uint64_t seed, double* rel_err = nullptr);

/// log N(x; mean, sd^2).
double norm_logpdf(double x, double mean, double sd);

/// One draw from N(mean, sd^2) conditioned on the result being >= 0.
/// Inverse-CDF in the easy regime, Robert exponential rejection in the deep
/// lower tail; finite for any mean, never stalls.
double sample_truncated_normal_lower0(double mean, double sd, RngStream& rng);

/// One draw from N(mean, sd^2) conditioned to (lo, hi), lo < hi.
double sample_truncated_normal_interval(double mean, double sd, double lo, double hi,
                                        RngStream& rng);

/// log(sum_i exp(x_i)) guarded against overflow; -inf for an empty span.
double log_sum_exp(std::span<const double> x);

/// Draw from N(mean, cov) through the symmetric PSD square root
/// (eigenvalues clamped at zero, so near-singular covariances are fine).
Vector sample_mvn(const Vector& mean, const Matrix& cov, RngStream& rng);

/// Type-7 (linear interpolation) sample quantile, p in [0, 1].
double quantile(std::vector<double> values, double p);

}  // namespace dfscsn
