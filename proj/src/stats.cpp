#include "dfscsn/stats.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace dfscsn {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kTwoPi = 6.2831853071795864769;
}  // namespace

double norm_pdf(double x) { return std::exp(-0.5 * x * x - 0.5 * kLog2Pi); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double norm_logcdf(double x) {
    if (x > 8.0) return std::log1p(-norm_cdf(-x));
    if (x > -37.0) return std::log(0.5 * std::erfc(-x / kSqrt2));
    // Mills-ratio asymptotic series, good to ~1e-15 for x <= -37
    const double x2 = x * x;
    const double s =
        1.0 + (-1.0 + (3.0 + (-15.0 + (105.0 - 945.0 / x2) / x2) / x2) / x2) / x2;
    return -0.5 * x2 - 0.5 * kLog2Pi - std::log(-x) + std::log(s);
}

// Wichura's AS 241 (PPND16).
double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw ValidationError("norm_quantile: p outside [0, 1]");
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                     67265.770927008700853) *
                        r +
                    45921.953931549871457) *
                       r +
                   13731.693765509461125) *
                      r +
                  1971.5909503065514427) *
                     r +
                 133.14166789178437745) *
                    r +
                3.387132872796366608) /
               (((((((r * 5226.495278852545609 + 28729.085735721942674) * r +
                     39307.89580009271061) *
                        r +
                    21213.794301586595867) *
                       r +
                   5394.1960214247511077) *
                      r +
                  687.1870074920579083) *
                     r +
                 42.313330701600911252) *
                    r +
                1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                    0.24178072517745061177) *
                       r +
                   1.27045825245236838258) *
                      r +
                  3.64784832476320460504) *
                     r +
                 5.7694972214606914055) *
                    r +
                4.6303378461565452959) *
                   r +
               1.42343711074968357734) /
              (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                    0.0151986665636164571966) *
                       r +
                   0.14810397642748007459) *
                      r +
                  0.68976733498510000455) *
                     r +
                 1.6763848301838038494) *
                    r +
                2.05319162663775882187) *
                   r +
               1.0);
    } else {
        r -= 5.0;
        val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                    0.0012426609473880784386) *
                       r +
                   0.026532189526576123093) *
                      r +
                  0.29656057182850489123) *
                     r +
                 1.7848265399172913358) *
                    r +
                5.4637849111641143699) *
                   r +
               6.6579046435011037772) /
              (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                    1.8463183175100546818e-5) *
                       r +
                   7.868691311456132591e-4) *
                      r +
                  0.0148753612908506148105) *
                     r +
                 0.13692988092273580531) *
                    r +
                0.59983220655588793769) *
                   r +
               1.0);
    }
    return (q < 0.0) ? -val : val;
}

namespace {

// Gauss-Legendre nodes/weights used by Genz's BVND.
const double kGL6w[3] = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
const double kGL6x[3] = {0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
const double kGL12w[6] = {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                          0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
const double kGL12x[6] = {0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                          0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
const double kGL20w[10] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                           0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                           0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                           0.1527533871307259};
const double kGL20x[10] = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                           0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                           0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                           0.07652652113349733};

// Genz's BVND: upper-orthant probability P(X > h, Y > k).
double bvn_upper(double h, double k, double r) {
    const double* w;
    const double* x;
    int lg;
    const double ar = std::abs(r);
    if (ar < 0.3) {
        w = kGL6w;
        x = kGL6x;
        lg = 3;
    } else if (ar < 0.75) {
        w = kGL12w;
        x = kGL12x;
        lg = 6;
    } else {
        w = kGL20w;
        x = kGL20x;
        lg = 10;
    }
    double hk = h * k;
    double bvn = 0.0;
    if (ar < 0.925) {
        if (ar > 0.0) {
            const double hs = 0.5 * (h * h + k * k);
            const double asr = std::asin(r);
            for (int i = 0; i < lg; ++i) {
                for (int is = -1; is <= 1; is += 2) {
                    const double sn = std::sin(0.5 * asr * (is * x[i] + 1.0));
                    bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
                }
            }
            bvn = bvn * asr / (2.0 * kTwoPi);
        }
        return bvn + norm_cdf(-h) * norm_cdf(-k);
    }
    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (ar < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        double asr = -0.5 * (bs / as + hk);
        if (asr > -100.0)
            bvn = a * std::exp(asr) *
                  (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        if (-hk < 100.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-0.5 * hk) * std::sqrt(kTwoPi) * norm_cdf(-b / a) * b *
                   (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a *= 0.5;
        for (int i = 0; i < lg; ++i) {
            for (int is = -1; is <= 1; is += 2) {
                const double xs = a * (is * x[i] + 1.0) * a * (is * x[i] + 1.0);
                const double rs = std::sqrt(1.0 - xs);
                asr = -0.5 * (bs / xs + hk);
                if (asr > -100.0)
                    bvn += a * w[i] * std::exp(asr) *
                           (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                            (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
        bvn = -bvn / kTwoPi;
    }
    if (r > 0.0) return bvn + norm_cdf(-std::max(h, k));
    bvn = -bvn;
    if (k > h) bvn += norm_cdf(k) - norm_cdf(h);
    return bvn;
}

}  // namespace

double bvn_cdf(double h, double k, double rho) {
    if (!(rho >= -1.0 && rho <= 1.0)) throw ValidationError("bvn_cdf: |rho| must be <= 1");
    // P(X <= h, Y <= k) = P(-X > -h, -Y > -k) with the same correlation
    return std::clamp(bvn_upper(-h, -k, rho), 0.0, 1.0);
}

double norm_logpdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - 0.5 * kLog2Pi - std::log(sd);
}

namespace {

// expected value of a standard normal truncated above at a
double upper_truncated_mean(double a) {
    const double logphi = -0.5 * a * a - 0.5 * kLog2Pi;
    return -std::exp(logphi - norm_logcdf(a));
}

}  // namespace

double log_mvn_cdf_qmc(const Vector& upper, const Matrix& cov, int points_per_shift,
                       int shifts, std::uint64_t seed, double* rel_err) {
    const int n = static_cast<int>(upper.size());
    if (cov.rows() != n || cov.cols() != n)
        throw ValidationError("log_mvn_cdf_qmc: shape mismatch");
    if (n == 0) return 0.0;
    if (n == 1) return norm_logcdf(upper[0] / std::sqrt(cov(0, 0)));
    if (points_per_shift < 1 || shifts < 1)
        throw ValidationError("log_mvn_cdf_qmc: need positive QMC budget");

    // greedy reordering: take the tightest remaining constraint first, using
    // truncated-normal expected values for the conditioning (Genz-Bretz)
    Matrix c = cov;
    Vector b = upper;
    Vector expect = Vector::Zero(n);
    for (int j = 0; j < n; ++j) {
        int best = -1;
        double best_a = std::numeric_limits<double>::infinity();
        for (int i = j; i < n; ++i) {
            double s = 0.0, v = c(i, i);
            for (int k = 0; k < j; ++k) {
                s += c(i, k) * expect[k];
                v -= c(i, k) * c(i, k);
            }
            if (v <= 0.0) v = 1e-300;
            const double a = (b[i] - s) / std::sqrt(v);
            if (a < best_a) {
                best_a = a;
                best = i;
            }
        }
        if (best != j) {
            c.row(j).swap(c.row(best));
            c.col(j).swap(c.col(best));
            std::swap(b[j], b[best]);
        }
        double d = c(j, j);
        for (int k = 0; k < j; ++k) d -= c(j, k) * c(j, k);
        const double cjj = std::sqrt(std::max(d, 1e-300));
        c(j, j) = cjj;
        for (int i = j + 1; i < n; ++i) {
            double s = c(i, j);
            for (int k = 0; k < j; ++k) s -= c(i, k) * c(j, k);
            c(i, j) = s / cjj;
        }
        double s = 0.0;
        for (int k = 0; k < j; ++k) s += c(j, k) * expect[k];
        expect[j] = upper_truncated_mean((b[j] - s) / cjj);
    }

    // sqrt-prime lattice generators
    std::vector<double> gen(n);
    {
        int count = 0, candidate = 2;
        while (count < n) {
            bool prime = true;
            for (int d = 2; d * d <= candidate; ++d)
                if (candidate % d == 0) {
                    prime = false;
                    break;
                }
            if (prime) {
                double intpart;
                gen[count++] = std::modf(std::sqrt(static_cast<double>(candidate)), &intpart);
            }
            ++candidate;
        }
    }

    RngStream rng(seed, 0x9C3);
    std::vector<double> shift_log_estimates(shifts);
    std::vector<double> log_f(points_per_shift);
    std::vector<double> z(n), delta(n);
    for (int r = 0; r < shifts; ++r) {
        for (int j = 0; j < n; ++j) delta[j] = rng.uniform();
        for (int i = 0; i < points_per_shift; ++i) {
            double logf = 0.0;
            for (int j = 0; j < n; ++j) {
                double w = (i + 1.0) * gen[j] + delta[j];
                w = std::abs(2.0 * (w - std::floor(w)) - 1.0);  // baker transform
                double s = 0.0;
                for (int k = 0; k < j; ++k) s += c(j, k) * z[k];
                const double a = (b[j] - s) / c(j, j);
                const double log_e = norm_logcdf(a);
                logf += log_e;
                // draw inside the conditional truncation
                const double p = w * std::exp(log_e);
                z[j] = (p > 0.0 && p < 1.0) ? norm_quantile(p) : a;
            }
            log_f[i] = logf;
        }
        shift_log_estimates[r] =
            log_sum_exp(log_f) - std::log(static_cast<double>(points_per_shift));
    }
    const double log_mean =
        log_sum_exp(shift_log_estimates) - std::log(static_cast<double>(shifts));
    if (rel_err) {
        double var = 0.0;
        for (double v : shift_log_estimates) var += (v - log_mean) * (v - log_mean);
        *rel_err = 3.0 * std::sqrt(var / shifts / std::max(1, shifts - 1));
    }
    return log_mean;
}

double sample_truncated_normal_lower0(double mean, double sd, RngStream& rng) {
    if (!(sd > 0.0)) throw ValidationError("sample_truncated_normal_lower0: sd must be > 0");
    const double a = -mean / sd;  // standardized lower bound
    double z;
    if (a < 5.0) {
        // invert the survival function: keeps resolution in the upper tail
        const double tail = norm_cdf(-a);  // P(Z >= a)
        z = -norm_quantile(rng.uniform() * tail);
        if (z < a) z = a;
    } else {
        // Robert-style exponential rejection for the deep lower tail
        const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
        for (;;) {
            const double e = -std::log(rng.uniform()) / alpha;
            z = a + e;
            const double dz = z - alpha;
            if (rng.uniform() <= std::exp(-0.5 * dz * dz)) break;
        }
    }
    return std::max(0.0, mean + sd * z);
}

double sample_truncated_normal_interval(double mean, double sd, double lo, double hi,
                                        RngStream& rng) {
    if (!(sd > 0.0) || !(lo < hi))
        throw ValidationError("sample_truncated_normal_interval: need sd > 0 and lo < hi");
    const double l = (lo - mean) / sd;
    const double h = (hi - mean) / sd;
    double z;
    if (l >= 0.0) {
        // whole interval in the right tail: invert in survival space
        const double sl = norm_cdf(-l);
        const double sh = norm_cdf(-h);
        if (sl <= 0.0) return lo;  // beyond double underflow, mass sits at the bound
        z = -norm_quantile(sh + rng.uniform() * (sl - sh));
    } else if (h <= 0.0) {
        const double fl = norm_cdf(l);
        const double fh = norm_cdf(h);
        if (fh <= 0.0) return hi;
        z = norm_quantile(fl + rng.uniform() * (fh - fl));
    } else {
        const double fl = norm_cdf(l);
        const double fh = norm_cdf(h);
        z = norm_quantile(fl + rng.uniform() * (fh - fl));
    }
    z = std::clamp(z, l, h);
    return mean + sd * z;
}

double log_sum_exp(std::span<const double> x) {
    if (x.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

Vector sample_mvn(const Vector& mean, const Matrix& cov, RngStream& rng) {
    const int n = static_cast<int>(mean.size());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (cov + cov.transpose()));
    if (solver.info() != Eigen::Success)
        throw NumericalError("sample_mvn: covariance eigensolve failed");
    const Vector scale = solver.eigenvalues().array().max(0.0).sqrt();
    Vector z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    return mean + solver.eigenvectors() * (scale.asDiagonal() * (solver.eigenvectors().transpose() * z));
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ValidationError("quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile: p outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = p * (static_cast<double>(values.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

}  // namespace dfscsn
