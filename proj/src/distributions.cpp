#include "idim/distributions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "idim/errors.hpp"

namespace idim {

namespace {

double log_gamma(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 400;
    constexpr double kEps = 1e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw EstimationError("incomplete beta continued fraction did not converge");
}

void check_k(int k) {
    if (k < 1) throw ArgumentError("neighborhood order k must be >= 1");
}

void check_D(double D) {
    if (!(D > 0.0) || !std::isfinite(D)) throw ArgumentError("intrinsic dimension D must be > 0");
}

} // namespace

double log_beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw ArgumentError("log_beta: parameters must be > 0");
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double reg_inc_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw ArgumentError("reg_inc_beta: parameters must be > 0");
    if (!(x >= 0.0) || !(x <= 1.0)) throw ArgumentError("reg_inc_beta: x must be in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    if (a == b && x == 0.5) return 0.5;  // symmetric case, exact
    const double log_bt = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::exp(log_bt) * beta_cf(a, b, x) / a;
    }
    return 1.0 - std::exp(log_bt) * beta_cf(b, a, 1.0 - x) / b;
}

double pdf_normalized_distance(double r, int k, int Km1, double D) {
    check_D(D);
    if (Km1 < 1 || k < 1 || k > Km1) {
        throw ArgumentError("pdf_normalized_distance: need 1 <= k <= K-1");
    }
    if (!(r > 0.0) || !(r < 1.0)) {
        throw ArgumentError("pdf_normalized_distance: r must be in (0,1)");
    }
    const int K = Km1 + 1;
    const double log_rD = D * std::log(r);
    const double lp = std::log(D) - log_beta(k, K - k) + (D * k - 1.0) * std::log(r) +
                      (K - k - 1) * std::log(-std::expm1(log_rD));
    return std::exp(lp);
}

double fsa_log_pdf(double d, int k, double D) {
    check_D(D);
    check_k(k);
    if (!(d > 0.0)) throw ArgumentError("fsa_pdf: estimate d must be > 0");
    const double z = -D / d * M_LN2;  // ln a, a = 2^(-D/d)
    double lp = std::log(D) + std::log(M_LN2) - log_beta(k, k) + k * z - 2.0 * std::log(d);
    if (k > 1) lp += (k - 1) * std::log(-std::expm1(z));
    return lp;
}

double fsa_pdf(double d, int k, double D) { return std::exp(fsa_log_pdf(d, k, D)); }

double fsa_cdf(double d, int k, double D) {
    check_D(D);
    check_k(k);
    if (!(d > 0.0)) throw ArgumentError("fsa_cdf: estimate d must be > 0");
    const double a = std::exp2(-D / d);
    if (k == 1) return a;
    return reg_inc_beta(a, k, k);
}

double fsa_quantile(double p, int k, double D) {
    check_D(D);
    check_k(k);
    if (!(p > 0.0) || !(p < 1.0)) throw ArgumentError("fsa_quantile: p must be in (0,1)");
    if (k == 1) return -D * M_LN2 / std::log(p);
    // Invert I_a(k,k) = p for a, then map back through a = 2^(-D/d).
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (reg_inc_beta(mid, k, k) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-17 * hi) break;
    }
    const double a = 0.5 * (lo + hi);
    return -D * M_LN2 / std::log(a);
}

double median_sampling_log_pdf(double m, int k, double D, int n) {
    if (n < 1 || n % 2 == 0) {
        throw ArgumentError("median sampling density requires an odd sample size, got n=" +
                            std::to_string(n));
    }
    const int l = (n - 1) / 2;
    const double lq = fsa_log_pdf(m, k, D);
    if (l == 0) return lq;
    const double P = fsa_cdf(m, k, D);
    if (P <= 0.0 || P >= 1.0) return -std::numeric_limits<double>::infinity();
    return -log_beta(l + 1.0, l + 1.0) + l * (std::log(P) + std::log1p(-P)) + lq;
}

double median_sampling_pdf(double m, int k, double D, int n) {
    return std::exp(median_sampling_log_pdf(m, k, D, n));
}

double median_sampling_cdf(double m, int k, double D, int n) {
    if (n < 1 || n % 2 == 0) {
        throw ArgumentError("median sampling cdf requires an odd sample size, got n=" +
                            std::to_string(n));
    }
    const int l = (n - 1) / 2;
    const double P = fsa_cdf(m, k, D);
    return reg_inc_beta(P, l + 1.0, l + 1.0);
}

} // namespace idim
