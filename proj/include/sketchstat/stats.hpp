#ifndef SKETCHSTAT_STATS_HPP
#define SKETCHSTAT_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sketchstat/error.hpp"

namespace sketchstat {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

// =============================================================================
/// Inverse standard normal CDF. Acklam's rational start, polished with two
/// Newton steps against the erfc-based CDF; accurate to ~1e-15 absolute in
/// probability.
inline double normal_quantile(double q) {
    require(q > 0.0 && q < 1.0, errc::bad_level, "normal_quantile: q must be in (0,1)");

    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double z;
    if (q < p_low) {
        const double r = std::sqrt(-2.0 * std::log(q));
        z = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
            ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
    } else if (q <= 1.0 - p_low) {
        const double r = q - 0.5;
        const double s = r * r;
        z = (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s + a[5]) * r /
            (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s + 1.0);
    } else {
        const double r = std::sqrt(-2.0 * std::log(1.0 - q));
        z = -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
            ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
    }
    for (int it = 0; it < 2; ++it) {
        const double err = normal_cdf(z) - q;
        const double dens = normal_pdf(z);
        if (dens <= 0.0) break;
        z -= err / dens;
    }
    return z;
}

namespace detail {

/// Regularized incomplete beta I_x(a, b) via the Numerical Recipes continued
/// fraction (modified Lentz).
inline double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

/// Beta(a, b) quantile by bisection on I_x; tolerance well below the 1e-10
/// the interval contract asks for.
inline double beta_quantile(double q, double a, double b) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (incomplete_beta(a, b, mid) < q) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-13) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

struct BinomialInterval {
    std::uint64_t hits = 0;
    std::uint64_t trials = 0;
    double level = 0.0;
    double lower = 0.0;
    double upper = 1.0;
};

// =============================================================================
/// Exact Clopper-Pearson binomial interval via Beta quantiles, with the usual
/// boundary conventions lower = 0 at hits = 0 and upper = 1 at hits = trials.
inline BinomialInterval clopper_pearson(std::uint64_t hits, std::uint64_t trials, double level) {
    require(level > 0.0 && level < 1.0, errc::bad_level, "clopper_pearson: level not in (0,1)");
    require(trials >= 1, errc::bad_shape, "clopper_pearson: trials must be >= 1");
    require(hits <= trials, errc::bad_shape, "clopper_pearson: hits > trials");

    const double alpha = 1.0 - level;
    BinomialInterval out;
    out.hits = hits;
    out.trials = trials;
    out.level = level;
    const double h = static_cast<double>(hits);
    const double n = static_cast<double>(trials);
    out.lower = hits == 0 ? 0.0 : detail::beta_quantile(alpha / 2.0, h, n - h + 1.0);
    out.upper = hits == trials ? 1.0 : detail::beta_quantile(1.0 - alpha / 2.0, h + 1.0, n - h);
    return out;
}

struct KsResult {
    double d = 0.0;        // sup distance to the standard normal CDF
    double p_value = 1.0;  // asymptotic Kolmogorov tail
};

/// Survival function of the Kolmogorov distribution, Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 l^2}.
inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

// =============================================================================
/// One-sample Kolmogorov-Smirnov statistic against the standard normal, with
/// the Stephens small-sample corrected asymptotic p-value.
inline KsResult ks_statistic(std::vector<double> samples) {
    require(samples.size() >= 20, errc::too_few_samples, "ks_statistic: need >= 20 samples");
    for (double s : samples) {
        require(std::isfinite(s), errc::non_finite, "ks_statistic: non-finite sample");
    }
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = normal_cdf(samples[i]);
        const double hi = (static_cast<double>(i) + 1.0) / n - cdf;
        const double lo = cdf - static_cast<double>(i) / n;
        d = std::max({d, hi, lo});
    }
    KsResult out;
    out.d = d;
    const double sqrt_n = std::sqrt(n);
    out.p_value = kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    return out;
}

/// Sample variance (denominator n-1) of a series; harness pivots use this.
inline double sample_variance(const std::vector<double>& xs) {
    require(xs.size() >= 2, errc::too_few_samples, "sample_variance: need >= 2 samples");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace sketchstat

#endif  // SKETCHSTAT_STATS_HPP
