#ifndef SKETCHSTAT_LS_INFERENCE_HPP
#define SKETCHSTAT_LS_INFERENCE_HPP

#include <cmath>
#include <optional>
#include <vector>

#include "sketchstat/error.hpp"
#include "sketchstat/linalg.hpp"
#include "sketchstat/sketch.hpp"
#include "sketchstat/stats.hpp"

namespace sketchstat {

enum class ls_kind { complete, partial };
enum class ls_cov_mode { simple, sandwich };

struct ConfidenceInterval {
    double center = 0.0;
    double half_width = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool low_gamma_warning = false;

    bool contains(double x) const { return x >= lower && x <= upper; }
    double width() const { return upper - lower; }
};

inline ConfidenceInterval make_interval(double center, double half_width) {
    ConfidenceInterval ci;
    ci.center = center;
    ci.half_width = half_width;
    ci.lower = center - half_width;
    ci.upper = center + half_width;
    return ci;
}

// =============================================================================
/// A sketched least-squares estimate with its covariance estimator. sigma_hat
/// is the Sigma-hat of the matching theorem BEFORE the tau/m pivot scale; the
/// covariance of beta_hat is approximately scale * sigma_hat.
struct LsInferenceResult {
    ls_kind kind = ls_kind::complete;
    Vector beta_hat;
    Matrix sigma_hat;
    double scale = 0.0;  // tau / m
    double gamma = 0.0;
    double tau = 1.0;
    sketch_family family = sketch_family::srht;
    double level = 0.95;
    std::vector<ConfidenceInterval> cis;
};

namespace detail {

/// Shared factorization of the sketched design; every LS covariance needs
/// (Xs^T Xs)^{-1} and the spec's rank gate.
struct SketchedGram {
    Eigen::ColPivHouseholderQR<Matrix> qr;
    Eigen::Index p;

    explicit SketchedGram(const Matrix& Xs) : qr(Xs), p(Xs.cols()) {
        require(Xs.rows() >= Xs.cols(), errc::rank_deficient,
                "sketched design has fewer rows than columns");
        const auto& R = qr.matrixR();
        require(std::abs(R(p - 1, p - 1)) > kRankTol * std::abs(R(0, 0)), errc::rank_deficient,
                "sketched design is numerically rank deficient");
    }

    /// Solves (Xs^T Xs) z = w through the QR factors.
    Vector gram_solve(const Vector& w) const {
        Vector z = w;
        z = qr.colsPermutation().transpose() * z;
        qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>().transpose().solveInPlace(z);
        qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>().solveInPlace(z);
        return qr.colsPermutation() * z;
    }

    Matrix gram_inverse() const {
        Matrix inv(p, p);
        for (Eigen::Index j = 0; j < p; ++j) inv.col(j) = gram_solve(Vector::Unit(p, j));
        return 0.5 * (inv + inv.transpose());
    }
};

}  // namespace detail

// =============================================================================
/// Sketch-and-solve (complete sketching) estimator
/// beta^s = (Xs^T Xs)^{-1} Xs^T ys.
inline Vector sketch_and_solve(const SketchOutput& sk) {
    require(sk.ys.has_value(), errc::bad_shape, "sketch_and_solve: sketch has no response");
    return solve_ls(sk.Xs, *sk.ys);
}

/// Partial sketching estimator beta^p = (Xs^T Xs)^{-1} X^T y, where xty is
/// computed from the full data.
inline Vector partial_sketch_solve(const SketchOutput& sk, const Vector& xty) {
    require(xty.size() == sk.Xs.cols(), errc::bad_shape, "partial_sketch_solve: bad xty length");
    detail::SketchedGram gram(sk.Xs);
    return gram.gram_solve(xty);
}

/// tau/m covariance scale shared by every route (the iid sandwich has tau = 1
/// and the subsampling sandwich tau = 1 - gamma, so the sandwich scales
/// coincide with tau/m as well). Normalizations use the nominal m.
inline double ls_scale(const SketchOutput& sk) {
    return sk.tau / static_cast<double>(sk.m_nominal);
}

// =============================================================================
/// Simple covariance for the complete estimator:
/// Sigma-hat = ||eps~||^2 (Xs^T Xs)^{-1}. Valid for SRHT, SSE, Haar, and
/// Gaussian iid sketches.
inline Matrix ls_cov_simple(const SketchOutput& sk, const Vector& beta_hat) {
    switch (sk.family) {
        case sketch_family::srht:
        case sketch_family::sse:
        case sketch_family::haar:
            break;
        case sketch_family::iid:
            require(sk.kurtosis == 3.0, errc::config_invalid,
                    "ls_cov_simple: non-Gaussian iid sketches are sandwich-only");
            break;
        default:
            fail(errc::config_invalid, "ls_cov_simple: family requires the sandwich estimator");
    }
    require(sk.ys.has_value(), errc::bad_shape, "ls_cov_simple: sketch has no response");
    const Vector resid = *sk.ys - sk.Xs * beta_hat;
    const double rnorm2 = resid.squaredNorm();
    require(rnorm2 > 1e-24 * sk.ys->squaredNorm(), errc::zero_residual,
            "ls_cov_simple: sketched residual is identically zero (interpolating fit)");
    detail::SketchedGram gram(sk.Xs);
    return rnorm2 * gram.gram_inverse();
}

// =============================================================================
/// Partial-sketching covariance:
/// Sigma-hat = ||Xs beta^p||^2 (Xs^T Xs)^{-1} + (alpha + 1) beta^p beta^p',
/// with the method constant alpha (1 for SRHT; 0 for SSE, Haar, Gaussian iid).
inline Matrix ls_cov_partial(const SketchOutput& sk, const Vector& beta_hat_p) {
    require(sk.alpha.has_value(), errc::config_invalid,
            "ls_cov_partial: family has no alpha constant (sandwich-only)");
    const Vector fitted = sk.Xs * beta_hat_p;
    const double fit2 = fitted.squaredNorm();
    require(fit2 > 1e-24 * sk.Xs.squaredNorm() * std::max(beta_hat_p.squaredNorm(), 1e-300),
            errc::degenerate_signal,
            "ls_cov_partial: Xs beta^p vanishes, interval width would be zero");
    detail::SketchedGram gram(sk.Xs);
    return fit2 * gram.gram_inverse() +
           static_cast<double>(*sk.alpha + 1) * beta_hat_p * beta_hat_p.transpose();
}

// =============================================================================
/// Sandwich covariance for iid (any admissible kurtosis) and subsampling:
/// Sigma-hat = m (Xs'Xs)^{-1} Xs' diag(r o r) Xs (Xs'Xs)^{-1},
/// with r the sketched residual (complete) or Xs beta^p (partial).
inline Matrix ls_cov_sandwich(const SketchOutput& sk, const Vector& r, ls_kind mode) {
    require(sk.family == sketch_family::iid || sk.family == sketch_family::uniform_subsample,
            errc::config_invalid, "ls_cov_sandwich: only iid and subsampling families");
    require(r.size() == sk.Xs.rows(), errc::bad_shape, "ls_cov_sandwich: residual length");
    if (mode == ls_kind::complete) {
        require(r.squaredNorm() > 0.0, errc::zero_residual,
                "ls_cov_sandwich: zero residual in complete mode");
    }
    detail::SketchedGram gram(sk.Xs);
    const Matrix gram_inv = gram.gram_inverse();
    const Matrix meat = sk.Xs.transpose() * r.array().square().matrix().asDiagonal() * sk.Xs;
    return static_cast<double>(sk.m_nominal) * gram_inv * meat * gram_inv;
}

inline ls_cov_mode default_cov_mode(const SketchOutput& sk) {
    switch (sk.family) {
        case sketch_family::srht:
        case sketch_family::sse:
        case sketch_family::haar:
            return ls_cov_mode::simple;
        case sketch_family::iid:
            return sk.kurtosis == 3.0 ? ls_cov_mode::simple : ls_cov_mode::sandwich;
        case sketch_family::uniform_subsample:
            return ls_cov_mode::sandwich;
    }
    return ls_cov_mode::sandwich;
}

// =============================================================================
/// Coordinate-wise intervals beta_j +- z sqrt(scale * Sigma_jj).
inline std::vector<ConfidenceInterval> ls_confidence_intervals(const LsInferenceResult& res,
                                                               double level) {
    require(level > 0.0 && level < 1.0, errc::bad_level, "level must be in (0,1)");
    const double z = normal_quantile(0.5 + level / 2.0);
    std::vector<ConfidenceInterval> cis;
    cis.reserve(static_cast<std::size_t>(res.beta_hat.size()));
    for (Eigen::Index j = 0; j < res.beta_hat.size(); ++j) {
        cis.push_back(make_interval(res.beta_hat[j],
                                    z * std::sqrt(res.scale * res.sigma_hat(j, j))));
    }
    return cis;
}

/// Interval for the linear functional c' beta.
inline ConfidenceInterval ls_functional_interval(const LsInferenceResult& res, const Vector& c,
                                                 double level) {
    require(level > 0.0 && level < 1.0, errc::bad_level, "level must be in (0,1)");
    require(c.size() == res.beta_hat.size(), errc::bad_shape, "functional length mismatch");
    const double z = normal_quantile(0.5 + level / 2.0);
    const double var = res.scale * c.dot(res.sigma_hat * c);
    return make_interval(c.dot(res.beta_hat), z * std::sqrt(std::max(var, 0.0)));
}

/// Chi-square quantile via Wilson-Hilferty start plus bisection on the
/// regularized gamma tail computed from the incomplete beta machinery.
inline double chi_square_quantile(double level, int dof) {
    require(level > 0.0 && level < 1.0, errc::bad_level, "level must be in (0,1)");
    require(dof >= 1, errc::bad_shape, "dof must be positive");
    // P(chi2_k <= x) = I_{x/(x+s)} style is awkward; bisect on the CDF via the
    // series/continued-fraction for the regularized lower incomplete gamma.
    auto lower_gamma_reg = [dof](double x) {
        const double a = dof / 2.0;
        const double half = x / 2.0;
        if (half <= 0.0) return 0.0;
        if (half < a + 1.0) {
            double term = 1.0 / a;
            double sum = term;
            for (int k = 1; k < 500; ++k) {
                term *= half / (a + k);
                sum += term;
                if (term < sum * 1e-16) break;
            }
            return sum * std::exp(-half + a * std::log(half) - std::lgamma(a));
        }
        // Continued fraction for the upper tail.
        double b = half + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
        for (int k = 1; k < 500; ++k) {
            const double an = -k * (k - a);
            b += 2.0;
            d = an * d + b;
            if (std::abs(d) < 1e-300) d = 1e-300;
            c = b + an / c;
            if (std::abs(c) < 1e-300) c = 1e-300;
            d = 1.0 / d;
            const double del = d * c;
            h *= del;
            if (std::abs(del - 1.0) < 1e-16) break;
        }
        return 1.0 - std::exp(-half + a * std::log(half) - std::lgamma(a)) * h;
    };
    double lo = 0.0, hi = dof + 20.0 * std::sqrt(2.0 * dof) + 20.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (lower_gamma_reg(mid) < level ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Joint ellipsoidal region: returns the chi-square radius r so that
/// { beta : (beta_hat - beta)' Sigma^{-1} (beta_hat - beta) <= scale * r }
/// has asymptotic coverage `level`.
inline double ls_ellipsoid_radius(const LsInferenceResult& res, double level) {
    return chi_square_quantile(level, static_cast<int>(res.beta_hat.size()));
}

// =============================================================================
/// One-call convenience: estimate, covariance (default or forced route), and
/// coordinate-wise intervals. xty must be supplied for the partial estimator.
inline LsInferenceResult ls_infer(const SketchOutput& sk, ls_kind kind, double level,
                                  const std::optional<Vector>& xty = std::nullopt,
                                  std::optional<ls_cov_mode> force_mode = std::nullopt) {
    LsInferenceResult res;
    res.kind = kind;
    res.family = sk.family;
    res.gamma = sk.gamma;
    res.tau = sk.tau;
    res.level = level;
    res.scale = ls_scale(sk);

    const ls_cov_mode mode = force_mode.value_or(default_cov_mode(sk));
    if (kind == ls_kind::complete) {
        res.beta_hat = sketch_and_solve(sk);
        if (mode == ls_cov_mode::simple) {
            res.sigma_hat = ls_cov_simple(sk, res.beta_hat);
        } else {
            const Vector resid = *sk.ys - sk.Xs * res.beta_hat;
            res.sigma_hat = ls_cov_sandwich(sk, resid, ls_kind::complete);
        }
    } else {
        require(xty.has_value(), errc::needs_full_data,
                "ls_infer: partial estimator needs the full-data X^T y");
        res.beta_hat = partial_sketch_solve(sk, *xty);
        if (mode == ls_cov_mode::simple) {
            res.sigma_hat = ls_cov_partial(sk, res.beta_hat);
        } else {
            res.sigma_hat = ls_cov_sandwich(sk, sk.Xs * res.beta_hat, ls_kind::partial);
        }
    }
    res.cis = ls_confidence_intervals(res, level);
    return res;
}

}  // namespace sketchstat

#endif  // SKETCHSTAT_LS_INFERENCE_HPP
