#ifndef SKETCHSTAT_PCA_INFERENCE_HPP
#define SKETCHSTAT_PCA_INFERENCE_HPP

#include <cmath>
#include <optional>
#include <utility>

#include "sketchstat/error.hpp"
#include "sketchstat/linalg.hpp"
#include "sketchstat/ls_inference.hpp"
#include "sketchstat/sketch.hpp"
#include "sketchstat/stats.hpp"

namespace sketchstat {

/// Column-major vectorized index: vec(A)_{(i,j)} = A_ij sits at j*p + i.
inline Eigen::Index vec_index(Eigen::Index i, Eigen::Index j, Eigen::Index p) {
    return j * p + i;
}

// =============================================================================
/// Covariance structure G of the vectorized quadratic form
/// U' S' S U - I. Isotropic means G = I + P + alpha Q; Kurtosis means
/// G = I + P + Gamma with the data-dependent excess-kurtosis matrix; Explicit
/// carries a full absolutely symmetric p^2 x p^2 matrix (used for the
/// subsampling G_n).
class GForm {
  public:
    enum class kind { isotropic, kurtosis, explicit_g };

    static GForm isotropic(int alpha) {
        require(alpha == 0 || alpha == 1, errc::config_invalid, "GForm: alpha must be 0 or 1");
        GForm g;
        g.kind_ = kind::isotropic;
        g.alpha_ = alpha;
        return g;
    }

    static GForm kurtosis(Matrix gamma) {
        GForm g;
        g.kind_ = kind::kurtosis;
        g.matrix_ = std::move(gamma);
        g.check_square();
        return g;
    }

    static GForm explicit_matrix(Matrix full) {
        GForm g;
        g.kind_ = kind::explicit_g;
        g.matrix_ = std::move(full);
        g.check_square();
        g.check_absolute_symmetry();
        return g;
    }

    kind which() const { return kind_; }
    int alpha() const { return alpha_; }
    const Matrix& matrix() const { return matrix_; }

    /// G_{(i k),(i l)} for k, l != i, the only entries Delta_i consumes.
    double cross_entry(Eigen::Index i, Eigen::Index k, Eigen::Index l, Eigen::Index p) const {
        const double kronecker = k == l ? 1.0 : 0.0;
        switch (kind_) {
            case kind::isotropic:
                // I contributes delta_kl; P and Q vanish off the (ii) entries.
                return kronecker;
            case kind::kurtosis:
                return kronecker + matrix_(vec_index(i, k, p), vec_index(i, l, p));
            case kind::explicit_g:
                return matrix_(vec_index(i, k, p), vec_index(i, l, p));
        }
        return kronecker;
    }

    /// G_{(ii),(ii)}, the eigenvalue-pivot variance factor before tau.
    double diag_entry(Eigen::Index i, Eigen::Index p) const {
        switch (kind_) {
            case kind::isotropic:
                return 2.0 + static_cast<double>(alpha_);
            case kind::kurtosis:
                return 2.0 + matrix_(vec_index(i, i, p), vec_index(i, i, p));
            case kind::explicit_g:
                return matrix_(vec_index(i, i, p), vec_index(i, i, p));
        }
        return 2.0;
    }

  private:
    void check_square() const {
        require(matrix_.rows() == matrix_.cols() && matrix_.rows() >= 1, errc::bad_shape,
                "GForm: matrix must be square p^2 x p^2");
        const auto p = static_cast<Eigen::Index>(std::llround(std::sqrt(double(matrix_.rows()))));
        require(p * p == matrix_.rows(), errc::bad_shape, "GForm: dimension is not a square");
    }

    void check_absolute_symmetry() const {
        const auto p = static_cast<Eigen::Index>(std::llround(std::sqrt(double(matrix_.rows()))));
        const double scale = std::max(matrix_.cwiseAbs().maxCoeff(), 1e-300);
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) {
                for (Eigen::Index k = 0; k < p; ++k) {
                    for (Eigen::Index l = 0; l < p; ++l) {
                        const double g = matrix_(vec_index(i, j, p), vec_index(k, l, p));
                        const double g_ji = matrix_(vec_index(j, i, p), vec_index(k, l, p));
                        const double g_lk = matrix_(vec_index(i, j, p), vec_index(l, k, p));
                        require(std::abs(g - g_ji) <= 1e-10 * scale &&
                                    std::abs(g - g_lk) <= 1e-10 * scale,
                                errc::not_symmetric, "GForm: matrix is not absolutely symmetric");
                    }
                }
            }
        }
    }

    kind kind_ = kind::isotropic;
    int alpha_ = 0;
    Matrix matrix_;
};

// =============================================================================
/// Sketched PCA point estimates: spectrum of Xs' Xs with the shared sign
/// convention.
struct PcaInferenceResult {
    Vector lambdas_hat;   // descending
    Matrix vectors_hat;   // sign-normalized columns
    sketch_family family = sketch_family::srht;
    int m = 0;
    double gamma = 0.0;
    double tau = 1.0;
    double kurtosis = 3.0;
};

inline PcaInferenceResult sketched_pca(const SketchOutput& sk) {
    require(sk.Xs.rows() >= sk.Xs.cols(), errc::rank_deficient,
            "sketched_pca: fewer sketched rows than columns");
    const EigenDecomposition eig = sym_eig(Matrix(sk.Xs.transpose() * sk.Xs));
    require(eig.lambdas[eig.lambdas.size() - 1] >
                kRankTol * std::max(eig.lambdas[0], 0.0),
            errc::rank_deficient, "sketched_pca: sketched Gram matrix is rank deficient");
    PcaInferenceResult res;
    res.lambdas_hat = eig.lambdas;
    res.vectors_hat = eig.vectors;
    res.family = sk.family;
    res.m = sk.m_nominal;
    res.gamma = sk.gamma;
    res.tau = sk.tau;
    res.kurtosis = sk.kurtosis;
    return res;
}

namespace detail {

inline void check_gaps_at(const Vector& lambdas, Eigen::Index i, double gap_tol) {
    const double scale = std::abs(lambdas[0]);
    for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
        if (k == i) continue;
        require(std::abs(lambdas[i] - lambdas[k]) > gap_tol * scale, errc::eigengap_too_small,
                "eigengap at the requested index is below the inference gate");
    }
}

/// n x p^2 matrix whose column (k1, k2) is the entrywise product of U's
/// columns k1 and k2; fourth-moment contractions are then W' W.
inline Matrix pairwise_products(const Matrix& U) {
    const Eigen::Index p = U.cols();
    Matrix W(U.rows(), p * p);
    for (Eigen::Index k2 = 0; k2 < p; ++k2) {
        for (Eigen::Index k1 = 0; k1 < p; ++k1) {
            W.col(vec_index(k1, k2, p)) = U.col(k1).cwiseProduct(U.col(k2));
        }
    }
    return W;
}

inline void check_orthonormal(const Matrix& U, double tol) {
    const Matrix gram = U.transpose() * U;
    const double err = (gram - Matrix::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff();
    require(err <= tol, errc::not_orthonormal, "matrix does not have orthonormal columns");
}

}  // namespace detail

// =============================================================================
/// The eigenvector covariance functional
///   Delta_i = sum_{k != i, l != i}
///             lambda_i sqrt(lambda_k lambda_l) /
///             ((lambda_i - lambda_k)(lambda_i - lambda_l))
///             G_{(ik),(il)} v_k v_l'.
/// For an Isotropic GForm the cross entries collapse to delta_kl, giving the
/// plug-in closed form sum_{k != i} lambda_i lambda_k / (lambda_i - lambda_k)^2
/// v_k v_k'. Formally infinite at repeated eigenvalues, so ties inside the
/// gate refuse with EigengapTooSmall. Homogeneous of degree zero in lambda.
/// The index i is 0-based.
inline Matrix delta_i(const Vector& lambdas, const Matrix& vectors, const GForm& g,
                      Eigen::Index i, double gap_tol = kEigengapTol) {
    const Eigen::Index p = lambdas.size();
    require(i >= 0 && i < p, errc::bad_shape, "delta_i: index out of range");
    require(vectors.rows() == p && vectors.cols() == p, errc::bad_shape,
            "delta_i: vectors must be p x p");
    for (Eigen::Index k = 0; k < p; ++k) {
        require(lambdas[k] > 0.0, errc::rank_deficient, "delta_i: eigenvalues must be positive");
    }
    detail::check_gaps_at(lambdas, i, gap_tol);

    Matrix delta = Matrix::Zero(p, p);
    if (g.which() == GForm::kind::isotropic) {
        for (Eigen::Index k = 0; k < p; ++k) {
            if (k == i) continue;
            const double gap = lambdas[i] - lambdas[k];
            const double w = lambdas[i] * lambdas[k] / (gap * gap);
            delta.noalias() += w * vectors.col(k) * vectors.col(k).transpose();
        }
        return delta;
    }
    for (Eigen::Index k = 0; k < p; ++k) {
        if (k == i) continue;
        for (Eigen::Index l = 0; l < p; ++l) {
            if (l == i) continue;
            const double entry = g.cross_entry(i, k, l, p);
            if (entry == 0.0) continue;
            const double w = lambdas[i] * std::sqrt(lambdas[k] * lambdas[l]) /
                             ((lambdas[i] - lambdas[k]) * (lambdas[i] - lambdas[l]));
            delta.noalias() += (w * entry) * vectors.col(k) * vectors.col(l).transpose();
        }
    }
    return delta;
}

// =============================================================================
/// Excess-kurtosis matrix for iid sketching:
/// (Gamma)_{(k1 k2),(k3 k4)} = (kappa_4 - 3) sum_h U_{h k1} U_{h k2} U_{h k3} U_{h k4}.
inline Matrix gamma_kurtosis(const Matrix& U, double kappa4) {
    detail::check_orthonormal(U, 1e-8);
    const Matrix W = detail::pairwise_products(U);
    return (kappa4 - 3.0) * (W.transpose() * W);
}

/// Subsampling covariance structure
/// G_n = n sum_i (u_i u_i') (x) (u_i u_i'), with u_i the rows of U.
inline Matrix subsample_g(const Matrix& U) {
    detail::check_orthonormal(U, 1e-8);
    const Matrix W = detail::pairwise_products(U);
    return static_cast<double>(U.rows()) * (W.transpose() * W);
}

/// The GForm matching a sketch family's symmetric-quadratic-form limit:
/// I+P+Q for SRHT, I+P for SSE / Haar / Gaussian iid, I+P+Gamma_n for
/// non-Gaussian iid (needs the full-data U), Explicit(G_n) for subsampling.
inline GForm family_gform(const SketchOutput& sk, const std::optional<Matrix>& U_full = std::nullopt) {
    switch (sk.family) {
        case sketch_family::srht:
            return GForm::isotropic(1);
        case sketch_family::sse:
        case sketch_family::haar:
            return GForm::isotropic(0);
        case sketch_family::iid:
            if (sk.kurtosis == 3.0) return GForm::isotropic(0);
            require(U_full.has_value(), errc::needs_full_data,
                    "non-Gaussian iid inference needs the full-data left singular matrix");
            return GForm::kurtosis(gamma_kurtosis(*U_full, sk.kurtosis));
        case sketch_family::uniform_subsample:
            require(U_full.has_value(), errc::needs_full_data,
                    "subsampling eigenvector inference needs the full-data left singular matrix");
            return GForm::explicit_matrix(subsample_g(*U_full));
    }
    fail(errc::config_invalid, "family_gform: unknown family");
}

// =============================================================================
/// Eigenvalue interval Lambda_i (1 -+ z sqrt(factor / m)), with the
/// method-specific factor:
///   SRHT 3(1-gamma); SSE 2; Gaussian iid 2; Haar 2(1-gamma);
///   non-Gaussian iid 2 + (Gamma_n)_{(ii),(ii)} (oracle, needs U_n);
///   subsampling (1-gamma) m sum_j U~_{ji}^4 from the sketched left singular
///   matrix, or the oracle (1-gamma) n sum_k U_{ki}^4 when U_n is supplied.
/// Index i is 0-based.
inline ConfidenceInterval eigenvalue_ci(const PcaInferenceResult& res, const SketchOutput& sk,
                                        Eigen::Index i, double level,
                                        const std::optional<Matrix>& U_full = std::nullopt,
                                        double gap_tol = kEigengapTol) {
    require(level > 0.0 && level < 1.0, errc::bad_level, "level must be in (0,1)");
    const Eigen::Index p = res.lambdas_hat.size();
    require(i >= 0 && i < p, errc::bad_shape, "eigenvalue_ci: index out of range");
    detail::check_gaps_at(res.lambdas_hat, i, gap_tol);

    double factor = 0.0;
    bool low_gamma = false;
    switch (sk.family) {
        case sketch_family::srht:
            factor = 3.0 * sk.tau;
            break;
        case sketch_family::sse:
            factor = 2.0;
            break;
        case sketch_family::haar:
            factor = 2.0 * sk.tau;
            break;
        case sketch_family::iid:
            if (sk.kurtosis == 3.0) {
                factor = 2.0;
            } else {
                require(U_full.has_value(), errc::needs_full_data,
                        "non-Gaussian iid eigenvalue CI needs the full-data U (for Gamma_n)");
                const Matrix gamma_n = gamma_kurtosis(*U_full, sk.kurtosis);
                factor = 2.0 + gamma_n(vec_index(i, i, p), vec_index(i, i, p));
            }
            break;
        case sketch_family::uniform_subsample: {
            if (U_full.has_value()) {
                factor = sk.tau * static_cast<double>(U_full->rows()) *
                         U_full->col(i).array().pow(4).sum();
            } else {
                const ThinSvd sketched_svd = thin_svd(sk.Xs);
                factor = sk.tau * static_cast<double>(sk.m_nominal) *
                         sketched_svd.U.col(i).array().pow(4).sum();
                low_gamma = sk.gamma < 0.05;
            }
            break;
        }
    }

    const double z = normal_quantile(0.5 + level / 2.0);
    const double rel = z * std::sqrt(factor / static_cast<double>(res.m));
    ConfidenceInterval ci = make_interval(res.lambdas_hat[i], std::abs(res.lambdas_hat[i]) * rel);
    ci.low_gamma_warning = low_gamma;
    return ci;
}

// =============================================================================
/// Interval for c' v_i:
///   c' v^_i -+ z sqrt(tau / m) sqrt(c' Delta^_i c),
/// with Delta^_i the plug-in from the sketched spectrum and the family's
/// G-form. Subsampling and non-Gaussian iid need the full-data U (oracle
/// mode); no sketched G-hat is invented for them. c must be a unit vector,
/// and directions with c ~ +-v^_i refuse with DegenerateDirection.
inline ConfidenceInterval eigenvector_ci(const PcaInferenceResult& res, const SketchOutput& sk,
                                         Eigen::Index i, const Vector& c, double level,
                                         const std::optional<Matrix>& U_full = std::nullopt,
                                         double gap_tol = kEigengapTol) {
    require(level > 0.0 && level < 1.0, errc::bad_level, "level must be in (0,1)");
    const Eigen::Index p = res.lambdas_hat.size();
    require(c.size() == p, errc::bad_shape, "eigenvector_ci: functional length mismatch");
    require(std::abs(c.norm() - 1.0) <= 1e-8, errc::config_invalid,
            "eigenvector_ci: c must be a unit vector");

    const GForm g = family_gform(sk, U_full);
    const Matrix delta = delta_i(res.lambdas_hat, res.vectors_hat, g, i, gap_tol);
    const double quad = c.dot(delta * c);
    require(quad > 1e-8, errc::degenerate_direction,
            "eigenvector_ci: variance functional vanishes (c is aligned with v^_i)");

    const double z = normal_quantile(0.5 + level / 2.0);
    const double half = z * std::sqrt(sk.tau / static_cast<double>(res.m)) * std::sqrt(quad);
    return make_interval(c.dot(res.vectors_hat.col(i)), half);
}

}  // namespace sketchstat

#endif  // SKETCHSTAT_PCA_INFERENCE_HPP
