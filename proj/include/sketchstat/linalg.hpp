#ifndef SKETCHSTAT_LINALG_HPP
#define SKETCHSTAT_LINALG_HPP

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "sketchstat/error.hpp"

namespace sketchstat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative floor under which a trailing singular value means rank deficiency.
constexpr double kRankTol = 1e-10;
/// |entry| above this counts as the "first nonzero coordinate" for the
/// eigenvector sign convention. Must be deterministic across backends.
constexpr double kSignTol = 1e-12;
/// Relative gap under which two consecutive singular/eigen values are
/// reported as tied.
constexpr double kTieTol = 1e-10;
/// Default relative eigengap gate for the inference paths (configurable at
/// the call sites that take a gap tolerance).
constexpr double kEigengapTol = 1e-8;

// =============================================================================
/// Dense n x p design matrix with an optional response vector: the "full data"
/// that sketching compresses. Rows are samples, columns are features, p <= n.
struct DataMatrix {
    Matrix X;
    std::optional<Vector> y;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
};

inline void validate(const DataMatrix& data) {
    require(data.p() >= 1, errc::bad_shape, "need at least one column");
    require(data.n() >= data.p(), errc::bad_shape, "need n >= p");
    require(data.X.allFinite(), errc::non_finite, "design matrix has NaN/Inf entries");
    if (data.y) {
        require(data.y->size() == data.n(), errc::bad_shape, "response length != row count");
        require(data.y->allFinite(), errc::non_finite, "response has NaN/Inf entries");
    }
}

struct ThinSvd {
    Matrix U;  // n x p, orthonormal columns
    Vector L;  // p descending positive singular values
    Matrix V;  // p x p orthogonal, sign-normalized columns
    std::vector<int> ties;  // indices i with L[i] ~ L[i+1] (relative kTieTol)
};

struct EigenDecomposition {
    Vector lambdas;  // p descending eigenvalues
    Matrix vectors;  // p x p, orthonormal sign-normalized columns
    std::vector<int> ties;
};

namespace detail {

/// Flips each column of `cols` so that its first entry with |value| > kSignTol
/// is positive. When `paired` is given, its matching column flips too, so a
/// factorization using both stays intact.
inline void apply_sign_convention(Matrix& cols, Matrix* paired = nullptr) {
    for (Eigen::Index j = 0; j < cols.cols(); ++j) {
        for (Eigen::Index i = 0; i < cols.rows(); ++i) {
            const double v = cols(i, j);
            if (std::abs(v) > kSignTol) {
                if (v < 0) {
                    cols.col(j) = -cols.col(j);
                    if (paired) paired->col(j) = -paired->col(j);
                }
                break;
            }
        }
    }
}

inline std::vector<int> find_ties(const Vector& descending) {
    std::vector<int> ties;
    const double scale = descending.size() > 0 ? std::abs(descending[0]) : 0.0;
    for (Eigen::Index i = 0; i + 1 < descending.size(); ++i) {
        if (std::abs(descending[i] - descending[i + 1]) <= kTieTol * scale) {
            ties.push_back(static_cast<int>(i));
        }
    }
    return ties;
}

}  // namespace detail

// =============================================================================
/// Thin SVD X = U diag(L) V^T with descending singular values and the sign
/// convention applied to V's columns (U flips jointly). Ties are reported in
/// the result, never silently perturbed.
inline ThinSvd thin_svd(const Matrix& X) {
    require(X.allFinite(), errc::non_finite, "thin_svd: input has NaN/Inf entries");
    require(X.rows() >= X.cols(), errc::bad_shape, "thin_svd: need n >= p");

    Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    ThinSvd out;
    out.U = svd.matrixU();
    out.L = svd.singularValues();
    out.V = svd.matrixV();

    const Eigen::Index p = X.cols();
    require(out.L[p - 1] > kRankTol * out.L[0], errc::rank_deficient,
            "thin_svd: smallest singular value below rank tolerance");

    detail::apply_sign_convention(out.V, &out.U);
    out.ties = detail::find_ties(out.L);
    return out;
}

inline ThinSvd thin_svd(const DataMatrix& data) {
    validate(data);
    return thin_svd(data.X);
}

// =============================================================================
/// Symmetric eigendecomposition with descending eigenvalues and sign-normalized
/// eigenvectors. The input is symmetrized as (A + A^T)/2 after the symmetry
/// check, so the output is exactly invariant under that map.
inline EigenDecomposition sym_eig(const Matrix& A) {
    require(A.rows() == A.cols(), errc::bad_shape, "sym_eig: matrix not square");
    require(A.allFinite(), errc::non_finite, "sym_eig: input has NaN/Inf entries");
    const double scale = A.cwiseAbs().maxCoeff();
    const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
    require(asym <= 1e-10 * std::max(scale, 1e-300), errc::not_symmetric,
            "sym_eig: input is not symmetric to 1e-10 relative");

    const Matrix sym = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    require(eig.info() == Eigen::Success, errc::non_finite, "sym_eig: solver failed");

    const Eigen::Index p = A.rows();
    EigenDecomposition out;
    out.lambdas = eig.eigenvalues().reverse();
    out.vectors = eig.eigenvectors().rowwise().reverse();
    detail::apply_sign_convention(out.vectors);
    out.ties = detail::find_ties(out.lambdas);
    (void)p;
    return out;
}

// =============================================================================
/// Least squares via column-pivoted QR, with the rank gate expressed on the
/// diagonal of R (proportional to the singular values up to a modest factor).
inline Vector solve_ls(const Matrix& X, const Vector& y) {
    require(X.allFinite() && y.allFinite(), errc::non_finite, "solve_ls: non-finite input");
    require(X.rows() == y.size(), errc::bad_shape, "solve_ls: shape mismatch");
    require(X.rows() >= X.cols(), errc::bad_shape, "solve_ls: need n >= p");

    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    const auto& R = qr.matrixR();
    const Eigen::Index p = X.cols();
    const double r_max = std::abs(R(0, 0));
    const double r_min = std::abs(R(p - 1, p - 1));
    require(r_min > kRankTol * r_max, errc::rank_deficient,
            "solve_ls: design matrix is numerically rank deficient");
    return qr.solve(y);
}

inline Vector solve_ls(const DataMatrix& data) {
    validate(data);
    require(data.y.has_value(), errc::bad_shape, "solve_ls: data has no response vector");
    return solve_ls(data.X, *data.y);
}

}  // namespace sketchstat

#endif  // SKETCHSTAT_LINALG_HPP
