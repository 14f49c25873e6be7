#ifndef SKETCHSTAT_SKETCH_HPP
#define SKETCHSTAT_SKETCH_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sketchstat/error.hpp"
#include "sketchstat/fwht.hpp"
#include "sketchstat/linalg.hpp"
#include "sketchstat/rng.hpp"

namespace sketchstat {

enum class sketch_family { srht, sse, iid, haar, uniform_subsample };

inline const char* family_name(sketch_family f) {
    switch (f) {
        case sketch_family::srht: return "srht";
        case sketch_family::sse: return "sse";
        case sketch_family::iid: return "iid";
        case sketch_family::haar: return "haar";
        case sketch_family::uniform_subsample: return "subsample";
    }
    return "?";
}

// =============================================================================
/// Entry distribution for i.i.d. sketches: mean 0, variance 1, declared fourth
/// moment. The kurtosis is declared, never estimated from samples, because the
/// inference formulas need it exactly.
struct iid_dist {
    std::string name;
    double kurtosis = 3.0;
    bool is_gaussian = false;
    std::function<double(rng_stream&)> sampler;

    static iid_dist gaussian() {
        iid_dist d;
        d.name = "gaussian";
        d.kurtosis = 3.0;
        d.is_gaussian = true;
        d.sampler = [](rng_stream& rng) { return rng.normal(); };
        return d;
    }

    /// Scaled Student-t with the requested fourth moment (kurtosis > 3); the
    /// degrees of freedom solve 3(nu-2)/(nu-4) = kurtosis.
    static iid_dist scaled_t(double kurt) {
        require(kurt > 3.0, errc::config_invalid, "scaled_t: kurtosis must exceed 3");
        iid_dist d;
        d.name = "t";
        d.kurtosis = kurt;
        const double nu = (4.0 * kurt - 6.0) / (kurt - 3.0);
        d.sampler = [nu](rng_stream& rng) {
            const double z = rng.normal();
            const double chi2 = 2.0 * rng.gamma(nu / 2.0);
            return z * std::sqrt(nu - 2.0) / std::sqrt(chi2);
        };
        return d;
    }

    /// Rademacher has the minimal kurtosis 1 and is rejected by apply_iid;
    /// kept around so the gate has something to refuse in tests.
    static iid_dist rademacher() {
        iid_dist d;
        d.name = "rademacher";
        d.kurtosis = 1.0;
        d.sampler = [](rng_stream& rng) { return rng.rademacher(); };
        return d;
    }
};

// =============================================================================
/// Which sketch to draw: family, nominal size m, family parameters, RNG seed.
struct SketchSpec {
    sketch_family family = sketch_family::srht;
    int m = 0;
    std::uint64_t seed = 0;
    int zeta = 1;                       // SSE sparsity; zeta = 1 is CountSketch
    std::optional<iid_dist> dist;       // iid family only

    std::string label() const {
        switch (family) {
            case sketch_family::sse:
                return zeta == 1 ? "countsketch" : "sse" + std::to_string(zeta);
            case sketch_family::iid:
                return dist && !dist->is_gaussian ? "iid-" + dist->name : "gaussian";
            default:
                return family_name(family);
        }
    }
};

// =============================================================================
/// The sketched data plus the method metadata inference needs. Immutable after
/// construction and safe to share across threads.
struct SketchOutput {
    Matrix Xs;                       // m_eff x p sketched design
    std::optional<Vector> ys;        // sketched response, when the data had one
    int m_nominal = 0;
    int m_eff = 0;
    double gamma = 0.0;              // m / n with the original n
    double tau = 1.0;                // method variance deflation factor
    std::optional<int> alpha;        // partial-sketching constant; none = sandwich-only
    sketch_family family = sketch_family::srht;
    double kurtosis = 3.0;           // declared kappa_4 (iid family)
    int zeta = 0;                    // SSE sparsity used
    std::uint64_t scatter_ops = 0;   // SSE instrumentation: scalar multiply-adds
};

namespace detail {

inline Matrix augmented(const DataMatrix& data) {
    if (!data.y) return data.X;
    Matrix A(data.n(), data.p() + 1);
    A.leftCols(data.p()) = data.X;
    A.col(data.p()) = *data.y;
    return A;
}

inline SketchOutput split_output(Matrix&& sketched, const DataMatrix& data) {
    SketchOutput out;
    if (data.y) {
        out.Xs = sketched.leftCols(data.p());
        out.ys = sketched.col(data.p());
    } else {
        out.Xs = std::move(sketched);
    }
    return out;
}

inline void check_sketch_size(const DataMatrix& data, int m) {
    validate(data);
    require(m >= data.p(), errc::sketch_too_small, "sketch size m must be at least p");
    require(m < data.n(), errc::sketch_too_large, "sketch size m must be below n");
}

/// Haar-distributed rows x cols orthonormal matrix: QR of a Gaussian draw with
/// the R-diagonal sign convention.
inline Matrix haar_stiefel(int rows, int cols, rng_stream& rng) {
    Matrix Z(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) Z(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Matrix> qr(Z);
    Matrix Q = qr.householderQ() * Matrix::Identity(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (qr.matrixQR()(j, j) < 0) Q.col(j) = -Q.col(j);
    }
    return Q;
}

}  // namespace detail

// =============================================================================
/// Subsampled randomized Hadamard transform, S = sqrt(n'/m) B H_l D Pi_n.
/// The data is zero-padded to n' = 2^ceil(log2 n); D holds i.i.d. signs, H_l
/// is the orthonormal Hadamard transform applied per column, and B keeps each
/// of the n' mixed rows independently with probability m/n' (so E[S^T S] = I
/// on the original coordinates). Unselected rows are never materialized in the
/// output. gamma and tau are reported against the original n.
inline SketchOutput apply_srht(const DataMatrix& data, int m, std::uint64_t seed) {
    detail::check_sketch_size(data, m);
    const Eigen::Index n = data.n();

    std::size_t np = 1;
    while (np < static_cast<std::size_t>(n)) np <<= 1;

    Matrix A = Matrix::Zero(static_cast<Eigen::Index>(np), data.y ? data.p() + 1 : data.p());
    A.topRows(n) = detail::augmented(data);

    rng_stream sign_rng(seed, streams::id(streams::kSrhtSigns));
    for (std::size_t i = 0; i < np; ++i) {
        const double s = sign_rng.rademacher();
        if (static_cast<Eigen::Index>(i) < n && s < 0) A.row(static_cast<Eigen::Index>(i)) *= -1.0;
    }

    fwht_columns(A);

    rng_stream row_rng(seed, streams::id(streams::kSrhtRows));
    const double keep_prob = static_cast<double>(m) / static_cast<double>(np);
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(m) + 64);
    for (std::size_t i = 0; i < np; ++i) {
        if (row_rng.bernoulli(keep_prob)) keep.push_back(static_cast<Eigen::Index>(i));
    }

    const double scale = std::sqrt(static_cast<double>(np) / static_cast<double>(m));
    Matrix sketched(static_cast<Eigen::Index>(keep.size()), A.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) sketched.row(static_cast<Eigen::Index>(r)) = scale * A.row(keep[r]);

    SketchOutput out = detail::split_output(std::move(sketched), data);
    out.m_nominal = m;
    out.m_eff = static_cast<int>(keep.size());
    out.gamma = static_cast<double>(m) / static_cast<double>(n);
    out.tau = 1.0 - out.gamma;
    out.alpha = 1;
    out.family = sketch_family::srht;
    return out;
}

// =============================================================================
/// Sparse sign embedding: every column of S has exactly zeta nonzeros at
/// uniformly chosen distinct rows, values +-1/sqrt(zeta), independent across
/// columns. Applied as a sparse column scatter, cost O(zeta nnz(X)).
inline SketchOutput apply_sse(const DataMatrix& data, int m, int zeta, std::uint64_t seed) {
    detail::check_sketch_size(data, m);
    require(zeta >= 1 && zeta <= m, errc::bad_sparsity, "sse: need 1 <= zeta <= m");

    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    const Eigen::Index k = data.y ? p + 1 : p;

    // Positions are drawn uniformly on [0, m) with duplicates rejected until
    // zeta distinct rows are collected, which samples zeta-subsets uniformly.
    // Each cipher word packs four 14-bit position lanes (decoded with
    // Lemire's unbiased multiply-shift rejection) plus eight spare sign bits,
    // so a column with zeta <= 8 costs one cipher block when m < 2^14 (larger
    // m falls back to 32-bit lanes), and the blocks of adjacent columns are
    // evaluated with interleaved rounds to hide the cipher latency. Rows are
    // gathered into a small buffer and scattered into row-major staging,
    // keeping both sides of the accumulation contiguous.
    const bool narrow = m <= 0x3FFF;
    const int lane_bits = narrow ? 14 : 32;
    const std::uint64_t lane_mask = narrow ? 0x3FFFu : 0xFFFFFFFFu;
    const int lanes_per_word = narrow ? 4 : 2;
    const auto range = static_cast<std::uint64_t>(m);
    const std::uint32_t reject_below =
        narrow ? (0x4000u % range) : static_cast<std::uint32_t>(UINT64_C(0x100000000) % range);

    std::vector<double> staging(static_cast<std::size_t>(m) * static_cast<std::size_t>(k), 0.0);
    std::vector<double> row_buf(static_cast<std::size_t>(k));
    std::vector<std::uint32_t> chosen(static_cast<std::size_t>(zeta));
    const double* x_base = data.X.data();
    const double value = 1.0 / std::sqrt(static_cast<double>(zeta));
    std::uint64_t ops = 0;

    auto scatter_column = [&](Eigen::Index j, std::uint64_t w0, std::uint64_t w1) {
        const std::uint64_t stream = streams::id(streams::kSseColumn, static_cast<std::uint64_t>(j));
        int avail = 2;  // 2: w0 next, 1: w1 next, 0: draw a fresh block
        std::uint64_t ctr = 1;
        auto next_word = [&]() -> std::uint64_t {
            if (avail == 2) { avail = 1; return w0; }
            if (avail == 1) { avail = 0; return w1; }
            const auto blk = philox2x64::block(seed, stream, ctr++);
            w1 = blk[1];
            avail = 1;
            return blk[0];
        };

        std::uint64_t lane_word = 0;
        int lanes_left = 0;
        std::uint64_t sign_pool = 0;
        int sign_avail = 0;
        auto refill_lanes = [&] {
            const std::uint64_t w = next_word();
            if (narrow) {
                lane_word = w & 0x00FFFFFFFFFFFFFFull;
                if (sign_avail <= 56) {  // pool holds at most 64 bits
                    sign_pool |= (w >> 56) << sign_avail;
                    sign_avail += 8;
                }
            } else {
                lane_word = w;
            }
            lanes_left = lanes_per_word;
        };

        int cnt = 0;
        while (cnt < zeta) {
            if (lanes_left == 0) refill_lanes();
            const std::uint64_t lane = lane_word & lane_mask;
            lane_word >>= lane_bits;
            --lanes_left;
            const std::uint64_t prod = lane * range;
            if (static_cast<std::uint32_t>(prod & lane_mask) < reject_below) continue;
            const auto idx = static_cast<std::uint32_t>(prod >> lane_bits);
            bool dup = false;
            for (int c = 0; c < cnt; ++c) {
                if (chosen[static_cast<std::size_t>(c)] == idx) { dup = true; break; }
            }
            if (!dup) chosen[static_cast<std::size_t>(cnt++)] = idx;
        }

        for (Eigen::Index c = 0; c < p; ++c) {
            row_buf[static_cast<std::size_t>(c)] = x_base[c * n + j];
        }
        if (data.y) row_buf[static_cast<std::size_t>(p)] = (*data.y)[j];

        const double* buf = row_buf.data();
        const Eigen::Index k4 = k - (k % 4);
        for (int t = 0; t < cnt; ++t) {
            if (sign_avail == 0) {
                sign_pool = next_word();
                sign_avail = 64;
            }
            const double sv = (sign_pool & 1u) ? value : -value;
            sign_pool >>= 1;
            --sign_avail;
            double* dst = staging.data() +
                          static_cast<std::size_t>(chosen[static_cast<std::size_t>(t)]) *
                              static_cast<std::size_t>(k);
            Eigen::Index c = 0;
            for (; c < k4; c += 4) {
                dst[c] += sv * buf[c];
                dst[c + 1] += sv * buf[c + 1];
                dst[c + 2] += sv * buf[c + 2];
                dst[c + 3] += sv * buf[c + 3];
            }
            for (; c < k; ++c) dst[c] += sv * buf[c];
            ops += static_cast<std::uint64_t>(k);
        }
    };

    for (Eigen::Index j = 0; j + 1 < n; j += 2) {
        const auto blocks = philox2x64::block2(
            seed, streams::id(streams::kSseColumn, static_cast<std::uint64_t>(j)), 0,
            streams::id(streams::kSseColumn, static_cast<std::uint64_t>(j + 1)), 0);
        scatter_column(j, blocks[0][0], blocks[0][1]);
        scatter_column(j + 1, blocks[1][0], blocks[1][1]);
    }
    if (n % 2 != 0) {
        const auto blk = philox2x64::block(
            seed, streams::id(streams::kSseColumn, static_cast<std::uint64_t>(n - 1)), 0);
        scatter_column(n - 1, blk[0], blk[1]);
    }

    SketchOutput out;
    out.Xs.resize(m, p);
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < p; ++c) {
            out.Xs(r, c) = staging[static_cast<std::size_t>(r) * static_cast<std::size_t>(k) +
                                   static_cast<std::size_t>(c)];
        }
    }
    if (data.y) {
        Vector ys(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            ys[r] = staging[static_cast<std::size_t>(r) * static_cast<std::size_t>(k) +
                            static_cast<std::size_t>(p)];
        }
        out.ys = std::move(ys);
    }
    out.m_nominal = m;
    out.m_eff = m;
    out.gamma = static_cast<double>(m) / static_cast<double>(data.n());
    out.tau = 1.0;
    out.alpha = 0;
    out.family = sketch_family::sse;
    out.zeta = zeta;
    out.scatter_ops = ops;
    return out;
}

// =============================================================================
/// i.i.d. sketch: entries of sqrt(m) S are i.i.d. draws from `dist`
/// (mean 0, variance 1, kurtosis > 1.05). Gaussian outputs support the simple
/// covariance route (alpha = 0); any other distribution is sandwich-only and
/// carries its declared kurtosis. Each output row has its own RNG stream.
inline SketchOutput apply_iid(const DataMatrix& data, int m, const iid_dist& dist,
                              std::uint64_t seed) {
    detail::check_sketch_size(data, m);
    require(dist.kurtosis > 1.05, errc::kurtosis_too_low,
            "iid: kurtosis must exceed 1.05 (Rademacher-type sketches are rejected)");
    require(static_cast<bool>(dist.sampler), errc::config_invalid, "iid: dist has no sampler");

    const Matrix A = detail::augmented(data);
    const Eigen::Index n = data.n();
    Matrix sketched(m, A.cols());
    Vector t(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (int i = 0; i < m; ++i) {
        rng_stream row_rng(seed, streams::id(streams::kIidRow, static_cast<std::uint64_t>(i)));
        if (dist.is_gaussian) {
            for (Eigen::Index j = 0; j < n; ++j) t[j] = row_rng.normal();
        } else {
            for (Eigen::Index j = 0; j < n; ++j) t[j] = dist.sampler(row_rng);
        }
        sketched.row(i) = scale * (A.transpose() * t).transpose();
    }

    SketchOutput out = detail::split_output(std::move(sketched), data);
    out.m_nominal = m;
    out.m_eff = m;
    out.gamma = static_cast<double>(m) / static_cast<double>(n);
    out.tau = 1.0;
    if (dist.is_gaussian) out.alpha = 0;
    out.family = sketch_family::iid;
    out.kurtosis = dist.kurtosis;
    return out;
}

// =============================================================================
/// Uniform orthogonal (Haar) sketch, S = gamma^{-1/2} S0 with S0 uniform over
/// m x n partial orthogonal matrices. S0 equals the first m rows of a Haar
/// orthogonal matrix O, and O Q is Haar-Stiefel for any fixed orthonormal Q,
/// so S0 A is sampled exactly as (first m rows of a Haar n x k frame) R with
/// A = Q R. That keeps the cost at O(n k^2) instead of O(m^2 n).
inline SketchOutput apply_haar(const DataMatrix& data, int m, std::uint64_t seed) {
    detail::check_sketch_size(data, m);
    const Matrix A = detail::augmented(data);
    const Eigen::Index n = A.rows();
    const Eigen::Index k = A.cols();

    Eigen::HouseholderQR<Matrix> qr(A);
    const Matrix R = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();

    rng_stream rng(seed, streams::id(streams::kHaarGaussian));
    const Matrix frame = detail::haar_stiefel(static_cast<int>(n), static_cast<int>(k), rng);

    const double gamma = static_cast<double>(m) / static_cast<double>(n);
    Matrix sketched = (frame.topRows(m) * R) / std::sqrt(gamma);

    SketchOutput out = detail::split_output(std::move(sketched), data);
    out.m_nominal = m;
    out.m_eff = m;
    out.gamma = gamma;
    out.tau = 1.0 - gamma;
    out.alpha = 0;
    out.family = sketch_family::haar;
    return out;
}

// =============================================================================
/// Uniform random subsampling: each row kept independently with probability
/// gamma = m/n and scaled by sqrt(n/m). The realized row count is reported;
/// if it falls below p the trial fails with DegenerateSample (no resampling,
/// so harnesses can count failures honestly).
inline SketchOutput apply_uniform_subsample(const DataMatrix& data, int m, std::uint64_t seed) {
    detail::check_sketch_size(data, m);
    const Matrix A = detail::augmented(data);
    const Eigen::Index n = A.rows();
    const double gamma = static_cast<double>(m) / static_cast<double>(n);

    rng_stream rng(seed, streams::id(streams::kSubsampleRows));
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(m) + 64);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (rng.bernoulli(gamma)) keep.push_back(i);
    }
    require(static_cast<Eigen::Index>(keep.size()) >= data.p(), errc::degenerate_sample,
            "subsample: realized row count fell below p");

    const double scale = std::sqrt(static_cast<double>(n) / static_cast<double>(m));
    Matrix sketched(static_cast<Eigen::Index>(keep.size()), A.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) sketched.row(static_cast<Eigen::Index>(r)) = scale * A.row(keep[r]);

    SketchOutput out = detail::split_output(std::move(sketched), data);
    out.m_nominal = m;
    out.m_eff = static_cast<int>(keep.size());
    out.gamma = gamma;
    out.tau = 1.0 - gamma;
    out.family = sketch_family::uniform_subsample;
    return out;
}

inline SketchOutput apply_sketch(const DataMatrix& data, const SketchSpec& spec) {
    switch (spec.family) {
        case sketch_family::srht:
            return apply_srht(data, spec.m, spec.seed);
        case sketch_family::sse:
            return apply_sse(data, spec.m, spec.zeta, spec.seed);
        case sketch_family::iid:
            return apply_iid(data, spec.m, spec.dist ? *spec.dist : iid_dist::gaussian(),
                             spec.seed);
        case sketch_family::haar:
            return apply_haar(data, spec.m, spec.seed);
        case sketch_family::uniform_subsample:
            return apply_uniform_subsample(data, spec.m, spec.seed);
    }
    fail(errc::config_invalid, "apply_sketch: unknown family");
}

// =============================================================================
/// Per-method constants: tau, the partial-sketching alpha (absent for
/// sandwich-only methods), and the PCA variance factors for the eigenvalue and
/// eigenvector pivots. Data-dependent factors (subsampling; iid with
/// kurtosis != 3) come back empty and are resolved by the inference layer.
struct MethodConstants {
    double tau = 1.0;
    std::optional<int> alpha;
    std::optional<double> eigval_factor;
    std::optional<double> eigvec_factor;
};

inline MethodConstants method_constants(const SketchSpec& spec, int m, int n) {
    require(m >= 1 && n > m, errc::config_invalid, "method_constants: need 1 <= m < n");
    const double gamma = static_cast<double>(m) / static_cast<double>(n);
    MethodConstants out;
    switch (spec.family) {
        case sketch_family::srht:
            out = {1.0 - gamma, 1, 3.0 * (1.0 - gamma), 1.0 - gamma};
            break;
        case sketch_family::sse:
            out = {1.0, 0, 2.0, 1.0};
            break;
        case sketch_family::iid:
            if (!spec.dist || spec.dist->is_gaussian) {
                out = {1.0, 0, 2.0, 1.0};
            } else {
                out = {1.0, std::nullopt, std::nullopt, std::nullopt};
            }
            break;
        case sketch_family::haar:
            out = {1.0 - gamma, 0, 2.0 * (1.0 - gamma), 1.0 - gamma};
            break;
        case sketch_family::uniform_subsample:
            out = {1.0 - gamma, std::nullopt, std::nullopt, std::nullopt};
            break;
    }
    return out;
}

}  // namespace sketchstat

#endif  // SKETCHSTAT_SKETCH_HPP
