#ifndef SKETCHSTAT_DATAGEN_HPP
#define SKETCHSTAT_DATAGEN_HPP

#include <cmath>
#include <cstdint>
#include <utility>

#include "sketchstat/error.hpp"
#include "sketchstat/linalg.hpp"
#include "sketchstat/rng.hpp"
#include "sketchstat/sketch.hpp"

namespace sketchstat {

// =============================================================================
/// Synthetic dataset recipes. Case 1 is a delocalized partial-orthogonal
/// design with singular values 1, 1/2, ..., 1/p; Case 2 builds the left
/// singular basis from heavy-tailed t_2 rows (localized, stresses the
/// delocalization conditions); Case 3 standardizes a two-block Gaussian design
/// with one spiked direction.
struct CaseConfig {
    int case_id = 1;
    int n = 0;
    int p = 0;
    std::uint64_t seed = 0;
    double t = 0.1;         // Case 2 small-coefficient value
    double noise_sd = 0.01; // Case 2 response noise
};

namespace detail {

inline Vector uniform_response(int n, std::uint64_t seed) {
    rng_stream rng(seed, streams::id(streams::kDataY));
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.uniform01();
    return y;
}

}  // namespace detail

inline DataMatrix gen_case1(int n, int p, std::uint64_t seed) {
    require(n >= p && p >= 1, errc::bad_shape, "case1: need n >= p >= 1");
    rng_stream u_rng(seed, streams::id(streams::kDataU));
    rng_stream v_rng(seed, streams::id(streams::kDataV));
    const Matrix U = detail::haar_stiefel(n, p, u_rng);
    const Matrix V = detail::haar_stiefel(p, p, v_rng);
    Vector L(p);
    for (int i = 0; i < p; ++i) L[i] = 1.0 / static_cast<double>(i + 1);

    DataMatrix data;
    data.X = U * L.asDiagonal() * V.transpose();
    data.y = detail::uniform_response(n, seed);
    return data;
}

inline DataMatrix gen_case2(int n, int p, std::uint64_t seed, double t = 0.1,
                            double noise_sd = 0.01) {
    require(n >= p && p >= 2, errc::bad_shape, "case2: need n >= p >= 2");
    require(p % 5 == 0, errc::bad_shape, "case2: 0.2 p must be an integer (p divisible by 5)");

    // Rows of A are multivariate t_2(0, C), C_ij = 2 * 0.5^|i-j|, sampled as
    // N(0, C) / sqrt(chi^2_2 / 2) with chi^2_2 / 2 ~ Exp(1).
    Matrix C(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) C(i, j) = 2.0 * std::pow(0.5, std::abs(i - j));
    }
    const Matrix chol = Eigen::LLT<Matrix>(C).matrixL();

    rng_stream row_rng(seed, streams::id(streams::kDataRows));
    Matrix A(n, p);
    Vector z(p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) z[j] = row_rng.normal();
        const double w = -std::log(row_rng.uniform01_open());  // Exp(1)
        A.row(i) = (chol * z).transpose() / std::sqrt(w);
    }

    Eigen::JacobiSVD<Matrix> svd_a(A, Eigen::ComputeThinU);
    const Matrix U = svd_a.matrixU();

    rng_stream v_rng(seed, streams::id(streams::kDataV));
    Matrix G(p, p);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < p; ++i) G(i, j) = v_rng.normal();
    }
    Eigen::JacobiSVD<Matrix> svd_g(G, Eigen::ComputeThinV);
    const Matrix V = svd_g.matrixV();

    Vector L(p);  // equally spaced on [0.1, 1], descending so L is sorted
    for (int i = 0; i < p; ++i) {
        L[i] = 1.0 - 0.9 * static_cast<double>(i) / static_cast<double>(p - 1);
    }

    DataMatrix data;
    data.X = U * L.asDiagonal() * V.transpose();

    const int fifth = p / 5;
    Vector b(p);
    b.segment(0, fifth).setOnes();
    b.segment(fifth, 3 * fifth).setConstant(t);
    b.segment(4 * fifth, fifth).setOnes();

    rng_stream noise_rng(seed, streams::id(streams::kDataNoise));
    Vector y = data.X * b;
    for (int i = 0; i < n; ++i) y[i] += noise_sd * noise_rng.normal();
    data.y = std::move(y);
    return data;
}

inline DataMatrix gen_case3(int n, int p, std::uint64_t seed) {
    require(n >= p && p >= 1 && n >= 2, errc::bad_shape, "case3: need n >= max(p, 2)");
    rng_stream rng(seed, streams::id(streams::kDataRows));
    const int split = (n + 1) / 2;  // rows below the split have mean 0, the rest mean 5
    Matrix X(n, p);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < n; ++i) X(i, j) = (i < split ? 0.0 : 5.0) + rng.normal();
    }
    for (int j = 0; j < p; ++j) {
        const double mean = X.col(j).mean();
        X.col(j).array() -= mean;
        const double sd = std::sqrt(X.col(j).squaredNorm() / static_cast<double>(n - 1));
        X.col(j) /= sd;
    }

    DataMatrix data;
    data.X = std::move(X);
    data.y = detail::uniform_response(n, seed);
    return data;
}

inline DataMatrix gen_case(const CaseConfig& cfg) {
    switch (cfg.case_id) {
        case 1: return gen_case1(cfg.n, cfg.p, cfg.seed);
        case 2: return gen_case2(cfg.n, cfg.p, cfg.seed, cfg.t, cfg.noise_sd);
        case 3: return gen_case3(cfg.n, cfg.p, cfg.seed);
        default: fail(errc::config_invalid, "gen_case: case id must be 1, 2 or 3");
    }
}

// =============================================================================
/// Unit-vector pairs for the quadratic-form CLT lab.
enum class pair_style {
    delocalized,  // two independent Haar directions
    localized,    // a = a~ = e_1
    angle,        // exact inner product cos(theta), delocalized entries
};

inline std::pair<Vector, Vector> gen_unit_pair(pair_style style, int n, std::uint64_t seed,
                                               double theta = 0.0) {
    require(n >= 2, errc::bad_shape, "gen_unit_pair: need n >= 2");
    rng_stream rng(seed, streams::id(streams::kUnitPair));
    switch (style) {
        case pair_style::localized: {
            Vector e1 = Vector::Zero(n);
            e1[0] = 1.0;
            return {e1, e1};
        }
        case pair_style::delocalized: {
            const Matrix F = detail::haar_stiefel(n, 2, rng);
            return {F.col(0), F.col(1)};
        }
        case pair_style::angle: {
            const Matrix F = detail::haar_stiefel(n, 2, rng);
            Vector a = F.col(0);
            Vector at = std::cos(theta) * F.col(0) + std::sin(theta) * F.col(1);
            return {a, at};
        }
    }
    fail(errc::config_invalid, "gen_unit_pair: unknown style");
}

}  // namespace sketchstat

#endif  // SKETCHSTAT_DATAGEN_HPP
