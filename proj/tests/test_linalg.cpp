#include <gtest/gtest.h>

#include <cmath>

#include "sketchstat/datagen.hpp"
#include "sketchstat/linalg.hpp"

namespace ss = sketchstat;

namespace {

double max_abs(const ss::Matrix& m) { return m.cwiseAbs().maxCoeff(); }

ss::Matrix random_matrix(int n, int p, std::uint64_t seed) {
    ss::rng_stream rng(seed, 0);
    ss::Matrix x(n, p);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < n; ++i) x(i, j) = rng.normal();
    }
    return x;
}

}  // namespace

TEST(ThinSvd, IdentityCase) {
    const ss::ThinSvd svd = ss::thin_svd(ss::Matrix::Identity(3, 3));
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(svd.L[i], 1.0);
    // Up to the sign convention both factors are the identity.
    EXPECT_LT(max_abs(svd.U - ss::Matrix::Identity(3, 3)), 1e-12);
    EXPECT_LT(max_abs(svd.V - ss::Matrix::Identity(3, 3)), 1e-12);
}

TEST(ThinSvd, Case1SingularValues) {
    const ss::DataMatrix data = ss::gen_case1(64, 4, 123);
    const ss::ThinSvd svd = ss::thin_svd(data);
    const double expected[4] = {1.0, 0.5, 1.0 / 3.0, 0.25};
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(svd.L[i], expected[i], 1e-8);
}

TEST(ThinSvd, ReconstructionOracle) {
    const ss::Matrix x = random_matrix(6, 3, 17);
    const ss::ThinSvd svd = ss::thin_svd(x);
    const ss::Matrix rebuilt = svd.U * svd.L.asDiagonal() * svd.V.transpose();
    EXPECT_LT(max_abs(rebuilt - x), 1e-8 * svd.L[0]);
    EXPECT_LT(max_abs(svd.U.transpose() * svd.U - ss::Matrix::Identity(3, 3)), 1e-10);
    EXPECT_LT(max_abs(svd.V.transpose() * svd.V - ss::Matrix::Identity(3, 3)), 1e-10);
}

TEST(ThinSvd, SignConventionOnV) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const ss::ThinSvd svd = ss::thin_svd(random_matrix(8, 4, seed));
        for (int j = 0; j < 4; ++j) {
            for (int i = 0; i < 4; ++i) {
                const double v = svd.V(i, j);
                if (std::abs(v) > 1e-12) {
                    EXPECT_GT(v, 0.0) << "column " << j;
                    break;
                }
            }
        }
    }
}

TEST(ThinSvd, RankDeficientRejected) {
    ss::Matrix x(4, 2);
    x << 1, 2, 2, 4, 3, 6, 4, 8;  // second column is twice the first
    EXPECT_THROW(
        {
            try {
                ss::thin_svd(x);
            } catch (const ss::error& e) {
                EXPECT_EQ(e.code(), ss::errc::rank_deficient);
                throw;
            }
        },
        ss::error);
}

TEST(ThinSvd, NonFiniteRejected) {
    ss::Matrix x = random_matrix(5, 2, 3);
    x(1, 1) = std::nan("");
    EXPECT_THROW(ss::thin_svd(x), ss::error);
}

TEST(ThinSvd, TiesReported) {
    const ss::ThinSvd svd = ss::thin_svd(ss::Matrix::Identity(5, 3));
    EXPECT_EQ(svd.ties.size(), 2u);  // all three singular values tie
}

TEST(SymEig, DiagonalCase) {
    ss::Matrix a = ss::Matrix::Zero(3, 3);
    a.diagonal() << 3.0, 2.0, 1.0;
    const ss::EigenDecomposition eig = ss::sym_eig(a);
    EXPECT_DOUBLE_EQ(eig.lambdas[0], 3.0);
    EXPECT_DOUBLE_EQ(eig.lambdas[1], 2.0);
    EXPECT_DOUBLE_EQ(eig.lambdas[2], 1.0);
    EXPECT_LT(max_abs(eig.vectors - ss::Matrix::Identity(3, 3)), 1e-12);
}

TEST(SymEig, Case1GramEigenvalues) {
    const ss::DataMatrix data = ss::gen_case1(48, 3, 7);
    const ss::EigenDecomposition eig = ss::sym_eig(ss::Matrix(data.X.transpose() * data.X));
    EXPECT_NEAR(eig.lambdas[0], 1.0, 1e-8);
    EXPECT_NEAR(eig.lambdas[1], 0.25, 1e-8);
    EXPECT_NEAR(eig.lambdas[2], 1.0 / 9.0, 1e-8);
}

TEST(SymEig, RankOneTopEigenvector) {
    ss::Vector v(2);
    v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    const ss::Matrix a = v * v.transpose();
    const ss::EigenDecomposition eig = ss::sym_eig(a);
    EXPECT_NEAR(eig.lambdas[0], 1.0, 1e-12);
    EXPECT_NEAR(eig.vectors(0, 0), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(eig.vectors(1, 0), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_GT(eig.vectors(0, 0), 0.0);
}

TEST(SymEig, ReconstructionAndOrthonormality) {
    const ss::Matrix x = random_matrix(10, 4, 99);
    const ss::Matrix a = x.transpose() * x;
    const ss::EigenDecomposition eig = ss::sym_eig(a);
    ss::Matrix rebuilt = ss::Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
        rebuilt += eig.lambdas[i] * eig.vectors.col(i) * eig.vectors.col(i).transpose();
    }
    EXPECT_LT(max_abs(rebuilt - a), 1e-8 * std::abs(eig.lambdas[0]));
    EXPECT_LT(max_abs(eig.vectors.transpose() * eig.vectors - ss::Matrix::Identity(4, 4)), 1e-10);
}

TEST(SymEig, NotSymmetricRejected) {
    ss::Matrix a(2, 2);
    a << 1.0, 2.0, 0.5, 1.0;
    EXPECT_THROW(
        {
            try {
                ss::sym_eig(a);
            } catch (const ss::error& e) {
                EXPECT_EQ(e.code(), ss::errc::not_symmetric);
                throw;
            }
        },
        ss::error);
}

TEST(SymEig, SymmetrizationInvariance) {
    // Perturb within the symmetry tolerance; output must match the
    // symmetrized input's exactly.
    ss::Matrix a = random_matrix(5, 5, 4);
    a = ss::Matrix(a.transpose() * a);
    ss::Matrix noisy = a;
    noisy(0, 1) += 1e-12 * std::abs(a(0, 1));
    const ss::Matrix sym = 0.5 * (noisy + noisy.transpose());
    const ss::EigenDecomposition e1 = ss::sym_eig(noisy);
    const ss::EigenDecomposition e2 = ss::sym_eig(sym);
    EXPECT_EQ(ss::Vector(e1.lambdas), ss::Vector(e2.lambdas));
    EXPECT_EQ(ss::Matrix(e1.vectors), ss::Matrix(e2.vectors));
}

TEST(SolveLs, IdentityDesign) {
    ss::Matrix x = ss::Matrix::Identity(2, 2);
    ss::Vector y(2);
    y << 3.0, -1.0;
    const ss::Vector beta = ss::solve_ls(x, y);
    EXPECT_NEAR(beta[0], 3.0, 1e-12);
    EXPECT_NEAR(beta[1], -1.0, 1e-12);
}

TEST(SolveLs, HandSolvedNormalEquations) {
    // X'X = diag(2, 1), X'y = (4, 5) => beta = (2, 5).
    ss::Matrix x(3, 2);
    x << 1, 0, 1, 0, 0, 1;
    ss::Vector y(3);
    y << 1, 3, 5;
    const ss::Vector beta = ss::solve_ls(x, y);
    EXPECT_NEAR(beta[0], 2.0, 1e-12);
    EXPECT_NEAR(beta[1], 5.0, 1e-12);
}

TEST(SolveLs, NoiselessCase2RecoversCoefficients) {
    const ss::DataMatrix data = ss::gen_case2(128, 10, 5, 0.1, 0.0);
    const ss::Vector beta = ss::solve_ls(data);
    ss::Vector expected(10);
    expected << 1, 1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 1, 1;
    EXPECT_LT((beta - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SolveLs, ResidualGradientSmall) {
    const ss::Matrix x = random_matrix(40, 5, 21);
    ss::rng_stream rng(22, 0);
    ss::Vector y(40);
    for (int i = 0; i < 40; ++i) y[i] = rng.normal();
    const ss::Vector beta = ss::solve_ls(x, y);
    const ss::Vector grad = x.transpose() * (y - x * beta);
    EXPECT_LT(grad.norm(), 1e-8 * (x.transpose() * y).norm());
}

TEST(SolveLs, MatchesSvdFormula) {
    // Dual route: QR-based solve against V diag(1/l) U' y.
    const ss::Matrix x = random_matrix(30, 4, 31);
    ss::rng_stream rng(32, 0);
    ss::Vector y(30);
    for (int i = 0; i < 30; ++i) y[i] = rng.normal();
    const ss::Vector beta = ss::solve_ls(x, y);
    const ss::ThinSvd svd = ss::thin_svd(x);
    const ss::Vector via_svd =
        svd.V * svd.L.cwiseInverse().asDiagonal() * (svd.U.transpose() * y);
    EXPECT_LT((beta - via_svd).norm(), 1e-8 * via_svd.norm());
}

TEST(SolveLs, SvdAndEigAgreeOnSpectrum) {
    const ss::Matrix x = random_matrix(25, 4, 55);
    const ss::ThinSvd svd = ss::thin_svd(x);
    const ss::EigenDecomposition eig = ss::sym_eig(ss::Matrix(x.transpose() * x));
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(eig.lambdas[i], svd.L[i] * svd.L[i], 1e-8 * eig.lambdas[0]);
        EXPECT_LT((eig.vectors.col(i) - svd.V.col(i)).norm(), 1e-7);
    }
}
