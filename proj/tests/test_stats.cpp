#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sketchstat/rng.hpp"
#include "sketchstat/stats.hpp"

namespace ss = sketchstat;

namespace {

// Independent CDF oracle: Simpson quadrature of the normal density on
// [-12, z], far more than 1e-12 accurate with this panel count.
double cdf_oracle(double z) {
    const double lo = -12.0;
    const int panels = 20000;
    const double h = (z - lo) / panels;
    auto dens = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
    double sum = dens(lo) + dens(z);
    for (int i = 1; i < panels; ++i) {
        sum += dens(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return sum * h / 3.0;
}

double quantile_oracle(double q) {
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf_oracle(mid) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST(NormalQuantile, MedianIsZero) { EXPECT_NEAR(ss::normal_quantile(0.5), 0.0, 1e-14); }

TEST(NormalQuantile, MatchesQuadratureOracle) {
    // Frozen from the Simpson + bisection oracle: z_{0.975} = 1.9599640.
    EXPECT_NEAR(quantile_oracle(0.975), 1.9599640, 2e-6);
    EXPECT_NEAR(ss::normal_quantile(0.975), 1.959963985, 1e-6);
    EXPECT_NEAR(ss::normal_quantile(0.9), quantile_oracle(0.9), 1e-9);
    EXPECT_NEAR(ss::normal_quantile(0.01), quantile_oracle(0.01), 1e-9);
}

TEST(NormalQuantile, InverseIdentityOnGrid) {
    for (int i = 1; i <= 99; ++i) {
        const double q = i / 100.0;
        EXPECT_NEAR(ss::normal_cdf(ss::normal_quantile(q)), q, 1e-10);
    }
}

TEST(NormalQuantile, StrictlyIncreasing) {
    double prev = ss::normal_quantile(0.001);
    for (int i = 2; i <= 999; ++i) {
        const double z = ss::normal_quantile(i / 1000.0);
        EXPECT_GT(z, prev);
        prev = z;
    }
}

TEST(NormalQuantile, RejectsBadLevel) {
    EXPECT_THROW(ss::normal_quantile(0.0), ss::error);
    EXPECT_THROW(ss::normal_quantile(1.0), ss::error);
}

TEST(ClopperPearson, ZeroHitsClosedForm) {
    // Oracle: upper = 1 - (alpha/2)^{1/n} for hits = 0.
    const ss::BinomialInterval ci = ss::clopper_pearson(0, 500, 0.95);
    EXPECT_DOUBLE_EQ(ci.lower, 0.0);
    const double oracle = 1.0 - std::pow(0.025, 1.0 / 500.0);
    EXPECT_NEAR(oracle, 0.0073506101, 1e-9);  // frozen oracle value
    EXPECT_NEAR(ci.upper, oracle, 1e-9);
}

TEST(ClopperPearson, AllHitsClosedForm) {
    const ss::BinomialInterval ci = ss::clopper_pearson(500, 500, 0.95);
    EXPECT_DOUBLE_EQ(ci.upper, 1.0);
    const double oracle = std::pow(0.025, 1.0 / 500.0);
    EXPECT_NEAR(oracle, 0.9926493899, 1e-9);  // frozen oracle value
    EXPECT_NEAR(ci.lower, oracle, 1e-9);
}

TEST(ClopperPearson, PointEstimateInsideInterval) {
    const ss::BinomialInterval ci = ss::clopper_pearson(475, 500, 0.95);
    EXPECT_LT(ci.lower, 0.95);
    EXPECT_GT(ci.upper, 0.95);
    EXPECT_LE(ci.lower, 475.0 / 500.0);
    EXPECT_GE(ci.upper, 475.0 / 500.0);
}

TEST(ClopperPearson, WidthShrinksLikeRootTrials) {
    // At a fixed hit rate, width ~ 1 / sqrt(trials): slope about -1/2.
    std::vector<double> widths;
    for (const std::uint64_t trials : {100ULL, 400ULL, 1600ULL}) {
        const auto ci = ss::clopper_pearson(trials * 3 / 4, trials, 0.95);
        widths.push_back(ci.upper - ci.lower);
    }
    const double slope01 = std::log(widths[1] / widths[0]) / std::log(4.0);
    const double slope12 = std::log(widths[2] / widths[1]) / std::log(4.0);
    EXPECT_NEAR(slope01, -0.5, 0.06);
    EXPECT_NEAR(slope12, -0.5, 0.06);
}

TEST(ClopperPearson, AgreesWithBinomialTailOracle) {
    // Exact definition: the lower bound l solves P(Bin(n, l) >= h) = alpha/2.
    const std::uint64_t n = 50, h = 40;
    const auto ci = ss::clopper_pearson(h, n, 0.9);
    auto binom_tail_ge = [&](double p) {
        // sum_{k=h}^{n} C(n,k) p^k (1-p)^{n-k}, evaluated with logs
        double total = 0.0;
        for (std::uint64_t k = h; k <= n; ++k) {
            const double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                                std::lgamma(n - k + 1.0);
            total += std::exp(logc + k * std::log(p) + (n - k) * std::log1p(-p));
        }
        return total;
    };
    EXPECT_NEAR(binom_tail_ge(ci.lower), 0.05, 1e-6);
}

TEST(KsStatistic, AllZerosGivesHalf) {
    std::vector<double> samples(100, 0.0);
    const ss::KsResult ks = ss::ks_statistic(samples);
    EXPECT_NEAR(ks.d, 0.5, 1e-12);
    EXPECT_LT(ks.p_value, 1e-6);
}

TEST(KsStatistic, NormalDrawsPassMostSeeds) {
    // Kolmogorov critical-value oracle: D < 1.63 / sqrt(n) at ~99% of seeds.
    int pass = 0;
    const int n = 5000;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        ss::rng_stream rng(seed, 9);
        std::vector<double> samples(n);
        for (int i = 0; i < n; ++i) samples[i] = rng.normal();
        const ss::KsResult ks = ss::ks_statistic(samples);
        if (ks.d < 1.63 / std::sqrt(static_cast<double>(n))) ++pass;
    }
    EXPECT_GE(pass, 38);
}

TEST(KsStatistic, GrossShiftDetected) {
    ss::rng_stream rng(5, 9);
    std::vector<double> samples(500);
    for (auto& s : samples) s = rng.normal() + 3.0;
    const ss::KsResult ks = ss::ks_statistic(samples);
    EXPECT_GT(ks.d, 0.8);
    EXPECT_LT(ks.p_value, 1e-10);
}

TEST(KsStatistic, TooFewSamplesRejected) {
    std::vector<double> samples(10, 0.1);
    EXPECT_THROW(ss::ks_statistic(samples), ss::error);
}
