#ifndef SKETCHSTAT_RNG_HPP
#define SKETCHSTAT_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

#include "sketchstat/error.hpp"

namespace sketchstat {

// =============================================================================
/// Philox2x64-10 counter-based generator (Salmon et al., Random123 constants).
///
/// Every random quantity in the library is a pure function of
/// (seed, stream, counter). Streams are cheap to mint, so sketch generators
/// give each column / row / purpose its own stream; the output is then
/// independent of generation order and of any parallel schedule.
struct philox2x64 {
    static constexpr std::uint64_t kMul = 0xD2B74407B1CE6E93ULL;
    static constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

    static std::array<std::uint64_t, 2> block(std::uint64_t key, std::uint64_t c0,
                                              std::uint64_t c1) {
        for (int round = 0; round < 10; ++round) {
            const unsigned __int128 prod = static_cast<unsigned __int128>(kMul) * c0;
            const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
            const std::uint64_t lo = static_cast<std::uint64_t>(prod);
            c0 = hi ^ key ^ c1;
            c1 = lo;
            key += kWeyl;
        }
        return {c0, c1};
    }

    /// Two independent blocks evaluated with interleaved rounds, hiding the
    /// multiply latency of the serial round chain. Equals block() on each
    /// counter pair exactly.
    static std::array<std::array<std::uint64_t, 2>, 2> block2(std::uint64_t key,
                                                              std::uint64_t a0, std::uint64_t a1,
                                                              std::uint64_t b0,
                                                              std::uint64_t b1) {
        std::uint64_t key_b = key;
        for (int round = 0; round < 10; ++round) {
            const unsigned __int128 pa = static_cast<unsigned __int128>(kMul) * a0;
            const unsigned __int128 pb = static_cast<unsigned __int128>(kMul) * b0;
            const std::uint64_t a_hi = static_cast<std::uint64_t>(pa >> 64);
            const std::uint64_t a_lo = static_cast<std::uint64_t>(pa);
            const std::uint64_t b_hi = static_cast<std::uint64_t>(pb >> 64);
            const std::uint64_t b_lo = static_cast<std::uint64_t>(pb);
            a0 = a_hi ^ key ^ a1;
            a1 = a_lo;
            b0 = b_hi ^ key_b ^ b1;
            b1 = b_lo;
            key += kWeyl;
            key_b += kWeyl;
        }
        return {{{a0, a1}, {b0, b1}}};
    }
};

/// Derives a child key from (key, tag, index) with one cipher evaluation.
/// Used for trial seeds and for splitting named substreams off a master seed.
inline std::uint64_t derive_key(std::uint64_t key, std::uint64_t tag, std::uint64_t index = 0) {
    return philox2x64::block(key, tag, index)[0];
}

// =============================================================================
/// One logical stream of the counter-based generator.
///
/// The pair (seed, stream) selects the stream; draws walk a 64-bit counter.
/// Copying an rng_stream forks its exact position, so pass by reference.
class rng_stream {
  public:
    rng_stream(std::uint64_t seed, std::uint64_t stream) : key_(seed), hi_(stream) {}

    std::uint64_t next_u64() {
        if (left_ == 0) {
            buf_ = philox2x64::block(key_, hi_, lo_++);
            left_ = 2;
        }
        return buf_[--left_];
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1); safe to pass through log().
    double uniform01_open() {
        return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
    }

    /// Standard normal via a 128-box ziggurat (Doornik's zignor layout); one
    /// word per draw on the fast path.
    double normal() {
        const zig_tables& t = zig();
        for (;;) {
            const std::uint64_t bits = next_u64();
            const int i = static_cast<int>(bits & 127u);
            const double u = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;  // [-1, 1)
            if (std::abs(u) < t.ratio[i]) return u * t.x[i];
            if (i == 0) {
                // Tail beyond R, Marsaglia's exponential trick.
                const bool negative = u < 0;
                double xx, yy;
                do {
                    xx = std::log(uniform01_open()) / kZigR;  // <= 0
                    yy = std::log(uniform01_open());
                } while (-2.0 * yy < xx * xx);
                return negative ? xx - kZigR : kZigR - xx;
            }
            const double cand = u * t.x[i];
            const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - cand * cand));
            const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - cand * cand));
            if (f1 + uniform01() * (f0 - f1) < 1.0) return cand;
        }
    }

    double rademacher() { return (next_u64() & 1u) ? 1.0 : -1.0; }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Uniform integer in [0, n), rejection-free of modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return r % n;
    }

    /// Gamma(shape, 1) for shape >= 1 (Marsaglia-Tsang squeeze).
    double gamma(double shape) {
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

  private:
    static constexpr double kZigR = 3.442619855899;
    static constexpr double kZigV = 9.91256303526217e-3;

    struct zig_tables {
        double x[129];
        double ratio[128];
        zig_tables() {
            double f = std::exp(-0.5 * kZigR * kZigR);
            x[0] = kZigV / f;
            x[1] = kZigR;
            x[128] = 0.0;
            for (int i = 2; i < 128; ++i) {
                x[i] = std::sqrt(-2.0 * std::log(kZigV / x[i - 1] + f));
                f = std::exp(-0.5 * x[i] * x[i]);
            }
            for (int i = 0; i < 128; ++i) ratio[i] = x[i + 1] / x[i];
        }
    };

    static const zig_tables& zig() {
        static const zig_tables tables;
        return tables;
    }

    std::uint64_t key_;
    std::uint64_t hi_;
    std::uint64_t lo_ = 0;
    std::array<std::uint64_t, 2> buf_{};
    int left_ = 0;
};

// Reserved stream tags. Stream ids are (tag << 56) | index, so distinct tags
// can never collide regardless of index.
namespace streams {
constexpr std::uint64_t kSrhtSigns = 1;
constexpr std::uint64_t kSrhtRows = 2;
constexpr std::uint64_t kSseColumn = 3;
constexpr std::uint64_t kIidRow = 4;
constexpr std::uint64_t kHaarGaussian = 5;
constexpr std::uint64_t kSubsampleRows = 6;
constexpr std::uint64_t kDataU = 7;
constexpr std::uint64_t kDataV = 8;
constexpr std::uint64_t kDataY = 9;
constexpr std::uint64_t kDataNoise = 10;
constexpr std::uint64_t kDataRows = 11;
constexpr std::uint64_t kUnitPair = 12;

constexpr std::uint64_t id(std::uint64_t tag, std::uint64_t index = 0) {
    return (tag << 56) | index;
}
}  // namespace streams

}  // namespace sketchstat

#endif  // SKETCHSTAT_RNG_HPP
