#ifndef SKETCHSTAT_FWHT_HPP
#define SKETCHSTAT_FWHT_HPP

#include <cmath>
#include <cstddef>

#include "sketchstat/error.hpp"
#include "sketchstat/linalg.hpp"

namespace sketchstat {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// =============================================================================
/// In-place fast Walsh-Hadamard transform with the orthonormal normalization
/// (H_0 = 1, H_{t+1} = [[H_t, H_t], [H_t, -H_t]] / sqrt(2)), so the transform
/// is an involution and an isometry. O(n log n) scalar operations; the
/// per-stage 1/sqrt(2) factors are folded into one final scaling pass.
inline void fwht_inplace(double* v, std::size_t len) {
    require(is_power_of_two(len), errc::length_not_power_of_two,
            "fwht: length must be a power of two");
    for (std::size_t h = 1; h < len; h <<= 1) {
        for (std::size_t i = 0; i < len; i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double x = v[j];
                const double y = v[j + h];
                v[j] = x + y;
                v[j + h] = x - y;
            }
        }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(len));
    for (std::size_t j = 0; j < len; ++j) v[j] *= scale;
}

inline Vector fwht(Vector v) {
    fwht_inplace(v.data(), static_cast<std::size_t>(v.size()));
    return v;
}

/// Applies the orthonormal FWHT to every column of M.
inline void fwht_columns(Matrix& M) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        fwht_inplace(M.col(j).data(), static_cast<std::size_t>(M.rows()));
    }
}

}  // namespace sketchstat

#endif  // SKETCHSTAT_FWHT_HPP
