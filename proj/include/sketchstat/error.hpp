#ifndef SKETCHSTAT_ERROR_HPP
#define SKETCHSTAT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace sketchstat {

// =============================================================================
/// Machine-parsable failure codes. Every throwing path in the library uses one
/// of these, and the CLI maps them onto exit-code classes (config / data /
/// numerical).
enum class errc {
    rank_deficient,
    non_finite,
    not_symmetric,
    not_orthonormal,
    length_not_power_of_two,
    sketch_too_small,
    sketch_too_large,
    bad_sparsity,
    kurtosis_too_low,
    degenerate_sample,
    zero_residual,
    degenerate_signal,
    degenerate_direction,
    eigengap_too_small,
    needs_full_data,
    bad_level,
    too_few_samples,
    bad_shape,
    parse_error,
    ragged_rows,
    non_numeric_cell,
    schema_error,
    config_invalid,
    io_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::rank_deficient: return "RankDeficient";
        case errc::non_finite: return "NonFinite";
        case errc::not_symmetric: return "NotSymmetric";
        case errc::not_orthonormal: return "NotOrthonormal";
        case errc::length_not_power_of_two: return "LengthNotPowerOfTwo";
        case errc::sketch_too_small: return "SketchTooSmall";
        case errc::sketch_too_large: return "SketchTooLarge";
        case errc::bad_sparsity: return "BadSparsity";
        case errc::kurtosis_too_low: return "KurtosisTooLow";
        case errc::degenerate_sample: return "DegenerateSample";
        case errc::zero_residual: return "ZeroResidual";
        case errc::degenerate_signal: return "DegenerateSignal";
        case errc::degenerate_direction: return "DegenerateDirection";
        case errc::eigengap_too_small: return "EigengapTooSmall";
        case errc::needs_full_data: return "NeedsFullData";
        case errc::bad_level: return "BadLevel";
        case errc::too_few_samples: return "TooFewSamples";
        case errc::bad_shape: return "BadShape";
        case errc::parse_error: return "ParseError";
        case errc::ragged_rows: return "RaggedRows";
        case errc::non_numeric_cell: return "NonNumericCell";
        case errc::schema_error: return "SchemaError";
        case errc::config_invalid: return "ConfigInvalid";
        case errc::io_error: return "IoError";
    }
    return "Unknown";
}

class error : public std::runtime_error {
  public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }
    const char* code_name() const noexcept { return errc_name(code_); }

  private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

inline void require(bool ok, errc code, const std::string& what) {
    if (!ok) fail(code, what);
}

}  // namespace sketchstat

#endif  // SKETCHSTAT_ERROR_HPP
