#ifndef SKETCHSTAT_IO_HPP
#define SKETCHSTAT_IO_HPP

#include <array>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sketchstat/error.hpp"
#include "sketchstat/harness.hpp"

namespace sketchstat {

/// Shortest decimal representation that round-trips the exact double, so
/// downstream tools reproduce values bit-for-bit.
inline std::string format_double(double v) {
    std::array<char, 40> buf;
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

enum class report_format { csv, json };

inline report_format parse_format(const std::string& s) {
    if (s == "csv") return report_format::csv;
    if (s == "json") return report_format::json;
    fail(errc::schema_error, "format: expected 'csv' or 'json', got '" + s + "'");
}

// =============================================================================
// Report emission. CSV schemas keep a stable column order; JSON mirrors the
// fields verbatim. The timestamp header line is the only nondeterministic
// content and is dropped when `meta` is false.

inline std::string to_csv(const CoverageReport& report, bool meta = true) {
    std::ostringstream out;
    if (meta) {
        out << "# sketchstat coverage report: trials=" << report.trials
            << " level=" << format_double(report.level) << " seed=" << report.seed
            << " generated=" << utc_timestamp() << "\n";
    }
    out << "family,m,target,hits,trials,coverage,cp_lower,cp_upper,mean_width,failures\n";
    for (const CoverageCell& c : report.cells) {
        out << c.family << ',' << c.m << ',' << c.target << ',' << c.hits << ',' << c.trials
            << ',' << format_double(c.coverage) << ',' << format_double(c.cp_lower) << ','
            << format_double(c.cp_upper) << ',' << format_double(c.mean_width) << ','
            << c.failures << '\n';
    }
    return out.str();
}

inline nlohmann::json to_json(const CoverageReport& report, bool meta = true) {
    nlohmann::json j;
    if (meta) {
        j["meta"] = {{"trials", report.trials},
                     {"level", report.level},
                     {"seed", report.seed},
                     {"generated", utc_timestamp()}};
    }
    j["cells"] = nlohmann::json::array();
    for (const CoverageCell& c : report.cells) {
        j["cells"].push_back({{"family", c.family},
                              {"m", c.m},
                              {"target", c.target},
                              {"hits", c.hits},
                              {"trials", c.trials},
                              {"coverage", c.coverage},
                              {"cp_lower", c.cp_lower},
                              {"cp_upper", c.cp_upper},
                              {"mean_width", c.mean_width},
                              {"failures", c.failures}});
    }
    return j;
}

inline CoverageReport coverage_from_json(const nlohmann::json& j) {
    CoverageReport report;
    if (j.contains("meta")) {
        report.trials = j["meta"].value("trials", 0);
        report.level = j["meta"].value("level", 0.95);
        report.seed = j["meta"].value("seed", 0ULL);
    }
    for (const auto& cj : j.at("cells")) {
        CoverageCell c;
        c.family = cj.at("family").get<std::string>();
        c.m = cj.at("m").get<int>();
        c.target = cj.at("target").get<std::string>();
        c.hits = cj.at("hits").get<std::uint64_t>();
        c.trials = cj.at("trials").get<std::uint64_t>();
        c.coverage = cj.at("coverage").get<double>();
        c.cp_lower = cj.at("cp_lower").get<double>();
        c.cp_upper = cj.at("cp_upper").get<double>();
        c.mean_width = cj.at("mean_width").get<double>();
        c.failures = cj.at("failures").get<std::uint64_t>();
        report.cells.push_back(std::move(c));
    }
    return report;
}

inline std::string to_csv(const VarianceReport& report, bool meta = true) {
    std::ostringstream out;
    if (meta) {
        out << "# sketchstat variance report: trials=" << report.trials << " seed=" << report.seed
            << " generated=" << utc_timestamp() << "\n";
    }
    out << "family,m,target,empirical_var,theoretical_var,ratio,trials,failures\n";
    for (const VarianceCell& c : report.cells) {
        out << c.family << ',' << c.m << ',' << c.target << ',' << format_double(c.empirical_var)
            << ',' << format_double(c.theoretical_var) << ',' << format_double(c.ratio) << ','
            << c.trials << ',' << c.failures << '\n';
    }
    return out.str();
}

inline nlohmann::json to_json(const VarianceReport& report, bool meta = true) {
    nlohmann::json j;
    if (meta) {
        j["meta"] = {{"trials", report.trials}, {"seed", report.seed},
                     {"generated", utc_timestamp()}};
    }
    j["cells"] = nlohmann::json::array();
    for (const VarianceCell& c : report.cells) {
        j["cells"].push_back({{"family", c.family},
                              {"m", c.m},
                              {"target", c.target},
                              {"empirical_var", c.empirical_var},
                              {"theoretical_var", c.theoretical_var},
                              {"ratio", c.ratio},
                              {"trials", c.trials},
                              {"failures", c.failures}});
    }
    return j;
}

inline nlohmann::json to_json(const QfCltResult& r) {
    return {{"empirical_var", r.empirical_var},
            {"theoretical_var", r.theoretical_var},
            {"ks_d", r.ks_d},
            {"ks_p", r.ks_p},
            {"zero_fraction", r.zero_fraction},
            {"distinct_values", r.distinct_values},
            {"trials", r.trials},
            {"failures", r.failures},
            {"inner_product", r.inner_product}};
}

inline std::string to_csv(const std::vector<BenchRow>& rows, bool meta = true) {
    std::ostringstream out;
    if (meta) out << "# sketchstat bench: generated=" << utc_timestamp() << "\n";
    out << "family,m,median_build_seconds,median_seconds\n";
    for (const BenchRow& r : rows) {
        out << r.family << ',' << r.m << ',' << format_double(r.median_build_seconds) << ','
            << format_double(r.median_seconds) << '\n';
    }
    return out.str();
}

inline nlohmann::json to_json(const DelocalizationReport& r) {
    nlohmann::json j{{"max_leverage", r.max_leverage},
                     {"u4_mass", r.u4_mass},
                     {"leverage_flag", r.leverage_flag},
                     {"u4_flag", r.u4_flag}};
    if (r.has_response) {
        j["max_norm_residual"] = r.max_norm_residual;
        j["max_norm_fitted"] = r.max_norm_fitted;
        j["residual_flag"] = r.residual_flag;
        j["fitted_flag"] = r.fitted_flag;
    }
    return j;
}

/// Writes `content` to `path`, or to stdout when path is empty.
inline void write_output(const std::string& content, const std::string& path) {
    if (path.empty()) {
        std::cout << content;
        require(std::cout.good(), errc::io_error, "failed writing to stdout");
        return;
    }
    std::ofstream out(path, std::ios::binary);
    require(out.good(), errc::io_error, "cannot open '" + path + "' for writing");
    out << content;
    require(out.good(), errc::io_error, "failed writing '" + path + "'");
}

// =============================================================================
// Experiment config parsing. Schema:
//   {
//     "data": {"case": 1, "n": 2048, "p": 15}            (optional "t", "noise_sd")
//           | {"csv": "path", "has_header": false, "y_col": "last" | <1-based int>},
//     "families": ["srht", "countsketch", "sse:8", "gaussian", "t:6", "haar", "subsample"],
//     "m_grid": [400, 800, 1600],
//     "targets": ["ls:1", "ls-partial:1", "eig:1", "eigvec:1:1"],
//     "trials": 500,        -- default 500
//     "level": 0.95,        -- default 0.95
//     "seed": 7,            -- required
//     "threads": 0          -- optional, 0 = auto
//   }

namespace detail {

inline void check_known_keys(const nlohmann::json& obj, std::initializer_list<const char*> keys,
                             const std::string& where) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : keys) {
            if (item.key() == k) {
                known = true;
                break;
            }
        }
        require(known, errc::schema_error, where + ": unknown key '" + item.key() + "'");
    }
}

template <typename T>
T get_field(const nlohmann::json& obj, const char* key, const std::string& where) {
    require(obj.contains(key), errc::schema_error, where + ": missing key '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(errc::schema_error, where + ": bad value for key '" + std::string(key) + "'");
    }
}

}  // namespace detail

inline ExperimentConfig parse_config_json(const nlohmann::json& j) {
    require(j.is_object(), errc::schema_error, "config: top level must be an object");
    detail::check_known_keys(
        j, {"data", "families", "m_grid", "targets", "trials", "level", "seed", "threads"},
        "config");

    ExperimentConfig cfg;
    require(j.contains("data"), errc::schema_error, "config: missing key 'data'");
    const auto& dj = j.at("data");
    require(dj.is_object(), errc::schema_error, "data: must be an object");
    if (dj.contains("case")) {
        detail::check_known_keys(dj, {"case", "n", "p", "t", "noise_sd"}, "data");
        CaseConfig cc;
        cc.case_id = detail::get_field<int>(dj, "case", "data");
        cc.n = detail::get_field<int>(dj, "n", "data");
        cc.p = detail::get_field<int>(dj, "p", "data");
        require(cc.case_id >= 1 && cc.case_id <= 3, errc::schema_error,
                "data: 'case' must be 1, 2 or 3");
        require(cc.n >= cc.p && cc.p >= 1, errc::schema_error, "data: need n >= p >= 1");
        if (dj.contains("t")) cc.t = detail::get_field<double>(dj, "t", "data");
        if (dj.contains("noise_sd")) cc.noise_sd = detail::get_field<double>(dj, "noise_sd", "data");
        cfg.data.case_cfg = cc;
    } else if (dj.contains("csv")) {
        detail::check_known_keys(dj, {"csv", "has_header", "y_col"}, "data");
        cfg.data.csv_path = detail::get_field<std::string>(dj, "csv", "data");
        if (dj.contains("has_header")) {
            cfg.data.csv_has_header = detail::get_field<bool>(dj, "has_header", "data");
        }
        if (dj.contains("y_col")) {
            if (dj.at("y_col").is_string()) {
                require(dj.at("y_col").get<std::string>() == "last", errc::schema_error,
                        "data: 'y_col' must be a 1-based index or \"last\"");
                cfg.data.y_col = -1;
            } else {
                const int v = detail::get_field<int>(dj, "y_col", "data");
                require(v >= 1, errc::schema_error, "data: 'y_col' must be >= 1");
                cfg.data.y_col = v;
            }
        }
    } else {
        fail(errc::schema_error, "data: need either 'case' or 'csv'");
    }

    for (const auto& fj : detail::get_field<std::vector<std::string>>(j, "families", "config")) {
        cfg.families.push_back(parse_family(fj));
    }
    require(!cfg.families.empty(), errc::schema_error, "families: must be non-empty");

    cfg.m_grid = detail::get_field<std::vector<int>>(j, "m_grid", "config");
    require(!cfg.m_grid.empty(), errc::schema_error, "m_grid: must be non-empty");
    int prev = 0;
    for (const int m : cfg.m_grid) {
        require(m > prev, errc::schema_error, "m_grid: must be strictly increasing and positive");
        prev = m;
        if (cfg.data.case_cfg) {
            require(m > cfg.data.case_cfg->p && m < cfg.data.case_cfg->n, errc::schema_error,
                    "m_grid: every m must satisfy p < m < n");
        }
    }

    for (const auto& tj : detail::get_field<std::vector<std::string>>(j, "targets", "config")) {
        cfg.targets.push_back(parse_target(tj));
    }
    require(!cfg.targets.empty(), errc::schema_error, "targets: must be non-empty");

    if (j.contains("trials")) cfg.trials = detail::get_field<int>(j, "trials", "config");
    require(cfg.trials >= 50, errc::schema_error, "trials: must be at least 50");
    if (j.contains("level")) cfg.level = detail::get_field<double>(j, "level", "config");
    require(cfg.level > 0.0 && cfg.level < 1.0, errc::schema_error, "level: must be in (0,1)");
    cfg.seed = detail::get_field<std::uint64_t>(j, "seed", "config");
    if (j.contains("threads")) {
        cfg.threads = detail::get_field<unsigned>(j, "threads", "config");
    }
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::io_error, "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(errc::schema_error, "config: invalid JSON (" + std::string(e.what()) + ")");
    }
    return parse_config_json(j);
}

}  // namespace sketchstat

#endif  // SKETCHSTAT_IO_HPP
