#ifndef SKETCHSTAT_CSV_HPP
#define SKETCHSTAT_CSV_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "sketchstat/error.hpp"
#include "sketchstat/linalg.hpp"

namespace sketchstat {

// =============================================================================
/// Reads a rectangular numeric CSV into a DataMatrix. `y_col` (1-based, or -1
/// for the last column) splits one column out as the response. Errors carry
/// 1-based row/column locations; non-finite cells (including literal "NaN")
/// are rejected as NonNumericCell.
inline DataMatrix load_csv(const std::string& path, bool has_header = false,
                           std::optional<int> y_col = std::nullopt) {
    std::ifstream in(path);
    require(in.good(), errc::io_error, "cannot open '" + path + "'");

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool header_skipped = !has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_skipped) {
            header_skipped = true;
            continue;
        }
        std::vector<double> row;
        std::size_t start = 0;
        std::size_t col_no = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const std::size_t end = comma == std::string::npos ? line.size() : comma;
            ++col_no;
            std::size_t lo = start, hi = end;
            while (lo < hi && (line[lo] == ' ' || line[lo] == '\t')) ++lo;
            while (hi > lo && (line[hi - 1] == ' ' || line[hi - 1] == '\t')) --hi;
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(line.data() + lo, line.data() + hi, value);
            const bool parsed = ec == std::errc() && ptr == line.data() + hi && hi > lo;
            require(parsed && std::isfinite(value), errc::non_numeric_cell,
                    "non-numeric cell at row " + std::to_string(line_no) + ", column " +
                        std::to_string(col_no));
            row.push_back(value);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!rows.empty()) {
            require(row.size() == rows.front().size(), errc::ragged_rows,
                    "row " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                        " cells, expected " + std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), errc::parse_error, "'" + path + "' contains no data rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto total_cols = static_cast<Eigen::Index>(rows.front().size());

    Eigen::Index y_index = -1;
    if (y_col) {
        y_index = *y_col == -1 ? total_cols - 1 : static_cast<Eigen::Index>(*y_col) - 1;
        require(y_index >= 0 && y_index < total_cols, errc::parse_error,
                "response column out of range");
        require(total_cols >= 2, errc::parse_error, "need at least one feature besides y");
    }

    DataMatrix data;
    data.X.resize(n, y_col ? total_cols - 1 : total_cols);
    if (y_col) data.y = Vector(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index xj = 0;
        for (Eigen::Index j = 0; j < total_cols; ++j) {
            if (j == y_index) {
                (*data.y)[i] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            } else {
                data.X(i, xj++) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            }
        }
    }
    return data;
}

}  // namespace sketchstat

#endif  // SKETCHSTAT_CSV_HPP
