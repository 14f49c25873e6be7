#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "sketchstat/csv.hpp"
#include "sketchstat/io.hpp"

namespace ss = sketchstat;

namespace {

class TempFile {
  public:
    explicit TempFile(const std::string& content) {
        path_ = std::string("/tmp/sketchstat_test_") + std::to_string(counter()++) + ".tmp";
        std::ofstream out(path_);
        out << content;
    }
    ~TempFile() { std::remove(path_.c_str()); }
    const std::string& path() const { return path_; }

  private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string path_;
};

ss::errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ss::error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return ss::errc::io_error;
}

}  // namespace

TEST(LoadCsv, PlainTwoByTwo) {
    TempFile f("1,2\n3,4\n");
    const ss::DataMatrix data = ss::load_csv(f.path());
    ASSERT_EQ(data.n(), 2);
    ASSERT_EQ(data.p(), 2);
    EXPECT_DOUBLE_EQ(data.X(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(data.X(1, 1), 4.0);
    EXPECT_FALSE(data.y.has_value());
}

TEST(LoadCsv, LastColumnAsResponse) {
    TempFile f("1,2,10\n3,4,20\n5,6,30\n");
    const ss::DataMatrix data = ss::load_csv(f.path(), false, -1);
    ASSERT_EQ(data.p(), 2);
    ASSERT_TRUE(data.y.has_value());
    EXPECT_DOUBLE_EQ((*data.y)[2], 30.0);
    EXPECT_DOUBLE_EQ(data.X(2, 1), 6.0);
}

TEST(LoadCsv, HeaderSkipped) {
    TempFile f("a,b\n1,2\n3,4\n");
    const ss::DataMatrix data = ss::load_csv(f.path(), true);
    EXPECT_EQ(data.n(), 2);
}

TEST(LoadCsv, NanCellRejectedWithLocation) {
    TempFile f("1,2\n3,NaN\n");
    try {
        ss::load_csv(f.path());
        FAIL() << "expected NonNumericCell";
    } catch (const ss::error& e) {
        EXPECT_EQ(e.code(), ss::errc::non_numeric_cell);
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos);
    }
}

TEST(LoadCsv, RaggedRowsRejected) {
    TempFile f("1,2\n3\n");
    EXPECT_EQ(code_of([&] { ss::load_csv(f.path()); }), ss::errc::ragged_rows);
}

TEST(LoadCsv, MissingFileIsIoError) {
    EXPECT_EQ(code_of([] { ss::load_csv("/nonexistent/file.csv"); }), ss::errc::io_error);
}

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(ss::format_double(0.95), "0.95");
    EXPECT_EQ(ss::format_double(0.1), "0.1");
    const double v = 1.0 / 3.0;
    EXPECT_DOUBLE_EQ(std::stod(ss::format_double(v)), v);
}

TEST(EmitCoverage, OneCellCsvShape) {
    ss::CoverageReport report;
    report.trials = 50;
    ss::CoverageCell cell;
    cell.family = "srht";
    cell.m = 64;
    cell.target = "eig:1";
    cell.hits = 47;
    cell.trials = 50;
    cell.failures = 2;
    cell.coverage = 47.0 / 48.0;
    cell.cp_lower = 0.9;
    cell.cp_upper = 1.0;
    cell.mean_width = 0.25;
    report.cells.push_back(cell);
    const std::string csv = ss::to_csv(report, false);
    int lines = 0;
    for (const char c : csv) lines += c == '\n';
    EXPECT_EQ(lines, 2);  // header + one data row
    EXPECT_NE(csv.find("family,m,target,hits,trials,coverage,cp_lower,cp_upper,mean_width,"
                       "failures"),
              std::string::npos);
    EXPECT_NE(csv.find("srht,64,eig:1,47,50,"), std::string::npos);
}

TEST(EmitCoverage, CoverageColumnConsistentWithRow) {
    // Recompute hits / (trials - failures) from the emitted row: exact match,
    // because numbers are emitted with shortest round-trip precision.
    ss::CoverageReport report;
    ss::CoverageCell cell;
    cell.family = "cs";
    cell.m = 10;
    cell.target = "ls:1";
    cell.hits = 17;
    cell.trials = 23;
    cell.failures = 3;
    cell.coverage = 17.0 / 20.0;
    report.cells.push_back(cell);
    const std::string csv = ss::to_csv(report, false);
    const std::size_t header_end = csv.find('\n');
    std::string row = csv.substr(header_end + 1);
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = row.find(',', start);
        fields.push_back(row.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    const double hits = std::stod(fields[3]);
    const double trials = std::stod(fields[4]);
    const double coverage = std::stod(fields[5]);
    const double failures = std::stod(fields[9]);
    EXPECT_EQ(coverage, hits / (trials - failures));
}

TEST(EmitCoverage, JsonRoundTrip) {
    ss::CoverageReport report;
    report.trials = 60;
    report.level = 0.95;
    report.seed = 11;
    ss::CoverageCell cell;
    cell.family = "srht";
    cell.m = 64;
    cell.target = "eigvec:1:1";
    cell.hits = 55;
    cell.trials = 60;
    cell.failures = 0;
    cell.coverage = 55.0 / 60.0;
    cell.cp_lower = 0.8;
    cell.cp_upper = 0.97;
    cell.mean_width = 1.0 / 3.0;
    report.cells.push_back(cell);

    const ss::CoverageReport back = ss::coverage_from_json(ss::to_json(report, true));
    ASSERT_EQ(back.cells.size(), 1u);
    EXPECT_EQ(back.cells[0].family, "srht");
    EXPECT_EQ(back.cells[0].hits, 55u);
    EXPECT_EQ(back.cells[0].mean_width, cell.mean_width);
    EXPECT_EQ(back.trials, 60);
    EXPECT_EQ(back.seed, 11u);
}

TEST(ParseConfig, MinimalConfigWithDefaults) {
    TempFile f(R"({"data": {"case": 1, "n": 2048, "p": 15},
                   "families": ["srht"], "m_grid": [800],
                   "targets": ["eig:1"], "seed": 7})");
    const ss::ExperimentConfig cfg = ss::parse_config(f.path());
    EXPECT_EQ(cfg.trials, 500);          // default applied
    EXPECT_DOUBLE_EQ(cfg.level, 0.95);   // default applied
    EXPECT_EQ(cfg.seed, 7u);
    ASSERT_EQ(cfg.families.size(), 1u);
    EXPECT_EQ(cfg.families[0].family, ss::sketch_family::srht);
    ASSERT_EQ(cfg.targets.size(), 1u);
    EXPECT_EQ(cfg.targets[0].label(), "eig:1");
}

TEST(ParseConfig, OversizedSketchRejected) {
    TempFile f(R"({"data": {"case": 1, "n": 100, "p": 5},
                   "families": ["srht"], "m_grid": [100],
                   "targets": ["eig:1"], "seed": 7})");
    EXPECT_EQ(code_of([&] { ss::parse_config(f.path()); }), ss::errc::schema_error);
}

TEST(ParseConfig, UnknownFamilyListsAllowed) {
    TempFile f(R"({"data": {"case": 1, "n": 100, "p": 5},
                   "families": ["fft"], "m_grid": [50],
                   "targets": ["eig:1"], "seed": 7})");
    try {
        ss::parse_config(f.path());
        FAIL();
    } catch (const ss::error& e) {
        EXPECT_EQ(e.code(), ss::errc::schema_error);
        EXPECT_NE(std::string(e.what()).find("allowed"), std::string::npos);
    }
}

TEST(ParseConfig, UnknownKeyNamed) {
    TempFile f(R"({"data": {"case": 1, "n": 100, "p": 5},
                   "families": ["srht"], "m_grid": [50],
                   "targets": ["eig:1"], "seed": 7, "bogus": 1})");
    try {
        ss::parse_config(f.path());
        FAIL();
    } catch (const ss::error& e) {
        EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    }
}

TEST(ParseConfig, CsvDataSource) {
    TempFile data_file("1,2,3\n4,5,6\n7,8,9\n10,11,12\n");
    TempFile f(std::string(R"({"data": {"csv": ")") + data_file.path() +
               R"(", "y_col": "last"}, "families": ["countsketch"], "m_grid": [3],
                  "targets": ["ls:1"], "trials": 50, "seed": 1})");
    const ss::ExperimentConfig cfg = ss::parse_config(f.path());
    EXPECT_EQ(cfg.data.csv_path, data_file.path());
    ASSERT_TRUE(cfg.data.y_col.has_value());
    EXPECT_EQ(*cfg.data.y_col, -1);
    const ss::DataMatrix loaded = ss::make_experiment_data(cfg);
    EXPECT_EQ(loaded.n(), 4);
    EXPECT_EQ(loaded.p(), 2);
    EXPECT_TRUE(loaded.y.has_value());
}

TEST(ParseConfig, InvalidJsonIsSchemaError) {
    TempFile f("{not json");
    EXPECT_EQ(code_of([&] { ss::parse_config(f.path()); }), ss::errc::schema_error);
}

TEST(WriteOutput, RoundTripsThroughFile) {
    const std::string path = "/tmp/sketchstat_write_test.csv";
    ss::write_output("a,b\n1,2\n", path);
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(content, "a,b\n1,2\n");
    std::remove(path.c_str());
}
