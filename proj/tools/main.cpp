// sketchstat CLI: apply sketching operators, run sketched LS / PCA inference,
// and drive the Monte Carlo harness (coverage, variance, quadratic-form CLT,
// bench, delocalization diagnostics).

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sketchstat/sketchstat.hpp"

namespace ss = sketchstat;

namespace {

int exit_code_for(ss::errc code) {
    switch (code) {
        case ss::errc::schema_error:
        case ss::errc::config_invalid:
        case ss::errc::bad_level:
        case ss::errc::bad_sparsity:
        case ss::errc::kurtosis_too_low:
        case ss::errc::sketch_too_small:
        case ss::errc::sketch_too_large:
        case ss::errc::too_few_samples:
        case ss::errc::length_not_power_of_two:
        case ss::errc::needs_full_data:
            return 2;  // config error
        case ss::errc::parse_error:
        case ss::errc::ragged_rows:
        case ss::errc::non_numeric_cell:
        case ss::errc::io_error:
        case ss::errc::non_finite:
        case ss::errc::bad_shape:
        case ss::errc::not_symmetric:
        case ss::errc::not_orthonormal:
            return 3;  // data error
        default:
            return 4;  // numerical error
    }
}

struct CommonOpts {
    std::string format = "csv";
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 0;
    bool no_meta = false;
};

struct DataOpts {
    std::string csv;
    bool header = false;
    std::string y_col;  // "", "last", or 1-based index
    int case_id = 0;
    int n = 0;
    int p = 0;
};

void add_common(CLI::App* cmd, CommonOpts& c, bool needs_seed) {
    cmd->add_option("--format", c.format, "Output format: csv or json")->default_str("csv");
    cmd->add_option("--out", c.out, "Output path (default: stdout)");
    auto* seed_opt =
        cmd->add_option("--seed", c.seed, "64-bit RNG seed (mandatory for randomized paths)");
    if (needs_seed) seed_opt->required();
    cmd->add_option("--threads", c.threads, "Worker threads (0 = auto)");
    cmd->add_flag("--no-meta", c.no_meta, "Suppress the timestamp metadata header");
}

void add_data(CLI::App* cmd, DataOpts& d) {
    cmd->add_option("--csv", d.csv, "CSV data file");
    cmd->add_flag("--header", d.header, "CSV has a header row");
    cmd->add_option("--y-col", d.y_col, "Response column: 1-based index or 'last'");
    cmd->add_option("--case", d.case_id, "Synthetic case (1, 2 or 3)");
    cmd->add_option("--n", d.n, "Synthetic row count");
    cmd->add_option("--p", d.p, "Synthetic column count");
}

ss::DataMatrix load_data(const DataOpts& d, std::uint64_t seed, bool need_y) {
    ss::DataMatrix data;
    if (d.case_id != 0) {
        ss::require(d.n > 0 && d.p > 0, ss::errc::config_invalid,
                    "--case needs --n and --p");
        ss::CaseConfig cc;
        cc.case_id = d.case_id;
        cc.n = d.n;
        cc.p = d.p;
        cc.seed = ss::derive_key(seed, 0xDA7A5EEDULL);
        data = ss::gen_case(cc);
    } else if (!d.csv.empty()) {
        std::optional<int> y_col;
        if (!d.y_col.empty()) {
            if (d.y_col == "last") {
                y_col = -1;
            } else {
                try {
                    y_col = std::stoi(d.y_col);
                } catch (...) {
                    ss::fail(ss::errc::config_invalid, "--y-col must be an index or 'last'");
                }
            }
        }
        data = ss::load_csv(d.csv, d.header, y_col);
    } else {
        ss::fail(ss::errc::config_invalid, "no data source: pass --csv or --case/--n/--p");
    }
    if (need_y) {
        ss::require(data.y.has_value(), ss::errc::config_invalid,
                    "this command needs a response (use --y-col, or a case generator)");
    }
    return data;
}

std::string sketch_to_csv(const ss::SketchOutput& sk, bool meta) {
    std::ostringstream out;
    if (meta) {
        out << "# sketchstat sketch: family=" << ss::family_name(sk.family)
            << " m=" << sk.m_nominal << " m_eff=" << sk.m_eff
            << " gamma=" << ss::format_double(sk.gamma) << " tau=" << ss::format_double(sk.tau)
            << " generated=" << ss::utc_timestamp() << '\n';
    }
    for (Eigen::Index i = 0; i < sk.Xs.rows(); ++i) {
        for (Eigen::Index j = 0; j < sk.Xs.cols(); ++j) {
            if (j > 0) out << ',';
            out << ss::format_double(sk.Xs(i, j));
        }
        if (sk.ys) out << ',' << ss::format_double((*sk.ys)[i]);
        out << '\n';
    }
    return out.str();
}

nlohmann::json sketch_to_json(const ss::SketchOutput& sk, bool meta) {
    nlohmann::json j;
    j["family"] = ss::family_name(sk.family);
    j["m"] = sk.m_nominal;
    j["m_eff"] = sk.m_eff;
    j["gamma"] = sk.gamma;
    j["tau"] = sk.tau;
    if (sk.alpha) j["alpha"] = *sk.alpha;
    if (meta) j["generated"] = ss::utc_timestamp();
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < sk.Xs.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index jj = 0; jj < sk.Xs.cols(); ++jj) row.push_back(sk.Xs(i, jj));
        rows.push_back(std::move(row));
    }
    j["Xs"] = std::move(rows);
    if (sk.ys) {
        auto ys = nlohmann::json::array();
        for (Eigen::Index i = 0; i < sk.ys->size(); ++i) ys.push_back((*sk.ys)[i]);
        j["ys"] = std::move(ys);
    }
    return j;
}

void emit(const std::string& csv_text, const nlohmann::json& json_value, const CommonOpts& c) {
    if (ss::parse_format(c.format) == ss::report_format::csv) {
        ss::write_output(csv_text, c.out);
    } else {
        ss::write_output(json_value.dump(2) + "\n", c.out);
    }
}

std::string interval_rows_csv(const std::vector<std::array<std::string, 5>>& rows, bool meta,
                              const std::string& what) {
    std::ostringstream out;
    if (meta) out << "# sketchstat " << what << ": generated=" << ss::utc_timestamp() << '\n';
    out << "kind,index,estimate,lower,upper\n";
    for (const auto& r : rows) out << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << ',' << r[4] << '\n';
    return out.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"randomized sketching with data-conditional inference for least squares and PCA"};
    app.require_subcommand(1);

    // --- sketch ---------------------------------------------------------
    auto* cmd_sketch = app.add_subcommand("sketch", "Apply a sketching operator to data");
    CommonOpts sketch_common;
    DataOpts sketch_data;
    std::string sketch_family_str = "srht";
    int sketch_m = 0;
    add_common(cmd_sketch, sketch_common, true);
    add_data(cmd_sketch, sketch_data);
    cmd_sketch->add_option("--family", sketch_family_str,
                           "srht | countsketch | sse:<zeta> | gaussian | t:<kurtosis> | haar | subsample")
        ->required();
    cmd_sketch->add_option("--m", sketch_m, "Sketch size")->required();

    // --- ls ---------------------------------------------------------------
    auto* cmd_ls = app.add_subcommand("ls", "Sketched least squares with confidence intervals");
    CommonOpts ls_common;
    DataOpts ls_data;
    std::string ls_family_str = "srht";
    int ls_m = 0;
    double ls_level = 0.95;
    std::string ls_estimator = "both";
    std::string ls_cov = "auto";
    add_common(cmd_ls, ls_common, true);
    add_data(cmd_ls, ls_data);
    cmd_ls->add_option("--family", ls_family_str, "Sketch family")->required();
    cmd_ls->add_option("--m", ls_m, "Sketch size")->required();
    cmd_ls->add_option("--level", ls_level, "Confidence level")->default_str("0.95");
    cmd_ls->add_option("--estimator", ls_estimator, "complete | partial | both");
    cmd_ls->add_option("--cov", ls_cov, "auto | simple | sandwich");

    // --- pca --------------------------------------------------------------
    auto* cmd_pca = app.add_subcommand("pca", "Sketched PCA with confidence intervals");
    CommonOpts pca_common;
    DataOpts pca_data;
    std::string pca_family_str = "srht";
    int pca_m = 0;
    double pca_level = 0.95;
    std::vector<std::string> pca_eigvec;
    add_common(cmd_pca, pca_common, true);
    add_data(cmd_pca, pca_data);
    cmd_pca->add_option("--family", pca_family_str, "Sketch family")->required();
    cmd_pca->add_option("--m", pca_m, "Sketch size")->required();
    cmd_pca->add_option("--level", pca_level, "Confidence level")->default_str("0.95");
    cmd_pca->add_option("--eigvec", pca_eigvec,
                        "Eigenvector functional(s) '<i>[:<c>]' (probe direction e_c)");

    // --- mc-coverage / mc-variance ----------------------------------------
    auto* cmd_cov = app.add_subcommand("mc-coverage", "Monte Carlo coverage experiment");
    CommonOpts cov_common;
    std::string cov_config;
    add_common(cmd_cov, cov_common, false);
    cmd_cov->add_option("--config", cov_config, "Experiment config JSON")->required();

    auto* cmd_var = app.add_subcommand("mc-variance", "Monte Carlo variance experiment");
    CommonOpts var_common;
    std::string var_config;
    add_common(cmd_var, var_common, false);
    cmd_var->add_option("--config", var_config, "Experiment config JSON")->required();

    // --- qf-clt -------------------------------------------------------------
    auto* cmd_qf = app.add_subcommand("qf-clt", "Quadratic-form CLT check");
    CommonOpts qf_common;
    std::string qf_family_str = "srht";
    int qf_n = 0, qf_m = 0, qf_trials = 5000;
    std::string qf_pair = "delocalized";
    add_common(cmd_qf, qf_common, true);
    cmd_qf->add_option("--family", qf_family_str, "Sketch family")->required();
    cmd_qf->add_option("--n", qf_n, "Ambient dimension")->required();
    cmd_qf->add_option("--m", qf_m, "Sketch size")->required();
    cmd_qf->add_option("--pair", qf_pair,
                       "delocalized | localized | angle:<deg> | srht-counterexample");
    cmd_qf->add_option("--trials", qf_trials, "Monte Carlo trials (>= 1000)");

    // --- bench ---------------------------------------------------------------
    auto* cmd_bench = app.add_subcommand("bench", "Sketch-build + solve timing comparison");
    CommonOpts bench_common;
    int bench_n = 2048, bench_p = 15, bench_reps = 20;
    std::vector<int> bench_grid;
    add_common(cmd_bench, bench_common, true);
    cmd_bench->add_option("--n", bench_n, "Rows")->default_str("2048");
    cmd_bench->add_option("--p", bench_p, "Columns")->default_str("15");
    cmd_bench->add_option("--m-grid", bench_grid, "Sketch sizes (default 200..1600 step 200)");
    cmd_bench->add_option("--reps", bench_reps, "Timed repetitions per cell");

    // --- diagnose --------------------------------------------------------------
    auto* cmd_diag = app.add_subcommand("diagnose", "Delocalization diagnostics");
    CommonOpts diag_common;
    DataOpts diag_data;
    add_common(cmd_diag, diag_common, true);
    add_data(cmd_diag, diag_data);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*cmd_sketch) {
            const ss::FamilySpec fam = ss::parse_family(sketch_family_str);
            const ss::DataMatrix data = load_data(sketch_data, sketch_common.seed, false);
            const ss::SketchOutput sk =
                ss::apply_sketch(data, fam.instantiate(sketch_m, sketch_common.seed));
            emit(sketch_to_csv(sk, !sketch_common.no_meta),
                 sketch_to_json(sk, !sketch_common.no_meta), sketch_common);
        } else if (*cmd_ls) {
            const ss::FamilySpec fam = ss::parse_family(ls_family_str);
            const ss::DataMatrix data = load_data(ls_data, ls_common.seed, true);
            const ss::SketchOutput sk = ss::apply_sketch(data, fam.instantiate(ls_m, ls_common.seed));
            std::optional<ss::ls_cov_mode> force;
            if (ls_cov == "simple") force = ss::ls_cov_mode::simple;
            else if (ls_cov == "sandwich") force = ss::ls_cov_mode::sandwich;
            else ss::require(ls_cov == "auto", ss::errc::config_invalid, "--cov must be auto|simple|sandwich");

            std::vector<std::array<std::string, 5>> rows;
            nlohmann::json j;
            auto add_result = [&](ss::ls_kind kind, const char* name) {
                const ss::Vector xty = data.X.transpose() * (*data.y);
                const ss::LsInferenceResult res =
                    kind == ss::ls_kind::complete
                        ? ss::ls_infer(sk, kind, ls_level, std::nullopt, force)
                        : ss::ls_infer(sk, kind, ls_level, xty, force);
                nlohmann::json rj;
                rj["scale"] = res.scale;
                rj["gamma"] = res.gamma;
                rj["tau"] = res.tau;
                auto arr = nlohmann::json::array();
                for (Eigen::Index i = 0; i < res.beta_hat.size(); ++i) {
                    rows.push_back({name, std::to_string(i + 1),
                                    ss::format_double(res.beta_hat[i]),
                                    ss::format_double(res.cis[i].lower),
                                    ss::format_double(res.cis[i].upper)});
                    arr.push_back({{"coord", i + 1},
                                   {"estimate", res.beta_hat[i]},
                                   {"lower", res.cis[i].lower},
                                   {"upper", res.cis[i].upper}});
                }
                rj["coordinates"] = std::move(arr);
                j[name] = std::move(rj);
            };
            if (ls_estimator == "complete" || ls_estimator == "both") {
                add_result(ss::ls_kind::complete, "complete");
            }
            if (ls_estimator == "partial" || ls_estimator == "both") {
                add_result(ss::ls_kind::partial, "partial");
            }
            ss::require(ls_estimator == "complete" || ls_estimator == "partial" ||
                            ls_estimator == "both",
                        ss::errc::config_invalid, "--estimator must be complete|partial|both");
            if (!ls_common.no_meta) j["generated"] = ss::utc_timestamp();
            emit(interval_rows_csv(rows, !ls_common.no_meta, "ls"), j, ls_common);
        } else if (*cmd_pca) {
            const ss::FamilySpec fam = ss::parse_family(pca_family_str);
            const ss::DataMatrix data = load_data(pca_data, pca_common.seed, false);
            const ss::SketchOutput sk =
                ss::apply_sketch(data, fam.instantiate(pca_m, pca_common.seed));
            const ss::PcaInferenceResult pca = ss::sketched_pca(sk);
            std::optional<ss::Matrix> u_full;
            if (fam.needs_full_u()) u_full = ss::thin_svd(data).U;

            std::vector<std::array<std::string, 5>> rows;
            nlohmann::json j;
            auto eig_arr = nlohmann::json::array();
            for (Eigen::Index i = 0; i < pca.lambdas_hat.size(); ++i) {
                const auto ci = ss::eigenvalue_ci(pca, sk, i, pca_level, u_full);
                rows.push_back({"eig", std::to_string(i + 1),
                                ss::format_double(pca.lambdas_hat[i]),
                                ss::format_double(ci.lower), ss::format_double(ci.upper)});
                eig_arr.push_back({{"index", i + 1},
                                   {"estimate", pca.lambdas_hat[i]},
                                   {"lower", ci.lower},
                                   {"upper", ci.upper},
                                   {"low_gamma_warning", ci.low_gamma_warning}});
            }
            j["eigenvalues"] = std::move(eig_arr);
            auto vec_arr = nlohmann::json::array();
            for (const std::string& spec : pca_eigvec) {
                const ss::Target t = ss::parse_target("eigvec:" + spec);
                const ss::Vector c = ss::Vector::Unit(data.p(), t.c_index - 1);
                const auto ci = ss::eigenvector_ci(pca, sk, t.index - 1, c, pca_level, u_full);
                rows.push_back({"eigvec", spec, ss::format_double(ci.center),
                                ss::format_double(ci.lower), ss::format_double(ci.upper)});
                vec_arr.push_back({{"index", t.index},
                                   {"c", t.c_index},
                                   {"estimate", ci.center},
                                   {"lower", ci.lower},
                                   {"upper", ci.upper}});
            }
            j["eigenvectors"] = std::move(vec_arr);
            if (!pca_common.no_meta) j["generated"] = ss::utc_timestamp();
            emit(interval_rows_csv(rows, !pca_common.no_meta, "pca"), j, pca_common);
        } else if (*cmd_cov) {
            ss::ExperimentConfig cfg = ss::parse_config(cov_config);
            if (cov_common.threads != 0) cfg.threads = cov_common.threads;
            const ss::CoverageReport report = ss::run_coverage(cfg);
            emit(ss::to_csv(report, !cov_common.no_meta), ss::to_json(report, !cov_common.no_meta),
                 cov_common);
        } else if (*cmd_var) {
            ss::ExperimentConfig cfg = ss::parse_config(var_config);
            if (var_common.threads != 0) cfg.threads = var_common.threads;
            const ss::VarianceReport report = ss::run_variance(cfg);
            emit(ss::to_csv(report, !var_common.no_meta), ss::to_json(report, !var_common.no_meta),
                 var_common);
        } else if (*cmd_qf) {
            const ss::FamilySpec fam = ss::parse_family(qf_family_str);
            const ss::QfCltResult res = ss::run_qf_clt(fam, qf_n, qf_m, qf_pair, qf_trials,
                                                       qf_common.seed, qf_common.threads);
            std::ostringstream csv;
            if (!qf_common.no_meta) csv << "# sketchstat qf-clt: generated=" << ss::utc_timestamp() << '\n';
            csv << "family,n,m,pair,empirical_var,theoretical_var,ks_d,ks_p,zero_fraction,"
                   "distinct_values,trials,failures\n";
            csv << fam.label << ',' << qf_n << ',' << qf_m << ',' << qf_pair << ','
                << ss::format_double(res.empirical_var) << ','
                << ss::format_double(res.theoretical_var) << ',' << ss::format_double(res.ks_d)
                << ',' << ss::format_double(res.ks_p) << ',' << ss::format_double(res.zero_fraction)
                << ',' << res.distinct_values << ',' << res.trials << ',' << res.failures << '\n';
            emit(csv.str(), ss::to_json(res), qf_common);
        } else if (*cmd_bench) {
            ss::BenchConfig bc;
            bc.n = bench_n;
            bc.p = bench_p;
            bc.reps = bench_reps;
            bc.seed = bench_common.seed;
            if (!bench_grid.empty()) {
                bc.m_grid = bench_grid;
            } else {
                bc.m_grid.clear();
                for (int m = 200; m <= 1600; m += 200) bc.m_grid.push_back(m);
            }
            const auto rows = ss::run_bench(bc);
            nlohmann::json j = nlohmann::json::array();
            for (const auto& r : rows) {
                j.push_back({{"family", r.family},
                             {"m", r.m},
                             {"median_build_seconds", r.median_build_seconds},
                             {"median_seconds", r.median_seconds}});
            }
            emit(ss::to_csv(rows, !bench_common.no_meta), j, bench_common);
        } else if (*cmd_diag) {
            const ss::DataMatrix data = load_data(diag_data, diag_common.seed, false);
            const ss::DelocalizationReport rep = ss::delocalization_report(data);
            nlohmann::json j = ss::to_json(rep);
            if (!diag_common.no_meta) j["generated"] = ss::utc_timestamp();
            std::ostringstream csv;
            if (!diag_common.no_meta) csv << "# sketchstat diagnose: generated=" << ss::utc_timestamp() << '\n';
            csv << "metric,value,flag\n";
            csv << "max_leverage," << ss::format_double(rep.max_leverage) << ','
                << (rep.leverage_flag ? 1 : 0) << '\n';
            csv << "u4_mass," << ss::format_double(rep.u4_mass) << ',' << (rep.u4_flag ? 1 : 0)
                << '\n';
            if (rep.has_response) {
                csv << "max_norm_residual," << ss::format_double(rep.max_norm_residual) << ','
                    << (rep.residual_flag ? 1 : 0) << '\n';
                csv << "max_norm_fitted," << ss::format_double(rep.max_norm_fitted) << ','
                    << (rep.fitted_flag ? 1 : 0) << '\n';
            }
            emit(csv.str(), j, diag_common);
        }
    } catch (const ss::error& e) {
        std::cerr << "error[" << e.code_name() << "]: " << e.what() << std::endl;
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error[Internal]: " << e.what() << std::endl;
        return 4;
    }
    return 0;
}
