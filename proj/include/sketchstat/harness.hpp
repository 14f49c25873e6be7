#ifndef SKETCHSTAT_HARNESS_HPP
#define SKETCHSTAT_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sketchstat/csv.hpp"
#include "sketchstat/datagen.hpp"
#include "sketchstat/error.hpp"
#include "sketchstat/linalg.hpp"
#include "sketchstat/ls_inference.hpp"
#include "sketchstat/parallel.hpp"
#include "sketchstat/pca_inference.hpp"
#include "sketchstat/sketch.hpp"
#include "sketchstat/stats.hpp"

namespace sketchstat {

// =============================================================================
/// A sketch family plus its fixed parameters; m and the per-trial seed are
/// filled in by the experiment loops.
struct FamilySpec {
    sketch_family family = sketch_family::srht;
    int zeta = 1;
    std::optional<iid_dist> dist;
    std::string label;

    SketchSpec instantiate(int m, std::uint64_t seed) const {
        SketchSpec spec;
        spec.family = family;
        spec.m = m;
        spec.seed = seed;
        spec.zeta = zeta;
        spec.dist = dist;
        return spec;
    }

    bool needs_full_u() const {
        return family == sketch_family::uniform_subsample ||
               (family == sketch_family::iid && dist && !dist->is_gaussian);
    }
};

/// Accepted names: srht | countsketch | sse:<zeta> | gaussian | haar |
/// subsample | t:<kurtosis>.
inline FamilySpec parse_family(const std::string& text) {
    FamilySpec f;
    f.label = text;
    if (text == "srht") {
        f.family = sketch_family::srht;
    } else if (text == "countsketch") {
        f.family = sketch_family::sse;
        f.zeta = 1;
    } else if (text.rfind("sse:", 0) == 0) {
        f.family = sketch_family::sse;
        try {
            f.zeta = std::stoi(text.substr(4));
        } catch (...) {
            fail(errc::schema_error, "families: bad sparsity in '" + text + "'");
        }
        require(f.zeta >= 1, errc::schema_error, "families: sparsity must be >= 1");
    } else if (text == "gaussian") {
        f.family = sketch_family::iid;
        f.dist = iid_dist::gaussian();
    } else if (text.rfind("t:", 0) == 0) {
        f.family = sketch_family::iid;
        double kurt = 0.0;
        try {
            kurt = std::stod(text.substr(2));
        } catch (...) {
            fail(errc::schema_error, "families: bad kurtosis in '" + text + "'");
        }
        require(kurt > 3.0, errc::schema_error, "families: t kurtosis must exceed 3");
        f.dist = iid_dist::scaled_t(kurt);
    } else if (text == "haar") {
        f.family = sketch_family::haar;
    } else if (text == "subsample") {
        f.family = sketch_family::uniform_subsample;
    } else {
        fail(errc::schema_error,
             "families: unknown family '" + text +
                 "' (allowed: srht, countsketch, sse:<zeta>, gaussian, t:<kurtosis>, haar, "
                 "subsample)");
    }
    return f;
}

// =============================================================================
/// Inference target of one experiment cell. Indices are 1-based, matching the
/// config syntax: ls:<j> | ls-partial:<j> | eig:<i> | eigvec:<i>[:<c>] with
/// c the coordinate index of the probe direction e_c (default 1).
struct Target {
    enum class kind { ls_coord, ls_partial_coord, eig, eigvec };
    kind k = kind::eig;
    int index = 1;
    int c_index = 1;

    std::string label() const {
        switch (k) {
            case kind::ls_coord: return "ls:" + std::to_string(index);
            case kind::ls_partial_coord: return "ls-partial:" + std::to_string(index);
            case kind::eig: return "eig:" + std::to_string(index);
            case kind::eigvec:
                return "eigvec:" + std::to_string(index) + ":" + std::to_string(c_index);
        }
        return "?";
    }

    bool is_ls() const { return k == kind::ls_coord || k == kind::ls_partial_coord; }
};

inline Target parse_target(const std::string& text) {
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = s.find(':', start);
            parts.push_back(s.substr(start, pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        return parts;
    };
    const auto parts = split(text);
    auto index_of = [&](std::size_t slot) {
        require(slot < parts.size(), errc::schema_error, "targets: missing index in '" + text + "'");
        try {
            const int v = std::stoi(parts[slot]);
            require(v >= 1, errc::schema_error, "targets: index must be >= 1");
            return v;
        } catch (const error&) {
            throw;
        } catch (...) {
            fail(errc::schema_error, "targets: bad index in '" + text + "'");
        }
    };

    Target t;
    if (parts[0] == "ls") {
        t.k = Target::kind::ls_coord;
        t.index = index_of(1);
    } else if (parts[0] == "ls-partial") {
        t.k = Target::kind::ls_partial_coord;
        t.index = index_of(1);
    } else if (parts[0] == "eig") {
        t.k = Target::kind::eig;
        t.index = index_of(1);
    } else if (parts[0] == "eigvec") {
        t.k = Target::kind::eigvec;
        t.index = index_of(1);
        t.c_index = parts.size() > 2 ? index_of(2) : 1;
    } else {
        fail(errc::schema_error,
             "targets: unknown target '" + text + "' (allowed: ls:<j>, ls-partial:<j>, eig:<i>, "
             "eigvec:<i>[:<c>])");
    }
    return t;
}

// =============================================================================
struct DataSource {
    std::optional<CaseConfig> case_cfg;  // synthetic
    std::string csv_path;                // or a CSV file
    bool csv_has_header = false;
    std::optional<int> y_col;            // 1-based; -1 means last column
};

struct ExperimentConfig {
    DataSource data;
    std::vector<FamilySpec> families;
    std::vector<int> m_grid;
    int trials = 500;
    std::vector<Target> targets;
    double level = 0.95;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

struct CoverageCell {
    std::string family;
    int m = 0;
    std::string target;
    std::uint64_t hits = 0;
    std::uint64_t trials = 0;
    double coverage = 0.0;
    double cp_lower = 0.0;
    double cp_upper = 1.0;
    double mean_width = 0.0;
    std::uint64_t failures = 0;
};

struct CoverageReport {
    std::vector<CoverageCell> cells;
    int trials = 0;
    double level = 0.95;
    std::uint64_t seed = 0;
};

struct VarianceCell {
    std::string family;
    int m = 0;
    std::string target;
    double empirical_var = 0.0;
    double theoretical_var = 0.0;
    double ratio = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;
};

struct VarianceReport {
    std::vector<VarianceCell> cells;
    int trials = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

/// Child seed for one Monte Carlo trial: a cipher derivation of
/// (master seed, family label, m, trial index), independent of the target.
inline std::uint64_t trial_seed(std::uint64_t master, std::string_view family_label, int m,
                                std::uint64_t trial) {
    const std::uint64_t cell = derive_key(fnv1a(family_label), static_cast<std::uint64_t>(m));
    return philox2x64::block(master, cell, trial)[1];
}

constexpr std::uint64_t kDataSeedTag = 0xDA7A5EEDULL;

struct GroundTruth {
    Vector beta;
    Vector xty;
    Vector lambdas;
    Matrix vectors;
    Matrix U;  // full-data left singular matrix (oracle modes); empty if unused
    bool has_ls = false;
    bool has_pca = false;
};

inline GroundTruth compute_truth(const DataMatrix& data, bool need_ls, bool need_pca,
                                 bool need_u) {
    GroundTruth t;
    if (need_ls) {
        require(data.y.has_value(), errc::config_invalid,
                "least-squares targets need a response column");
        t.beta = solve_ls(data);
        t.xty = data.X.transpose() * (*data.y);
        t.has_ls = true;
    }
    if (need_pca) {
        const EigenDecomposition eig = sym_eig(Matrix(data.X.transpose() * data.X));
        t.lambdas = eig.lambdas;
        t.vectors = eig.vectors;
        t.has_pca = true;
    }
    if (need_u) t.U = thin_svd(data).U;
    return t;
}

enum class trial_status : std::uint8_t { miss = 0, hit = 1, failed = 2 };

struct TrialEval {
    trial_status status = trial_status::failed;
    double width = 0.0;
    double statistic = 0.0;  // run_variance
};

}  // namespace detail

/// Loads (or generates) the dataset an experiment runs on. Synthetic cases are
/// seeded from the master seed with a reserved tag, so one dataset is shared
/// by every (family, m) cell of the run.
inline DataMatrix make_experiment_data(const ExperimentConfig& cfg) {
    if (cfg.data.case_cfg) {
        CaseConfig cc = *cfg.data.case_cfg;
        cc.seed = derive_key(cfg.seed, detail::kDataSeedTag);
        return gen_case(cc);
    }
    require(!cfg.data.csv_path.empty(), errc::config_invalid, "no data source configured");
    return load_csv(cfg.data.csv_path, cfg.data.csv_has_header, cfg.data.y_col);
}

namespace detail {

inline void check_grid(const ExperimentConfig& cfg, const DataMatrix& data) {
    require(!cfg.families.empty(), errc::config_invalid, "no families configured");
    require(!cfg.m_grid.empty(), errc::config_invalid, "empty m grid");
    require(!cfg.targets.empty(), errc::config_invalid, "no targets configured");
    require(cfg.trials >= 50, errc::config_invalid, "need at least 50 trials");
    require(cfg.level > 0.0 && cfg.level < 1.0, errc::bad_level, "level must be in (0,1)");
    int prev = 0;
    for (const int m : cfg.m_grid) {
        require(m > prev, errc::config_invalid, "m grid must be strictly increasing");
        require(m > data.p() && m < data.n(), errc::config_invalid,
                "every m must satisfy p < m < n");
        prev = m;
    }
    for (const Target& t : cfg.targets) {
        const int limit = static_cast<int>(data.p());
        require(t.index <= limit, errc::config_invalid, "target index exceeds p");
        if (t.k == Target::kind::eigvec) {
            require(t.c_index <= limit, errc::config_invalid, "probe coordinate exceeds p");
        }
    }
}

/// Evaluates every configured target on one sketched draw.
inline void eval_targets_coverage(const ExperimentConfig& cfg, const GroundTruth& truth,
                                  const FamilySpec& fam, const SketchOutput& sk,
                                  std::vector<TrialEval>& out) {
    std::optional<LsInferenceResult> complete, partial;
    std::optional<PcaInferenceResult> pca;
    const std::optional<Matrix> u_full =
        fam.needs_full_u() ? std::optional<Matrix>(truth.U) : std::nullopt;

    for (std::size_t ti = 0; ti < cfg.targets.size(); ++ti) {
        const Target& t = cfg.targets[ti];
        TrialEval& ev = out[ti];
        try {
            switch (t.k) {
                case Target::kind::ls_coord: {
                    if (!complete) complete = ls_infer(sk, ls_kind::complete, cfg.level);
                    const auto& ci = complete->cis[t.index - 1];
                    ev.status = ci.contains(truth.beta[t.index - 1]) ? trial_status::hit
                                                                     : trial_status::miss;
                    ev.width = ci.width();
                    break;
                }
                case Target::kind::ls_partial_coord: {
                    if (!partial) partial = ls_infer(sk, ls_kind::partial, cfg.level, truth.xty);
                    const auto& ci = partial->cis[t.index - 1];
                    ev.status = ci.contains(truth.beta[t.index - 1]) ? trial_status::hit
                                                                     : trial_status::miss;
                    ev.width = ci.width();
                    break;
                }
                case Target::kind::eig: {
                    if (!pca) pca = sketched_pca(sk);
                    const auto ci = eigenvalue_ci(*pca, sk, t.index - 1, cfg.level,
                                                  fam.family == sketch_family::iid ? u_full
                                                                                   : std::nullopt);
                    ev.status = ci.contains(truth.lambdas[t.index - 1]) ? trial_status::hit
                                                                        : trial_status::miss;
                    ev.width = ci.width();
                    break;
                }
                case Target::kind::eigvec: {
                    if (!pca) pca = sketched_pca(sk);
                    const Vector c = Vector::Unit(truth.vectors.rows(), t.c_index - 1);
                    const auto ci = eigenvector_ci(*pca, sk, t.index - 1, c, cfg.level, u_full);
                    const double target_value = truth.vectors(t.c_index - 1, t.index - 1);
                    ev.status =
                        ci.contains(target_value) ? trial_status::hit : trial_status::miss;
                    ev.width = ci.width();
                    break;
                }
            }
        } catch (const error&) {
            ev.status = trial_status::failed;
            ev.width = 0.0;
        }
    }
}

}  // namespace detail

// =============================================================================
/// Coverage experiment: for every (family, m) cell, draws cfg.trials
/// independent sketches (child seeds derived from the master seed), evaluates
/// every target's interval on each draw, and counts containment of the
/// full-data truth. Failed trials are tallied, never resampled; the coverage
/// denominator excludes them. Trials run in parallel but aggregate in trial
/// order, so reports are identical for any thread count.
inline CoverageReport run_coverage(const ExperimentConfig& cfg) {
    const DataMatrix data = make_experiment_data(cfg);
    detail::check_grid(cfg, data);

    bool need_ls = false, need_pca = false, need_u = false;
    for (const Target& t : cfg.targets) (t.is_ls() ? need_ls : need_pca) = true;
    for (const FamilySpec& f : cfg.families) need_u |= f.needs_full_u();
    const detail::GroundTruth truth = detail::compute_truth(data, need_ls, need_pca, need_u);

    CoverageReport report;
    report.trials = cfg.trials;
    report.level = cfg.level;
    report.seed = cfg.seed;

    const std::size_t n_targets = cfg.targets.size();
    for (const FamilySpec& fam : cfg.families) {
        for (const int m : cfg.m_grid) {
            std::vector<std::vector<detail::TrialEval>> slots(
                static_cast<std::size_t>(cfg.trials), std::vector<detail::TrialEval>(n_targets));

            parallel_for(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t t) {
                auto& evals = slots[t];
                try {
                    const SketchOutput sk = apply_sketch(
                        data, fam.instantiate(m, detail::trial_seed(cfg.seed, fam.label, m, t)));
                    detail::eval_targets_coverage(cfg, truth, fam, sk, evals);
                } catch (const error&) {
                    for (auto& ev : evals) ev.status = detail::trial_status::failed;
                }
            });

            for (std::size_t ti = 0; ti < n_targets; ++ti) {
                CoverageCell cell;
                cell.family = fam.label;
                cell.m = m;
                cell.target = cfg.targets[ti].label();
                cell.trials = static_cast<std::uint64_t>(cfg.trials);
                double width_sum = 0.0;
                for (const auto& evals : slots) {
                    const auto& ev = evals[ti];
                    if (ev.status == detail::trial_status::failed) {
                        ++cell.failures;
                    } else {
                        if (ev.status == detail::trial_status::hit) ++cell.hits;
                        width_sum += ev.width;
                    }
                }
                const std::uint64_t successes = cell.trials - cell.failures;
                if (successes > 0) {
                    cell.coverage = static_cast<double>(cell.hits) / static_cast<double>(successes);
                    const BinomialInterval band = clopper_pearson(cell.hits, successes, 0.95);
                    cell.cp_lower = band.lower;
                    cell.cp_upper = band.upper;
                    cell.mean_width = width_sum / static_cast<double>(successes);
                }
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

namespace detail {

/// Full-data covariance limits used as the "theoretical" column of variance
/// reports. LS statistics are sqrt(m) c'(beta_hat - beta); their limiting
/// variance is tau * Sigma with the per-family Sigma below.
inline double ls_variance_theory(const FamilySpec& fam, const DataMatrix& data,
                                 const GroundTruth& truth, const Target& t, int m) {
    const Matrix gram = data.X.transpose() * data.X;
    const Matrix gram_inv = gram.llt().solve(Matrix::Identity(data.p(), data.p()));
    const double gamma = static_cast<double>(m) / static_cast<double>(data.n());
    const Eigen::Index j = t.index - 1;

    const Vector fitted = data.X * truth.beta;
    const Vector resid = *data.y - fitted;
    const bool complete = t.k == Target::kind::ls_coord;
    const Vector& r = complete ? resid : fitted;

    switch (fam.family) {
        case sketch_family::srht:
        case sketch_family::sse:
        case sketch_family::haar: {
            const double tau = (fam.family == sketch_family::sse) ? 1.0 : 1.0 - gamma;
            const int alpha = fam.family == sketch_family::srht ? 1 : 0;
            if (complete) return tau * resid.squaredNorm() * gram_inv(j, j);
            const Matrix sig = fitted.squaredNorm() * gram_inv +
                               static_cast<double>(alpha + 1) * truth.beta * truth.beta.transpose();
            return tau * sig(j, j);
        }
        case sketch_family::iid: {
            const double kurt = fam.dist ? fam.dist->kurtosis : 3.0;
            Matrix meat = r.squaredNorm() * gram;
            if (kurt != 3.0) {
                meat += (kurt - 3.0) * data.X.transpose() *
                        r.array().square().matrix().asDiagonal() * data.X;
            }
            Matrix sig = gram_inv * meat * gram_inv;
            if (!complete) sig += truth.beta * truth.beta.transpose();
            return sig(j, j);
        }
        case sketch_family::uniform_subsample: {
            const Matrix meat = static_cast<double>(data.n()) * data.X.transpose() *
                                r.array().square().matrix().asDiagonal() * data.X;
            const Matrix sig = gram_inv * meat * gram_inv;
            return (1.0 - gamma) * sig(j, j);
        }
    }
    return 0.0;
}

inline GForm family_gform_theory(const FamilySpec& fam, const GroundTruth& truth) {
    switch (fam.family) {
        case sketch_family::srht:
            return GForm::isotropic(1);
        case sketch_family::sse:
        case sketch_family::haar:
            return GForm::isotropic(0);
        case sketch_family::iid:
            if (!fam.dist || fam.dist->is_gaussian) return GForm::isotropic(0);
            return GForm::kurtosis(gamma_kurtosis(truth.U, fam.dist->kurtosis));
        case sketch_family::uniform_subsample:
            return GForm::explicit_matrix(subsample_g(truth.U));
    }
    fail(errc::config_invalid, "unknown family");
}

inline double pca_variance_theory(const FamilySpec& fam, const DataMatrix& data,
                                  const GroundTruth& truth, const Target& t, int m) {
    const double gamma = static_cast<double>(m) / static_cast<double>(data.n());
    const double tau =
        (fam.family == sketch_family::sse || fam.family == sketch_family::iid) ? 1.0
                                                                               : 1.0 - gamma;
    const GForm g = family_gform_theory(fam, truth);
    const Eigen::Index i = t.index - 1;
    if (t.k == Target::kind::eig) {
        return tau * g.diag_entry(i, truth.lambdas.size());
    }
    // Eigenvector statistic is standardized with the isotropic plug-in, so the
    // family's G enters through the ratio of quadratic forms.
    const Vector c = Vector::Unit(truth.vectors.rows(), t.c_index - 1);
    const Matrix d_family = delta_i(truth.lambdas, truth.vectors, g, i);
    const Matrix d_iso = delta_i(truth.lambdas, truth.vectors, GForm::isotropic(0), i);
    const double denom = c.dot(d_iso * c);
    require(denom > 1e-12, errc::degenerate_direction, "variance theory: degenerate direction");
    return tau * c.dot(d_family * c) / denom;
}

}  // namespace detail

// =============================================================================
/// Variance experiment: samples the sqrt(m)-scaled statistics
///   eig:     sqrt(m) (Lambda^_i - Lambda_i) / Lambda^_i
///   eigvec:  sqrt(m) c'(v^_i - v_i) / sqrt(c' Delta^_iso c)
///   ls:      sqrt(m) (beta^ - beta)_j
/// and reports their empirical variance against the theory values of
/// Tables 1-2 (data-dependent where the method demands it).
inline VarianceReport run_variance(const ExperimentConfig& cfg) {
    const DataMatrix data = make_experiment_data(cfg);
    detail::check_grid(cfg, data);

    bool need_ls = false, need_pca = false, need_u = false;
    for (const Target& t : cfg.targets) (t.is_ls() ? need_ls : need_pca) = true;
    for (const FamilySpec& f : cfg.families) need_u |= f.needs_full_u();
    const detail::GroundTruth truth = detail::compute_truth(data, need_ls, need_pca, need_u);

    VarianceReport report;
    report.trials = cfg.trials;
    report.seed = cfg.seed;

    const std::size_t n_targets = cfg.targets.size();
    for (const FamilySpec& fam : cfg.families) {
        for (const int m : cfg.m_grid) {
            std::vector<std::vector<detail::TrialEval>> slots(
                static_cast<std::size_t>(cfg.trials), std::vector<detail::TrialEval>(n_targets));

            parallel_for(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t t) {
                auto& evals = slots[t];
                std::optional<SketchOutput> sk;
                try {
                    sk = apply_sketch(
                        data, fam.instantiate(m, detail::trial_seed(cfg.seed, fam.label, m, t)));
                } catch (const error&) {
                    return;  // evals stay failed
                }
                std::optional<PcaInferenceResult> pca;
                std::optional<Vector> beta_complete, beta_partial;
                const double sqrt_m = std::sqrt(static_cast<double>(m));
                for (std::size_t ti = 0; ti < n_targets; ++ti) {
                    const Target& tgt = cfg.targets[ti];
                    detail::TrialEval& ev = evals[ti];
                    try {
                        switch (tgt.k) {
                            case Target::kind::ls_coord: {
                                if (!beta_complete) beta_complete = sketch_and_solve(*sk);
                                ev.statistic = sqrt_m * ((*beta_complete)[tgt.index - 1] -
                                                         truth.beta[tgt.index - 1]);
                                break;
                            }
                            case Target::kind::ls_partial_coord: {
                                if (!beta_partial) beta_partial = partial_sketch_solve(*sk, truth.xty);
                                ev.statistic = sqrt_m * ((*beta_partial)[tgt.index - 1] -
                                                         truth.beta[tgt.index - 1]);
                                break;
                            }
                            case Target::kind::eig: {
                                if (!pca) pca = sketched_pca(*sk);
                                const double lam_hat = pca->lambdas_hat[tgt.index - 1];
                                ev.statistic =
                                    sqrt_m * (lam_hat - truth.lambdas[tgt.index - 1]) / lam_hat;
                                break;
                            }
                            case Target::kind::eigvec: {
                                if (!pca) pca = sketched_pca(*sk);
                                const Vector c = Vector::Unit(truth.vectors.rows(), tgt.c_index - 1);
                                const Matrix d_iso = delta_i(pca->lambdas_hat, pca->vectors_hat,
                                                             GForm::isotropic(0), tgt.index - 1);
                                const double quad = c.dot(d_iso * c);
                                require(quad > 1e-12, errc::degenerate_direction,
                                        "degenerate probe direction");
                                const double diff =
                                    c.dot(pca->vectors_hat.col(tgt.index - 1)) -
                                    truth.vectors(tgt.c_index - 1, tgt.index - 1);
                                ev.statistic = sqrt_m * diff / std::sqrt(quad);
                                break;
                            }
                        }
                        ev.status = detail::trial_status::hit;
                    } catch (const error&) {
                        ev.status = detail::trial_status::failed;
                    }
                }
            });

            for (std::size_t ti = 0; ti < n_targets; ++ti) {
                const Target& tgt = cfg.targets[ti];
                VarianceCell cell;
                cell.family = fam.label;
                cell.m = m;
                cell.target = tgt.label();
                cell.trials = static_cast<std::uint64_t>(cfg.trials);
                std::vector<double> values;
                values.reserve(slots.size());
                for (const auto& evals : slots) {
                    if (evals[ti].status == detail::trial_status::failed) {
                        ++cell.failures;
                    } else {
                        values.push_back(evals[ti].statistic);
                    }
                }
                if (values.size() >= 2) cell.empirical_var = sample_variance(values);
                cell.theoretical_var =
                    tgt.is_ls() ? detail::ls_variance_theory(fam, data, truth, tgt, m)
                                : detail::pca_variance_theory(fam, data, truth, tgt, m);
                if (cell.theoretical_var > 0.0) {
                    cell.ratio = cell.empirical_var / cell.theoretical_var;
                }
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

// =============================================================================
/// Quadratic-form CLT lab: fixes a unit pair (a, a~), draws sketches, samples
/// the standardized statistic sqrt(m / tau) (a' S'S a~ - a'a~) / sigma with
/// the family's Table-1 sigma, and reports moments, a KS test against N(0,1),
/// the fraction of exact zeros, and the number of distinct values (the
/// documented counterexamples are non-normal: SRHT's 4-support pair has an
/// atom at zero, subsampling of e_1 takes exactly two values).
struct QfCltResult {
    double empirical_var = 0.0;   // of the sqrt(m/tau)-scaled statistic
    double theoretical_var = 0.0; // Table-1 sigma^2 for the pair
    double ks_d = 0.0;
    double ks_p = 0.0;            // KS p-value of the standardized samples
    double zero_fraction = 0.0;   // |standardized| < 1e-12
    std::uint64_t distinct_values = 0;
    std::uint64_t trials = 0;
    std::uint64_t failures = 0;
    double inner_product = 0.0;   // a' a~
};

/// Pair styles: delocalized | localized | angle:<degrees> | srht-counterexample.
inline std::pair<Vector, Vector> make_qf_pair(const std::string& style, int n,
                                              std::uint64_t seed) {
    if (style == "delocalized") return gen_unit_pair(pair_style::delocalized, n, seed);
    if (style == "localized") return gen_unit_pair(pair_style::localized, n, seed);
    if (style.rfind("angle:", 0) == 0) {
        double degrees = 0.0;
        try {
            degrees = std::stod(style.substr(6));
        } catch (...) {
            fail(errc::schema_error, "pair: bad angle in '" + style + "'");
        }
        return gen_unit_pair(pair_style::angle, n, seed, degrees * 3.14159265358979323846 / 180.0);
    }
    if (style == "srht-counterexample") {
        require(n >= 4, errc::bad_shape, "srht counterexample needs n >= 4");
        Vector a = Vector::Zero(n), at = Vector::Zero(n);
        a[0] = 0.5; a[1] = 0.5; a[2] = -0.5; a[3] = -0.5;
        at[0] = -0.5; at[1] = 0.5; at[2] = -0.5; at[3] = 0.5;
        return {a, at};
    }
    fail(errc::schema_error, "pair: unknown style '" + style +
                                 "' (allowed: delocalized, localized, angle:<deg>, "
                                 "srht-counterexample)");
}

inline double qf_sigma2_theory(const FamilySpec& fam, const Vector& a, const Vector& at) {
    const double ip = a.dot(at);
    switch (fam.family) {
        case sketch_family::srht:
            return 1.0 + 2.0 * ip * ip;
        case sketch_family::sse:
        case sketch_family::haar:
            return 1.0 + ip * ip;
        case sketch_family::iid: {
            const double kurt = fam.dist ? fam.dist->kurtosis : 3.0;
            return 1.0 + ip * ip + (kurt - 3.0) * a.cwiseProduct(at).squaredNorm();
        }
        case sketch_family::uniform_subsample:
            return static_cast<double>(a.size()) * a.cwiseProduct(at).squaredNorm();
    }
    return 1.0;
}

inline QfCltResult run_qf_clt(const FamilySpec& fam, int n, int m, const std::string& pair,
                              int trials, std::uint64_t seed, unsigned threads = 0) {
    require(trials >= 1000, errc::config_invalid, "qf-clt: need at least 1000 trials");
    require(m >= 1 && m < n, errc::config_invalid, "qf-clt: need 1 <= m < n");

    const auto [a, at] = make_qf_pair(pair, n, derive_key(seed, detail::kDataSeedTag));
    const double ip = a.dot(at);
    const double sigma2 = qf_sigma2_theory(fam, a, at);

    DataMatrix data;
    data.X = a;
    data.y = at;

    std::vector<double> scaled(static_cast<std::size_t>(trials),
                               std::numeric_limits<double>::quiet_NaN());
    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
        try {
            const SketchOutput sk =
                apply_sketch(data, fam.instantiate(m, detail::trial_seed(seed, fam.label, m, t)));
            const double qf = sk.Xs.col(0).dot(*sk.ys);
            scaled[t] = std::sqrt(static_cast<double>(m) / sk.tau) * (qf - ip);
        } catch (const error&) {
        }
    });

    QfCltResult res;
    res.trials = static_cast<std::uint64_t>(trials);
    res.theoretical_var = sigma2;
    res.inner_product = ip;

    std::vector<double> ok;
    ok.reserve(scaled.size());
    for (const double v : scaled) {
        if (std::isnan(v)) {
            ++res.failures;
        } else {
            ok.push_back(v);
        }
    }
    require(ok.size() >= 20, errc::too_few_samples, "qf-clt: too many failed trials");
    res.empirical_var = sample_variance(ok);

    const double sigma = std::sqrt(sigma2);
    std::vector<double> standardized(ok.size());
    std::uint64_t zeros = 0;
    for (std::size_t i = 0; i < ok.size(); ++i) {
        standardized[i] = ok[i] / sigma;
        if (std::abs(standardized[i]) < 1e-12) ++zeros;
    }
    res.zero_fraction = static_cast<double>(zeros) / static_cast<double>(ok.size());

    std::vector<double> sorted = ok;
    std::sort(sorted.begin(), sorted.end());
    res.distinct_values = sorted.empty() ? 0 : 1;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] != sorted[i - 1]) ++res.distinct_values;
    }

    const KsResult ks = ks_statistic(standardized);
    res.ks_d = ks.d;
    res.ks_p = ks.p_value;
    return res;
}

// =============================================================================
/// Wall-clock comparison of sketch-build + LS-solve across the four families
/// the cost model orders. Median over `reps` timed repetitions after warmup;
/// only orderings are meaningful, absolute numbers are environment-bound.
struct BenchRow {
    std::string family;
    int m = 0;
    double median_build_seconds = 0.0;  // sketch construction alone
    double median_seconds = 0.0;        // sketch-build + LS solve
};

struct BenchConfig {
    int n = 2048;
    int p = 15;
    std::vector<int> m_grid = {800};
    int reps = 20;
    std::uint64_t seed = 1;
};

inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    require(cfg.reps >= 5, errc::config_invalid, "bench: need at least 5 repetitions");
    for (const int m : cfg.m_grid) {
        require(m > cfg.p && m < cfg.n, errc::config_invalid, "bench: need p < m < n");
    }
    const DataMatrix data = gen_case1(cfg.n, cfg.p, derive_key(cfg.seed, detail::kDataSeedTag));

    const std::vector<std::string> family_names = {"countsketch", "sse:8", "srht", "gaussian"};
    std::vector<FamilySpec> fams;
    for (const auto& name : family_names) fams.push_back(parse_family(name));

    // Repetitions are interleaved round-robin across cells, so a slow window
    // on a shared machine penalizes every family alike instead of whichever
    // block it lands on.
    const std::size_t n_cells = fams.size() * cfg.m_grid.size();
    std::vector<std::vector<double>> build_times(n_cells), total_times(n_cells);
    double sink = 0.0;
    for (int rep = -2; rep < cfg.reps; ++rep) {  // two warmup rounds
        std::size_t cell = 0;
        for (const FamilySpec& fam : fams) {
            for (const int m : cfg.m_grid) {
                const std::uint64_t s =
                    detail::trial_seed(cfg.seed, fam.label, m, static_cast<std::uint64_t>(rep + 2));
                const auto t0 = std::chrono::steady_clock::now();
                const SketchOutput sk = apply_sketch(data, fam.instantiate(m, s));
                const auto t1 = std::chrono::steady_clock::now();
                const Vector beta = sketch_and_solve(sk);
                const auto t2 = std::chrono::steady_clock::now();
                sink += beta.sum();
                if (rep >= 0) {
                    build_times[cell].push_back(std::chrono::duration<double>(t1 - t0).count());
                    total_times[cell].push_back(std::chrono::duration<double>(t2 - t0).count());
                }
                ++cell;
            }
        }
    }

    std::vector<BenchRow> rows;
    std::size_t cell = 0;
    for (const FamilySpec& fam : fams) {
        for (const int m : cfg.m_grid) {
            std::vector<double>& builds = build_times[cell];
            std::vector<double>& totals = total_times[cell];
            ++cell;
            std::sort(builds.begin(), builds.end());
            std::sort(totals.begin(), totals.end());
            BenchRow row;
            row.family = fam.label;
            row.m = m;
            row.median_build_seconds = builds[builds.size() / 2];
            row.median_seconds = totals[totals.size() / 2];
            rows.push_back(std::move(row));
        }
    }
    if (sink == 42.0) rows.clear();  // keep the solve from being optimized out
    return rows;
}

// =============================================================================
/// Delocalization diagnostics: the quantities the per-family conditions look
/// at, plus advisory flags with documented heuristic thresholds. A flag means
/// "this family's normality conditions look doubtful on this data", nothing
/// more.
struct DelocalizationReport {
    double max_leverage = 0.0;       // max_i ||U_{i:}||
    double u4_mass = 0.0;            // ||vec(U)||_4^4
    double max_norm_residual = 0.0;  // max_i |eps_i| / ||eps||
    double max_norm_fitted = 0.0;    // max_i |(X beta)_i| / ||X beta||
    bool has_response = false;
    bool leverage_flag = false;      // affects SRHT / subsampling conditions
    bool u4_flag = false;            // affects the SSE condition
    bool residual_flag = false;
    bool fitted_flag = false;
};

inline DelocalizationReport delocalization_report(const DataMatrix& data) {
    validate(data);
    const ThinSvd svd = thin_svd(data);
    DelocalizationReport rep;
    rep.max_leverage = svd.U.rowwise().norm().maxCoeff();
    rep.u4_mass = svd.U.array().pow(4).sum();
    // Haar-like U has max leverage ~ sqrt(p/n) and u4 mass ~ 3p/n; flags fire
    // an order of magnitude above those baselines.
    rep.leverage_flag = rep.max_leverage > 0.3;
    rep.u4_flag = rep.u4_mass > 10.0 * static_cast<double>(data.p()) / static_cast<double>(data.n());
    if (data.y) {
        rep.has_response = true;
        const Vector beta = solve_ls(data);
        const Vector fitted = data.X * beta;
        const Vector resid = *data.y - fitted;
        if (resid.norm() > 0) rep.max_norm_residual = resid.cwiseAbs().maxCoeff() / resid.norm();
        if (fitted.norm() > 0) rep.max_norm_fitted = fitted.cwiseAbs().maxCoeff() / fitted.norm();
        rep.residual_flag = rep.max_norm_residual > 0.3;
        rep.fitted_flag = rep.max_norm_fitted > 0.3;
    }
    return rep;
}

}  // namespace sketchstat

#endif  // SKETCHSTAT_HARNESS_HPP
