#pragma once

// Config-driven counting experiments: domain + coefficients + m + lambda grid
// in, bound curve and invariant report out.
//
// Config (JSON):
//   {
//     "domain": {"shape": "interval", "lo": 0, "hi": 1}
//             | {"shape": "box", "lo": [..], "hi": [..]}
//             | {"shape": "disk", "center": [..], "radius": r}
//             | {"shape": "mask", "path": "file"},
//     "h": 0.0025,
//     "m": 1,
//     "coefficients": {"a": .., "b": .., "q": .., "R0": .., "extension": ..},
//     "lambda_grid": [..] | {"start": a, "stop": b, "count": n},
//     "k": 200,
//     "trust_fraction": 0.1,
//     "cphi": "free_field" | 1.25 | {"source": "scattering", ...},
//     "output": {"prefix": "run"}
//   }

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "kreinlab/assembly.hpp"
#include "kreinlab/bounds.hpp"
#include "kreinlab/coefficients.hpp"
#include "kreinlab/eigensolve.hpp"
#include "kreinlab/errors.hpp"
#include "kreinlab/grid_domain.hpp"
#include "kreinlab/scattering.hpp"

namespace kreinlab {

enum class CphiSource { FreeField, Explicit, Scattering };

struct ScatteringCphiConfig {
    Point support_lo{0.0, 0.0, 0.0};
    double support_side = 1.0;  // interval length (n = 1) or cube side (n = 3)
    int panels = 8;
    int cells = 12;
    int directions = 12;
    int moduli = 12;
    double k_min = 0.5;
    double k_max = 40.0;
};

struct ExperimentConfig {
    ShapeSpec shape = IntervalShape{};
    double h = 0.01;
    int m = 1;
    nlohmann::json coefficients = nlohmann::json::object();
    std::vector<double> lambda_grid;
    std::optional<Eigen::Index> k;
    double trust_fraction = 0.1;
    CphiSource cphi_source = CphiSource::FreeField;
    double cphi_value = 0.0;
    ScatteringCphiConfig scattering;
    std::string prefix = "run";
    /// Directory relative paths in the config resolve against.
    std::filesystem::path base_dir = ".";
};

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

template <class T>
T require(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("config is missing '") + key + "'");
    return get_or<T>(j, key, T{});
}

inline ShapeSpec parse_shape(const nlohmann::json& j, const std::filesystem::path& base) {
    const auto shape = require<std::string>(j, "shape");
    if (shape == "interval") return IntervalShape{require<double>(j, "lo"), require<double>(j, "hi")};
    if (shape == "box") {
        return BoxShape{require<std::vector<double>>(j, "lo"), require<std::vector<double>>(j, "hi")};
    }
    if (shape == "disk") {
        return DiskShape{require<std::vector<double>>(j, "center"), require<double>(j, "radius")};
    }
    if (shape == "mask") {
        std::filesystem::path p = require<std::string>(j, "path");
        if (p.is_relative()) p = base / p;
        return MaskFileShape{p};
    }
    throw ConfigError("unknown domain shape '" + shape + "'");
}

inline std::vector<double> parse_lambda_grid(const nlohmann::json& j) {
    std::vector<double> grid;
    if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number()) throw ConfigError("lambda_grid entries must be numbers");
            grid.push_back(v.get<double>());
        }
    } else if (j.is_object()) {
        const double a = require<double>(j, "start");
        const double b = require<double>(j, "stop");
        const int n = require<int>(j, "count");
        if (n < 1) throw ConfigError("lambda_grid count must be >= 1");
        for (int i = 0; i < n; ++i) grid.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    } else {
        throw ConfigError("lambda_grid must be an array or {start, stop, count}");
    }
    if (grid.empty()) throw ConfigError("lambda_grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0)) throw ConfigError("lambda_grid must be positive");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError("lambda_grid must be strictly increasing");
    }
    return grid;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                                const std::filesystem::path& base_dir = ".") {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    c.base_dir = base_dir;
    c.shape = detail::parse_shape(detail::require<nlohmann::json>(j, "domain"), base_dir);
    c.h = detail::require<double>(j, "h");
    if (!(c.h > 0.0)) throw ConfigError("h must be positive");
    c.m = detail::get_or<int>(j, "m", 1);
    if (c.m < 1) throw ConfigError("m must be >= 1");
    if (j.contains("coefficients")) {
        c.coefficients = j.at("coefficients");
        if (!c.coefficients.is_object()) throw ConfigError("coefficients must be an object");
    }
    if (j.contains("lambda_grid")) c.lambda_grid = detail::parse_lambda_grid(j.at("lambda_grid"));
    if (j.contains("k")) {
        const auto k = detail::get_or<long>(j, "k", 0);
        if (k < 1) throw ConfigError("k must be >= 1");
        c.k = static_cast<Eigen::Index>(k);
    }
    c.trust_fraction = detail::get_or<double>(j, "trust_fraction", 0.1);
    if (!(c.trust_fraction > 0.0 && c.trust_fraction <= 1.0)) throw ConfigError("trust_fraction must lie in (0, 1]");
    if (j.contains("cphi")) {
        const auto& v = j.at("cphi");
        if (v.is_number()) {
            c.cphi_source = CphiSource::Explicit;
            c.cphi_value = v.get<double>();
            if (!(c.cphi_value > 0.0)) throw ConfigError("explicit cphi must be positive");
        } else if (v.is_string()) {
            if (v.get<std::string>() != "free_field") throw ConfigError("cphi must be 'free_field', a number or an object");
            c.cphi_source = CphiSource::FreeField;
        } else if (v.is_object()) {
            if (detail::get_or<std::string>(v, "source", "scattering") != "scattering") {
                throw ConfigError("cphi object must have source 'scattering'");
            }
            c.cphi_source = CphiSource::Scattering;
            auto& s = c.scattering;
            const auto lo = detail::require<std::vector<double>>(v, "support_lo");
            for (std::size_t a = 0; a < lo.size() && a < 3; ++a) s.support_lo[a] = lo[a];
            s.support_side = detail::require<double>(v, "support_side");
            s.panels = detail::get_or<int>(v, "panels", s.panels);
            s.cells = detail::get_or<int>(v, "cells", s.cells);
            s.directions = detail::get_or<int>(v, "directions", s.directions);
            s.moduli = detail::get_or<int>(v, "moduli", s.moduli);
            s.k_min = detail::get_or<double>(v, "k_min", s.k_min);
            s.k_max = detail::get_or<double>(v, "k_max", s.k_max);
        } else {
            throw ConfigError("cphi must be 'free_field', a number or an object");
        }
    }
    if (j.contains("output")) c.prefix = detail::get_or<std::string>(j.at("output"), "prefix", c.prefix);
    return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_experiment_config(j, path.parent_path().empty() ? "." : path.parent_path());
}

/// Domain, sampled coefficients and the operator-independent metadata.
struct ExperimentSetup {
    std::shared_ptr<const GridDomain> domain;
    FieldSpec spec;
    std::shared_ptr<const CoefficientField> coeffs;
    double trust = 0.0;
};

inline ExperimentSetup setup_experiment(const ExperimentConfig& cfg) {
    ExperimentSetup s;
    try {
        s.domain = std::make_shared<const GridDomain>(build_domain(cfg.shape, cfg.h));
    } catch (const Error& e) {
        throw ConfigError(std::string("domain: ") + e.what());
    }
    s.spec = FieldSpec::from_json(cfg.coefficients, s.domain->dim());
    s.coeffs = std::make_shared<const CoefficientField>(sample_coefficients(*s.domain, s.spec, cfg.m));
    s.trust = trust_cutoff(*s.domain, *s.coeffs, cfg.m, cfg.trust_fraction);
    return s;
}

struct CphiValue {
    double value = 0.0;
    std::string source;
    std::optional<CphiReport> report;
};

/// C_phi per the config. The free-field value |Omega| is only used when the
/// coefficients are free.
inline CphiValue resolve_cphi(const ExperimentConfig& cfg, const ExperimentSetup& s, int threads = 1) {
    CphiValue out;
    switch (cfg.cphi_source) {
        case CphiSource::Explicit:
            out.value = cfg.cphi_value;
            out.source = "explicit";
            return out;
        case CphiSource::FreeField:
            if (!s.coeffs->is_free()) {
                throw ConfigError(
                    "cphi: the free-field value |Omega| applies only to a = I, b = 0, q = 0; "
                    "give an explicit value or a scattering estimate");
            }
            out.value = s.domain->volume();
            out.source = "free_field";
            return out;
        case CphiSource::Scattering: {
            const int n = s.domain->dim();
            if (n != 1 && n != 3) throw ConfigError("cphi: scattering estimate supports n = 1 and n = 3 only");
            if (cfg.coefficients.contains("a") || cfg.coefficients.contains("b")) {
                throw ConfigError("cphi: scattering estimate supports a = I, b = 0 only");
            }
            const auto& sc = cfg.scattering;
            const ScatteringProblem p =
                n == 1 ? make_scattering_problem_1d(s.spec.q, sc.support_lo[0], sc.support_lo[0] + sc.support_side,
                                                    sc.panels)
                       : make_scattering_problem_3d(s.spec.q, sc.support_lo, sc.support_side, sc.cells);
            CphiReport r = cphi_estimate(p, *s.domain, xi_grid(n, sc.directions, sc.moduli, sc.k_min, sc.k_max),
                                         threads);
            out.value = r.cphi;
            out.source = "scattering";
            out.report = std::move(r);
            return out;
        }
    }
    throw ConfigError("cphi: unknown source");
}

struct BoundRow {
    double lambda = 0.0;
    std::size_t n_k = 0;
    std::size_t n_f = 0;
    double krein_bound = 0.0;
    double friedrichs_bound = 0.0;
    double weyl_leading = 0.0;
    bool trusted = true;
};

struct InvariantCheck {
    std::string name;
    bool pass = true;
    std::string detail;
};

struct BoundReport {
    std::vector<BoundRow> rows;
    std::vector<InvariantCheck> checks;
    double h = 0.0;
    std::size_t n = 0;
    int dim = 1;
    int m = 1;
    double volume = 0.0;
    double eps_a = 0.0;
    double cphi = 0.0;
    std::string cphi_source;
    double trust_cutoff = 0.0;
    double assembly_seconds = 0.0;
    double solve_seconds = 0.0;
    Spectrum friedrichs;
    Spectrum krein;

    bool pass() const {
        for (const auto& c : checks) {
            if (!c.pass) return false;
        }
        return true;
    }
};

struct ExperimentOptions {
    bool allow_untrusted = false;
    int threads = 1;
    PencilNumerator numerator = PencilNumerator::BoundaryLayer;
    EigenOptions eigen;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Eigenvalue count: the config's k, else all on the dense path, else enough
/// to reach the largest requested lambda by a Weyl-type estimate.
inline Eigen::Index choose_k(const ExperimentConfig& cfg, const GridDomain& d, const EigenOptions& opt) {
    const auto n = static_cast<Eigen::Index>(d.size());
    if (cfg.k) return std::min(*cfg.k, n);
    if (n <= opt.dense_threshold) return all_eigenvalues;
    const double lam = cfg.lambda_grid.empty() ? 0.0 : cfg.lambda_grid.back();
    const double est = weyl_leading_free(std::max(lam, 1.0), d, cfg.m) * 2.0 + 20.0;
    return std::min<Eigen::Index>(n, static_cast<Eigen::Index>(est));
}

}  // namespace detail

/// Assembles F_m and the buckling pencil, solves both, and evaluates
/// counting functions, bound curves and invariants over the lambda grid.
inline BoundReport run_counting_experiment(const ExperimentConfig& cfg, const ExperimentOptions& opt = {}) {
    if (cfg.lambda_grid.empty()) throw ConfigError("lambda_grid is required for a counting experiment");
    const ExperimentSetup s = setup_experiment(cfg);
    const CphiValue cphi = resolve_cphi(cfg, s, opt.threads);

    BoundReport r;
    r.h = cfg.h;
    r.n = s.domain->size();
    r.dim = s.domain->dim();
    r.m = cfg.m;
    r.volume = s.domain->volume();
    r.eps_a = s.coeffs->eps_a();
    r.cphi = cphi.value;
    r.cphi_source = cphi.source;
    r.trust_cutoff = s.trust;

    auto t0 = std::chrono::steady_clock::now();
    const HermitianOperator f = assemble_friedrichs(*s.domain, s.coeffs, cfg.m);
    const KreinPencil pencil = assemble_krein_pencil(*s.domain, s.coeffs, cfg.m, opt.numerator);
    r.assembly_seconds = detail::seconds_since(t0);

    const Eigen::Index k = detail::choose_k(cfg, *s.domain, opt.eigen);
    t0 = std::chrono::steady_clock::now();
    if (opt.threads > 1) {
        std::exception_ptr err;
        std::thread worker([&] {
            try {
                r.krein = pencil_eigs(pencil.numerator, pencil.denominator, k, opt.eigen);
            } catch (...) {
                err = std::current_exception();
            }
        });
        try {
            r.friedrichs = hermitian_eigs(f, k, opt.eigen);
        } catch (...) {
            worker.join();
            throw;
        }
        worker.join();
        if (err) std::rethrow_exception(err);
    } else {
        r.friedrichs = hermitian_eigs(f, k, opt.eigen);
        r.krein = pencil_eigs(pencil.numerator, pencil.denominator, k, opt.eigen);
    }
    r.solve_seconds = detail::seconds_since(t0);
    r.friedrichs.trust_cutoff = s.trust;
    r.krein.trust_cutoff = s.trust;

    const BoundConstants kb = bound_constants(Extension_kind::Krein, r.dim, cfg.m, cphi.value);
    const BoundConstants fb = bound_constants(Extension_kind::Friedrichs, r.dim, cfg.m, cphi.value);
    for (double lam : cfg.lambda_grid) {
        const CountResult nk = counting(r.krein, lam);
        const CountResult nf = counting(r.friedrichs, lam);
        BoundRow row;
        row.lambda = lam;
        row.n_k = nk.count;
        row.n_f = nf.count;
        row.krein_bound = kb(lam);
        row.friedrichs_bound = fb(lam);
        row.weyl_leading = weyl_leading(lam, *s.domain, *s.coeffs, cfg.m).value;
        row.trusted = nk.trusted && nf.trusted && nk.complete && nf.complete;
        if (!row.trusted && !opt.allow_untrusted) continue;
        r.rows.push_back(row);
    }

    auto add = [&](std::string name, bool pass, std::string detail) {
        r.checks.push_back(InvariantCheck{std::move(name), pass, std::move(detail)});
    };
    std::size_t trusted_rows = 0;
    std::string bad_order;
    std::string bad_krein;
    std::string bad_friedrichs;
    char buf[160];
    for (const auto& row : r.rows) {
        if (!row.trusted) continue;
        ++trusted_rows;
        if (row.n_k > row.n_f && bad_order.empty()) {
            std::snprintf(buf, sizeof buf, "lambda = %.6g: N_K = %zu > N_F = %zu", row.lambda, row.n_k, row.n_f);
            bad_order = buf;
        }
        if (static_cast<double>(row.n_k) > row.krein_bound && bad_krein.empty()) {
            std::snprintf(buf, sizeof buf, "lambda = %.6g: N_K = %zu > %.6g", row.lambda, row.n_k, row.krein_bound);
            bad_krein = buf;
        }
        if (static_cast<double>(row.n_f) > row.friedrichs_bound && bad_friedrichs.empty()) {
            std::snprintf(buf, sizeof buf, "lambda = %.6g: N_F = %zu > %.6g", row.lambda, row.n_f,
                          row.friedrichs_bound);
            bad_friedrichs = buf;
        }
    }
    add("trusted_rows_nonempty", trusted_rows > 0,
        trusted_rows > 0 ? std::to_string(trusted_rows) + " trusted rows" : "no lambda below the trust cutoff");
    add("counting_order", bad_order.empty(), bad_order.empty() ? "N_K <= N_F at every trusted lambda" : bad_order);
    add("krein_bound", bad_krein.empty(), bad_krein.empty() ? "N_K <= krein_bound at every trusted lambda" : bad_krein);
    add("friedrichs_bound", bad_friedrichs.empty(),
        bad_friedrichs.empty() ? "N_F <= friedrichs_bound at every trusted lambda" : bad_friedrichs);

    std::string bad_eig;
    const std::size_t common = std::min(r.krein.values.size(), r.friedrichs.values.size());
    for (std::size_t j = 0; j < common && bad_eig.empty(); ++j) {
        if (r.krein.values[j] < r.friedrichs.values[j]) {
            std::snprintf(buf, sizeof buf, "j = %zu: pencil %.17g < Friedrichs %.17g", j + 1, r.krein.values[j],
                          r.friedrichs.values[j]);
            bad_eig = buf;
        }
    }
    add("eigenvalue_ordering", bad_eig.empty(),
        bad_eig.empty() ? "lambda_j(pencil) >= lambda_j(F_m) for " + std::to_string(common) + " pairs" : bad_eig);
    return r;
}

// ---------------------------------------------------------------------------
// Output

/// lambda,N_K,N_F,krein_bound,friedrichs_bound,weyl_leading,trusted
inline void write_bound_csv(std::ostream& out, const BoundReport& r) {
    out << "lambda,N_K,N_F,krein_bound,friedrichs_bound,weyl_leading,trusted\n";
    char buf[256];
    for (const auto& row : r.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%zu,%zu,%.17g,%.17g,%.17g,%d\n", row.lambda, row.n_k, row.n_f,
                      row.krein_bound, row.friedrichs_bound, row.weyl_leading, row.trusted ? 1 : 0);
        out << buf;
    }
}

inline nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json j;
    j["pass"] = r.pass();
    j["metadata"] = {{"h", r.h},
                     {"N", r.n},
                     {"n", r.dim},
                     {"m", r.m},
                     {"volume", r.volume},
                     {"eps_a", r.eps_a},
                     {"cphi", r.cphi},
                     {"cphi_source", r.cphi_source},
                     {"trust_cutoff", r.trust_cutoff},
                     {"eigenvalues_friedrichs", r.friedrichs.values.size()},
                     {"eigenvalues_pencil", r.krein.values.size()},
                     {"assembly_seconds", r.assembly_seconds},
                     {"solve_seconds", r.solve_seconds}};
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    j["checks"] = checks;
    nlohmann::json ratio = nlohmann::json::array();
    for (const auto& row : r.rows) {
        if (row.trusted) ratio.push_back({{"lambda", row.lambda}, {"N_F_over_weyl", row.n_f / row.weyl_leading}});
    }
    j["weyl_ratio"] = ratio;
    return j;
}

}  // namespace kreinlab
