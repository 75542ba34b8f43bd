// kreinlab: config-driven runner for counting bounds, spectra and
// distorted plane waves.
//
// Exit codes: 0 pass, 2 bound or check violation, 3 solver failure,
// 4 config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kreinlab/kreinlab.hpp"

namespace fs = std::filesystem;
using namespace kreinlab;

namespace {

constexpr int exit_pass = 0;
constexpr int exit_violation = 2;
constexpr int exit_solver = 3;
constexpr int exit_config = 4;

struct Common {
    std::string config;
    std::string out = ".";
    int threads = 1;
    bool allow_untrusted = false;
};

std::ofstream open_output(const Common& c, const std::string& name) {
    fs::create_directories(c.out);
    const fs::path p = fs::path(c.out) / name;
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write " + p.string());
    std::cout << "wrote " << p.string() << '\n';
    return f;
}

void write_json(const Common& c, const std::string& name, const nlohmann::json& j) {
    auto f = open_output(c, name);
    f << j.dump(2) << '\n';
}

nlohmann::json to_json(const MinimizationResult& r) {
    return {{"alpha_star", r.alpha_star},
            {"value", r.value},
            {"r_alpha_2m", r.r_alpha_2m},
            {"method", r.method == MinimizationMethod::ClosedForm ? "closed_form" : "oracle"}};
}

int cmd_bounds(const Common& c) {
    const ExperimentConfig cfg = load_experiment_config(c.config);
    if (cfg.lambda_grid.empty()) throw ConfigError("lambda_grid is required");
    const ExperimentSetup s = setup_experiment(cfg);
    const CphiValue cphi = resolve_cphi(cfg, s, c.threads);
    const int n = s.domain->dim();
    const BoundConstants kb = bound_constants(Extension_kind::Krein, n, cfg.m, cphi.value);
    const BoundConstants fb = bound_constants(Extension_kind::Friedrichs, n, cfg.m, cphi.value);

    auto csv = open_output(c, cfg.prefix + "_bounds.csv");
    csv << "lambda,krein_bound,friedrichs_bound,weyl_leading\n";
    char buf[160];
    for (double lam : cfg.lambda_grid) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", lam, kb(lam), fb(lam),
                      weyl_leading(lam, *s.domain, *s.coeffs, cfg.m).value);
        csv << buf;
    }
    write_json(c, cfg.prefix + "_constants.json",
               {{"n", n},
                {"m", cfg.m},
                {"v_n", kb.v_n},
                {"cphi", cphi.value},
                {"cphi_source", cphi.source},
                {"volume", s.domain->volume()},
                {"krein_shape_factor", kb.shape},
                {"friedrichs_shape_factor", fb.shape},
                {"krein_prefactor", kb.prefactor},
                {"friedrichs_prefactor", fb.prefactor}});
    return exit_pass;
}

int cmd_spectrum(const Common& c, bool pencil) {
    const ExperimentConfig cfg = load_experiment_config(c.config);
    const ExperimentSetup s = setup_experiment(cfg);
    const EigenOptions opt;
    const Eigen::Index k = cfg.k ? *cfg.k
                                 : (static_cast<Eigen::Index>(s.domain->size()) <= opt.dense_threshold ? all_eigenvalues
                                                                                                        : 100);
    Spectrum sp;
    if (pencil) {
        const KreinPencil p = assemble_krein_pencil(*s.domain, s.coeffs, cfg.m);
        sp = pencil_eigs(p.numerator, p.denominator, k, opt);
    } else {
        sp = hermitian_eigs(assemble_friedrichs(*s.domain, s.coeffs, cfg.m), k, opt);
    }
    sp.trust_cutoff = s.trust;
    auto csv = open_output(c, cfg.prefix + (pencil ? "_buckling.csv" : "_spectrum.csv"));
    write_spectrum_csv(csv, sp);
    std::printf("N = %zu, %zu eigenvalues, trust cutoff %.6g\n", s.domain->size(), sp.values.size(), s.trust);
    return exit_pass;
}

int cmd_counting(const Common& c) {
    const ExperimentConfig cfg = load_experiment_config(c.config);
    ExperimentOptions opt;
    opt.allow_untrusted = c.allow_untrusted;
    opt.threads = c.threads;
    const BoundReport r = run_counting_experiment(cfg, opt);
    {
        auto csv = open_output(c, cfg.prefix + "_bound_curve.csv");
        write_bound_csv(csv, r);
    }
    write_json(c, cfg.prefix + "_report.json", to_json(r));
    for (const auto& ch : r.checks) {
        std::printf("%s %s: %s\n", ch.pass ? "PASS" : "FAIL", ch.name.c_str(), ch.detail.c_str());
    }
    return r.pass() ? exit_pass : exit_violation;
}

int cmd_minimize(int n, int m) {
    const MinimizationResult cf = krein_minimizer_closed_form(n, m);
    const MinimizationResult orc = krein_minimizer_oracle(n, m);
    const FriedrichsMinimization fr = friedrichs_minimization(n, m);
    const double krein_gap = std::max(std::abs(orc.value - cf.value) / cf.value,
                                      std::abs(orc.alpha_star - cf.alpha_star) / cf.alpha_star);
    const double fried_gap = std::max(std::abs(fr.oracle.value - fr.closed_form.value) / fr.closed_form.value,
                                      std::abs(fr.oracle.alpha_star - fr.closed_form.alpha_star) /
                                          fr.closed_form.alpha_star);
    const bool agree = krein_gap <= 1e-6 && fried_gap <= 1e-6 && fr.crosscheck_error <= 1e-8;
    const nlohmann::json j = {{"n", n},
                              {"m", m},
                              {"krein", {{"closed_form", to_json(cf)}, {"oracle", to_json(orc)}, {"relative_gap", krein_gap}}},
                              {"friedrichs",
                               {{"closed_form", to_json(fr.closed_form)},
                                {"oracle", to_json(fr.oracle)},
                                {"relative_gap", fried_gap},
                                {"crosscheck_error", fr.crosscheck_error}}},
                              {"agree", agree}};
    std::cout << j.dump(2) << '\n';
    return agree ? exit_pass : exit_violation;
}

int cmd_lswaves(const Common& c) {
    std::ifstream in(c.config);
    if (!in) throw ConfigError("cannot open config " + c.config);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    const fs::path base = fs::path(c.config).parent_path();
    const ExperimentConfig cfg = parse_experiment_config(j, base.empty() ? "." : base);
    if (cfg.cphi_source != CphiSource::Scattering) throw ConfigError("lswaves needs a scattering 'cphi' object");
    const ExperimentSetup s = setup_experiment(cfg);
    const int n = s.domain->dim();
    if (n != 1 && n != 3) throw ConfigError("lswaves supports n = 1 and n = 3 only");
    const auto& sc = cfg.scattering;
    const Branch branch = j.value("branch", std::string("+")) == "-" ? Branch::Minus : Branch::Plus;
    const ScatteringProblem p =
        n == 1 ? make_scattering_problem_1d(s.spec.q, sc.support_lo[0], sc.support_lo[0] + sc.support_side, sc.panels,
                                            branch)
               : make_scattering_problem_3d(s.spec.q, sc.support_lo, sc.support_side, sc.cells, branch);

    if (j.contains("waves")) {
        auto csv = open_output(c, cfg.prefix + "_waves.csv");
        bool header = true;
        for (const auto& v : j.at("waves")) {
            const auto xs = v.get<std::vector<double>>();
            if (static_cast<int>(xs.size()) != n) throw ConfigError("each wave xi needs n entries");
            Point xi{0.0, 0.0, 0.0};
            for (int a = 0; a < n; ++a) xi[a] = xs[static_cast<std::size_t>(a)];
            write_wave_csv(csv, solve_lippmann_schwinger(p, xi, *s.domain), *s.domain, header);
            header = false;
        }
    }
    const CphiReport r =
        cphi_estimate(p, *s.domain, xi_grid(n, sc.directions, sc.moduli, sc.k_min, sc.k_max), c.threads);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    write_json(c, cfg.prefix + "_cphi.json", to_json(r));
    std::printf("C_phi estimate %.10g (free-field value %.10g, %zu xi)\n", r.cphi, r.free_field_value, r.grid_size);
    return exit_pass;
}

int cmd_verify(const std::string& level, bool mutate) {
    VerifyOptions opt;
    opt.level = level == "full" ? VerifyLevel::Full : VerifyLevel::Fast;
    opt.mutate_numerator = mutate;
    const auto results = run_verify_suite(opt);
    int failed = 0;
    for (const auto& r : results) {
        std::printf("%s %s: observed %s, expected %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.observed.c_str(), r.expected.c_str());
        if (!r.pass) ++failed;
    }
    std::printf("%zu checks, %d failed\n", results.size(), failed);
    return failed == 0 ? exit_pass : exit_violation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Eigenvalue-counting bounds for Krein and Friedrichs extensions"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", common.config, "experiment config (JSON)");
        if (needs_config) opt->required()->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--allow-untrusted", common.allow_untrusted, "keep rows above the trust cutoff");
    };

    auto* bounds = app.add_subcommand("bounds", "bound constants and curves over the lambda grid");
    auto* spectrum = app.add_subcommand("spectrum", "Friedrichs spectrum");
    auto* buckling = app.add_subcommand("buckling", "buckling pencil spectrum");
    auto* counting_cmd = app.add_subcommand("counting", "counting functions against both bounds");
    auto* lswaves = app.add_subcommand("lswaves", "distorted plane waves and the C_phi estimate");
    for (auto* s : {bounds, spectrum, buckling, counting_cmd, lswaves}) add_common(s, true);

    auto* minimize = app.add_subcommand("minimize", "closed form and oracle alpha-minimizations");
    int n = 2;
    int m = 1;
    minimize->add_option("--n", n, "space dimension")->check(CLI::PositiveNumber);
    minimize->add_option("--m", m, "order parameter")->check(CLI::PositiveNumber);
    add_common(minimize, false);

    auto* verify = app.add_subcommand("verify", "invariant suite");
    std::string level = "fast";
    bool mutate = false;
    verify->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
    verify->add_flag("--mutate-numerator", mutate, "debug: use F_m^2 as the pencil numerator");
    add_common(verify, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (*bounds) return cmd_bounds(common);
        if (*spectrum) return cmd_spectrum(common, false);
        if (*buckling) return cmd_spectrum(common, true);
        if (*counting_cmd) return cmd_counting(common);
        if (*minimize) return cmd_minimize(n, m);
        if (*lswaves) return cmd_lswaves(common);
        if (*verify) return cmd_verify(level, mutate);
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return exit_solver;
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_config;
}
