// Acceptance suite: one PASS/FAIL line per criterion.
//
//   kreinlab_acceptance            run every criterion
//   kreinlab_acceptance 4 7        run the listed criteria
//
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "kreinlab/kreinlab.hpp"

using namespace kreinlab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::shared_ptr<const CoefficientField> sampled(const GridDomain& d, const FieldSpec& s, int m) {
    return std::make_shared<const CoefficientField>(sample_coefficients(d, s, m));
}

const double pi2 = std::numbers::pi * std::numbers::pi;

// 1 ------------------------------------------------------------------------
Outcome krein_minimizer() {
    double worst = 0.0;
    double slowest = 0.0;
    for (int n = 1; n <= 4; ++n) {
        for (int m = 1; m <= 3; ++m) {
            const auto t0 = Clock::now();
            const auto orc = krein_minimizer_oracle(n, m);
            slowest = std::max(slowest, seconds(t0));
            const double a = 2.0 * m * (n + 4.0 * m) / ((n + 2.0 * m) * (n + 2.0 * m));
            const double f = std::pow((n + 4.0 * m) / (n + 2.0 * m), n / (2.0 * m));
            worst = std::max({worst, std::abs(orc.alpha_star - a) / a, std::abs(orc.value - f) / f});
        }
    }
    return {worst <= 1e-6 && slowest < 1.0,
            "max relative deviation " + fmt("%.3g", worst) + " (<= 1e-6), slowest pair " + fmt("%.3g", slowest) +
                " s (< 1 s)"};
}

// 2 ------------------------------------------------------------------------
Outcome friedrichs_min() {
    double worst = 0.0;
    double cross = 0.0;
    for (int n = 1; n <= 4; ++n) {
        for (int m = 1; m <= 3; ++m) {
            const auto r = friedrichs_minimization(n, m);
            const double vn = unit_ball_volume(n);
            const double target = vn * std::pow(1.0 + 2.0 * m / n, n / (2.0 * m));
            worst = std::max(worst, std::abs(vn * r.oracle.value - target) / target);
            cross = std::max(cross, r.crosscheck_error);
        }
    }
    return {worst <= 1e-6 && cross <= 1e-8, "oracle deviation " + fmt("%.3g", worst) +
                                                  " (<= 1e-6), closed form vs quadrature at 3 alphas " +
                                                  fmt("%.3g", cross) + " (<= 1e-8)"};
}

// 3 ------------------------------------------------------------------------
Outcome chain() {
    int tested = 0;
    int broken = 0;
    for (int n = 1; n <= 12; ++n) {
        for (int m = 1; m <= 4; ++m) {
            ++tested;
            if (!constant_chain_check(n, m).ok()) ++broken;
        }
    }
    for (int n : {50, 100, 1000}) {
        ++tested;
        if (!constant_chain_check(n, 1).ok()) ++broken;
    }
    return {broken == 0, std::to_string(tested) + " (n,m) pairs, " + std::to_string(broken) + " violations"};
}

// 4 ------------------------------------------------------------------------
Outcome dirichlet() {
    const auto t0 = Clock::now();
    const GridDomain d1 = build_domain(IntervalShape{0.0, 1.0}, 1.0 / 2000);
    const Spectrum s1 = hermitian_eigs(assemble_friedrichs(d1, sampled(d1, FieldSpec::free(1), 1), 1), 5);
    double e1 = 0.0;
    for (int j = 1; j <= 5; ++j) e1 = std::max(e1, std::abs(s1.values[j - 1] - pi2 * j * j) / (pi2 * j * j));

    const GridDomain d2 = build_domain(BoxShape{{0.0, 0.0}, {1.0, 1.0}}, 1.0 / 48);
    const Spectrum s2 = hermitian_eigs(assemble_friedrichs(d2, sampled(d2, FieldSpec::free(2), 1), 1), 5);
    const double exact2[5] = {2 * pi2, 5 * pi2, 5 * pi2, 8 * pi2, 10 * pi2};
    double e2 = 0.0;
    for (int j = 0; j < 5; ++j) e2 = std::max(e2, std::abs(s2.values[j] - exact2[j]) / exact2[j]);
    const double t = seconds(t0);
    return {e1 <= 0.01 && e2 <= 0.02 && t < 120.0, "interval max error " + fmt("%.3g", e1) + " (<= 1%), square " +
                                                      fmt("%.3g", e2) + " (<= 2%), runtime " + fmt("%.3g", t) +
                                                      " s (< 120 s)"};
}

// 5 ------------------------------------------------------------------------
Outcome buckling() {
    const auto roots = clamped_rod_buckling_eigenvalues(2);
    const bool oracle_ok = std::abs(roots[0] - 4.0 * pi2) <= 1e-9 * 4.0 * pi2 && std::abs(roots[1] - 80.76) <= 0.01;
    const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 1.0 / 2000);
    const KreinPencil p = assemble_krein_pencil(d, sampled(d, FieldSpec::free(1), 1), 1);
    const Spectrum s = pencil_eigs(p.numerator, p.denominator, 2);
    const double e0 = std::abs(s.values[0] - roots[0]) / roots[0];
    const double e1 = std::abs(s.values[1] - roots[1]) / roots[1];
    return {oracle_ok && e0 <= 0.01 && e1 <= 0.01,
            std::string("determinant roots ") + fmt("%.8g", roots[0]) + ", " + fmt("%.8g", roots[1]) +
                (oracle_ok ? " confirmed" : " NOT confirmed") + "; pencil " + fmt("%.8g", s.values[0]) + " (" +
                fmt("%.3g", e0) + "), " + fmt("%.8g", s.values[1]) + " (" + fmt("%.3g", e1) + ")"};
}

// 6 ------------------------------------------------------------------------
FieldSpec random_spec(std::mt19937& rng, int dim) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double a0 = 0.5 + u(rng);
    const double b0 = 4.0 * (u(rng) - 0.5);
    const double q0 = 5.0 * u(rng);
    const double w = 1.0 + 3.0 * u(rng);
    FieldSpec s = FieldSpec::free(dim);
    for (int a = 0; a < dim; ++a) {
        s.a_diag[a] = [=](std::span<const double> x) { return a0 + 0.3 * std::sin(w * x[0] + a); };
        s.b[a] = [=](std::span<const double> x) { return b0 * std::cos(w * x[dim - 1 - a]); };
    }
    s.q = [=](std::span<const double> x) { return q0 * (1.0 + std::sin(w * x[0])); };
    s.declared_free = false;
    return s;
}

Outcome ordering() {
    struct Case {
        ShapeSpec shape;
        double h;
        int m;
        int spec;  // 0 free, otherwise random seed
    };
    const std::vector<Case> cases = {
        {IntervalShape{0.0, 1.0}, 1.0 / 2000, 1, 0},
        {IntervalShape{0.0, 1.0}, 1.0 / 400, 2, 0},
        {IntervalShape{0.0, 1.0}, 1.0 / 200, 1, 1},
        {IntervalShape{0.0, 1.0}, 1.0 / 200, 2, 2},
        {BoxShape{{0.0, 0.0}, {1.0, 1.0}}, 1.0 / 48, 1, 0},
        {BoxShape{{0.0, 0.0}, {1.0, 1.0}}, 1.0 / 16, 2, 0},
        {DiskShape{{0.0, 0.0}, 1.0}, 0.1, 1, 3},
        {DiskShape{{0.0, 0.0}, 1.0}, 0.15, 2, 4},
        {BoxShape{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}, 1.0 / 10, 1, 0},
        {BoxShape{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}, 1.0 / 8, 2, 5},
    };
    std::size_t pairs = 0;
    std::size_t violations = 0;
    double largest = 0.0;
    for (const auto& c : cases) {
        const GridDomain d = build_domain(c.shape, c.h);
        std::mt19937 rng(static_cast<unsigned>(c.spec));
        const auto coeffs = sampled(d, c.spec == 0 ? FieldSpec::free(d.dim()) : random_spec(rng, d.dim()), c.m);
        const Spectrum f = hermitian_eigs(assemble_friedrichs(d, coeffs, c.m));
        const KreinPencil p = assemble_krein_pencil(d, coeffs, c.m);
        const Spectrum k = pencil_eigs(p.numerator, p.denominator);
        for (std::size_t j = 0; j < f.values.size(); ++j, ++pairs) {
            if (k.values[j] < f.values[j]) {
                ++violations;
                largest = std::max(largest, (f.values[j] - k.values[j]) / f.values[j]);
            }
        }
    }
    return {violations == 0, std::to_string(cases.size()) + " configs, " + std::to_string(pairs) + " pairs, " +
                                 std::to_string(violations) + " violations (zero tolerance), largest relative " +
                                 fmt("%.3g", largest)};
}

// 7 ------------------------------------------------------------------------
Outcome bound_verification() {
    struct Case {
        nlohmann::json domain;
        double h;
        int m;
        nlohmann::json grid;
    };
    const std::vector<Case> cases = {
        {{{"shape", "interval"}, {"lo", 0}, {"hi", 1}}, 1.0 / 400, 1, {{"start", 1}, {"stop", 6000}, {"count", 1200}}},
        {{{"shape", "interval"}, {"lo", 0}, {"hi", 1}}, 1.0 / 400, 2, {{"start", 10}, {"stop", 2e6}, {"count", 1200}}},
        {{{"shape", "box"}, {"lo", {0, 0}}, {"hi", {1, 1}}}, 1.0 / 48, 1, {{"start", 1}, {"stop", 900}, {"count", 900}}},
    };
    std::size_t rows = 0;
    std::size_t violations = 0;
    double worst_k = 0.0;
    double worst_f = 0.0;
    for (const auto& c : cases) {
        const nlohmann::json j = {{"domain", c.domain}, {"h", c.h}, {"m", c.m}, {"lambda_grid", c.grid}};
        const BoundReport r = run_counting_experiment(parse_experiment_config(j));
        for (const auto& row : r.rows) {
            if (!row.trusted) continue;
            ++rows;
            if (static_cast<double>(row.n_k) > row.krein_bound) ++violations;
            if (static_cast<double>(row.n_f) > row.friedrichs_bound) ++violations;
            worst_k = std::max(worst_k, row.n_k / row.krein_bound);
            worst_f = std::max(worst_f, row.n_f / row.friedrichs_bound);
        }
    }
    return {violations == 0 && rows > 0, std::to_string(rows) + " trusted rows, " + std::to_string(violations) +
                                             " violations; max N_K/bound " + fmt("%.3f", worst_k) +
                                             ", max N_F/bound " + fmt("%.3f", worst_f)};
}

// 8 ------------------------------------------------------------------------
Outcome weyl_trend() {
    const GridDomain d = build_domain(BoxShape{{0.0, 0.0}, {1.0, 1.0}}, 1.0 / 48);
    const Spectrum s = hermitian_eigs(assemble_friedrichs(d, sampled(d, FieldSpec::free(2), 1), 1));
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    double at_lo = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double lam = 100.0 + i;
        const double ratio = counting(s, lam).count / weyl_leading_free(lam, d, 1);
        if (ratio < lo) {
            lo = ratio;
            at_lo = lam;
        }
        hi = std::max(hi, ratio);
    }
    return {lo >= 0.8 && hi <= 1.1, "N_F/Weyl over lambda in [100, 300] (step 1) spans [" + fmt("%.3f", lo) + ", " +
                                        fmt("%.3f", hi) + "], minimum at lambda = " + fmt("%g", at_lo) +
                                        "; required [0.8, 1.1]"};
}

// 9 ------------------------------------------------------------------------
Outcome diamagnetic_gauge() {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double margin = std::numeric_limits<double>::infinity();
    double gauge = 0.0;
    for (int t = 0; t < 20; ++t) {
        const bool disk = t % 2 == 0;
        const GridDomain d = disk ? build_domain(DiskShape{{0.0, 0.0}, 0.8 + 0.2 * u(rng)}, 0.2)
                                  : build_domain(BoxShape{{0.0, 0.0}, {1.0, 0.5 + u(rng)}}, 0.125);
        const auto c = sampled(d, random_spec(rng, 2), 2);
        const auto c0 = sampled(d, FieldSpec::free(2), 1);
        const double l = hermitian_eigs(assemble_friedrichs(d, c, 1), 1).values[0];
        const double l0 = hermitian_eigs(assemble_friedrichs(d, c0, 1), 1).values[0];
        margin = std::min(margin, l - c->eps_a() * l0);

        std::map<LatticePoint, double> chi;
        const auto g = std::make_shared<const CoefficientField>(c->gauge_transformed([&](const LatticePoint& p) {
            auto it = chi.find(p);
            if (it == chi.end()) it = chi.emplace(p, 2.0 * std::numbers::pi * u(rng)).first;
            return it->second;
        }));
        for (int m = 1; m <= 2; ++m) {
            const Spectrum f0 = hermitian_eigs(assemble_friedrichs(d, c, m));
            const Spectrum f1 = hermitian_eigs(assemble_friedrichs(d, g, m));
            const KreinPencil p0 = assemble_krein_pencil(d, c, m);
            const KreinPencil p1 = assemble_krein_pencil(d, g, m);
            const Spectrum k0 = pencil_eigs(p0.numerator, p0.denominator);
            const Spectrum k1 = pencil_eigs(p1.numerator, p1.denominator);
            for (std::size_t j = 0; j < f0.values.size(); ++j) {
                gauge = std::max(gauge, std::abs(f0.values[j] - f1.values[j]) / std::abs(f0.values[j]));
                gauge = std::max(gauge, std::abs(k0.values[j] - k1.values[j]) / std::abs(k0.values[j]));
            }
        }
    }
    return {margin >= 0.0 && gauge <= 1e-10, "20 configs: min lambda_min(F) - eps_a lambda_min(F_free) = " +
                                                 fmt("%.4g", margin) + " (>= 0), gauge eigenvalue change " +
                                                 fmt("%.3g", gauge) + " (<= 1e-10)"};
}

// 10 -----------------------------------------------------------------------
Outcome scattering() {
    std::vector<std::string> notes;
    bool ok = true;

    // free case, n = 1 and n = 3
    const GridDomain d1 = build_domain(IntervalShape{0.0, 1.0}, 1.0 / 100);
    const auto zero = [](std::span<const double>) { return 0.0; };
    const CphiReport f1 = cphi_estimate(make_scattering_problem_1d(zero, 0.0, 1.0, 4), d1, xi_grid(1, 2, 20));
    const double free1 = std::abs(f1.cphi - d1.volume()) / d1.volume();
    ok = ok && free1 <= 1e-10;
    notes.push_back("free 1D " + fmt("%.2g", free1));

    // square well against the analytic transmission solution
    const double a = 0.5;
    const double q0 = 3.0;
    const GridDomain dw = build_domain(IntervalShape{-1.0, 1.0}, 1.0 / 200);
    const auto pw = make_scattering_problem_1d(
        [=](std::span<const double> x) { return std::abs(x[0]) <= a ? q0 : 0.0; }, -a, a, 8);
    double well = 0.0;
    for (double k : {1.0, 2.0, 5.0}) {
        const DistortedWave w = solve_lippmann_schwinger(pw, {k, 0.0, 0.0}, dw);
        const SquareWellSolution exact(q0, a, k);
        for (std::size_t i = 0; i < dw.size(); ++i) {
            well = std::max(well, std::abs(w.values_on_domain[static_cast<Eigen::Index>(i)] - exact(dw.coords(i)[0])));
        }
    }
    ok = ok && well <= 1e-6;
    notes.push_back("square well " + fmt("%.2g", well));

    // large-xi ray
    const auto bump = make_scattering_problem_1d(
        [=](std::span<const double> x) {
            return std::abs(x[0]) <= a ? q0 * std::pow(std::cos(std::numbers::pi * x[0] / (2.0 * a)), 2) : 0.0;
        },
        -a, a, 8);
    std::vector<double> dist;
    for (double t : {5.0, 10.0, 20.0}) {
        const DistortedWave w = solve_lippmann_schwinger(bump, {t, 0.0, 0.0}, dw);
        double e = 0.0;
        for (std::size_t i = 0; i < dw.size(); ++i) {
            e += std::norm(w.values_on_domain[static_cast<Eigen::Index>(i)] - std::polar(1.0, t * dw.coords(i)[0]));
        }
        dist.push_back(std::sqrt(e * dw.cell_volume()));
    }
    const bool ray = dist[1] < dist[0] && dist[2] < dist[1];
    ok = ok && ray;
    notes.push_back(std::string("ray ") + (ray ? "monotone" : "NOT monotone"));

    // 3D at 24^3
    const auto t0 = Clock::now();
    const GridDomain d3 = build_domain(BoxShape{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}, 1.0 / 8);
    const auto grid3 = xi_grid(3, 6, 3, 0.5, 6.0);
    const CphiReport free3 =
        cphi_estimate(make_scattering_problem_3d(zero, {0.0, 0.0, 0.0}, 1.0, 24), d3, grid3);
    const CphiReport born3 = cphi_estimate(
        make_scattering_problem_3d([](std::span<const double>) { return 0.01; }, {0.0, 0.0, 0.0}, 1.0, 24), d3,
        grid3);
    const double t3 = seconds(t0);
    const double e_free3 = std::abs(free3.cphi - d3.volume()) / d3.volume();
    const double e_born3 = std::abs(born3.cphi - d3.volume()) / d3.volume();
    ok = ok && e_free3 <= 1e-10 && e_born3 <= 0.01 && t3 < 300.0 && born3.warnings.empty();
    notes.push_back("3D 24^3: free " + fmt("%.2g", e_free3) + ", Born " + fmt("%.2g", e_born3) + ", " +
                    fmt("%.3g", t3) + " s");

    std::string detail;
    for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
    return {ok, detail};
}

struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "Krein minimizer oracle vs closed form", krein_minimizer},
        {2, "Friedrichs minimization", friedrichs_min},
        {3, "constant chain", chain},
        {4, "Dirichlet convergence", dirichlet},
        {5, "buckling pencil", buckling},
        {6, "pencil ordering invariant", ordering},
        {7, "counting bounds", bound_verification},
        {8, "Weyl trend", weyl_trend},
        {9, "diamagnetic and gauge invariants", diamagnetic_gauge},
        {10, "scattering", scattering},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] criterion %d, %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(),
                    seconds(t0));
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
