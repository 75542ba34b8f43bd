#pragma once

// Invariant suite over all modules at preset sizes. `fast` keeps every
// problem small; `full` adds the fine-grid convergence and 3D runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kreinlab/assembly.hpp"
#include "kreinlab/bounds.hpp"
#include "kreinlab/coefficients.hpp"
#include "kreinlab/eigensolve.hpp"
#include "kreinlab/grid_domain.hpp"
#include "kreinlab/quadrature.hpp"
#include "kreinlab/scattering.hpp"

namespace kreinlab {

enum class VerifyLevel { Fast, Full };

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string observed;
    std::string expected;
};

struct VerifyOptions {
    VerifyLevel level = VerifyLevel::Fast;
    /// Debug mutation: replace the pencil numerator by F_m^2.
    bool mutate_numerator = false;
    unsigned seed = 0;
};

/// Buckling eigenvalues of the clamped rod on (0, 1): u'''' = -lambda u'' with
/// u = u' = 0 at both ends. With u = A + Bx + C cos kx + D sin kx the boundary
/// conditions give a 4x4 system; lambda = k^2 at the sign changes of its
/// determinant, refined by bisection.
inline std::vector<double> clamped_rod_buckling_eigenvalues(int count) {
    auto det = [](double k) {
        Eigen::Matrix4d m;
        m << 1.0, 0.0, 1.0, 0.0,
             0.0, 1.0, 0.0, k,
             1.0, 1.0, std::cos(k), std::sin(k),
             0.0, 1.0, -k * std::sin(k), k * std::cos(k);
        return m.determinant();
    };
    std::vector<double> out;
    const double step = 1e-2;
    double prev = det(step);
    for (double k = 2.0 * step; static_cast<int>(out.size()) < count; k += step) {
        const double v = det(k);
        if ((v > 0.0) != (prev > 0.0)) {
            const double root = bisect(det, k - step, k);
            out.push_back(root * root);
        }
        prev = v;
    }
    return out;
}

namespace detail {

inline std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::shared_ptr<const CoefficientField> sampled(const GridDomain& d, const FieldSpec& s, int m) {
    return std::make_shared<const CoefficientField>(sample_coefficients(d, s, m));
}

inline Eigen::VectorXd all_eigs(const SparseMatrixC& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// Random smooth coefficients on a small 2D square mask.
inline FieldSpec random_spec(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double a0 = 0.5 + u(rng);
    const double a1 = 0.3 * u(rng);
    const double b0 = 4.0 * (u(rng) - 0.5);
    const double b1 = 4.0 * (u(rng) - 0.5);
    const double q0 = 5.0 * u(rng);
    const double w = 1.0 + 3.0 * u(rng);
    FieldSpec s;
    s.a_diag = {[=](std::span<const double> x) { return a0 + a1 * std::sin(w * x[0] + x[1]); },
                [=](std::span<const double> x) { return a0 + a1 * std::cos(x[0] - w * x[1]); }};
    s.b = {[=](std::span<const double> x) { return b0 + std::sin(w * x[1]); },
           [=](std::span<const double> x) { return b1 * std::cos(w * x[0]); }};
    s.q = [=](std::span<const double> x) { return q0 * (1.0 + std::sin(w * (x[0] + x[1]))); };
    return s;
}

}  // namespace detail

inline std::vector<CheckResult> run_verify_suite(const VerifyOptions& opt = {}) {
    using detail::fmt;
    std::vector<CheckResult> out;
    auto check = [&](std::string name, auto&& body) {
        CheckResult r;
        r.name = std::move(name);
        try {
            body(r);
        } catch (const std::exception& e) {
            r.pass = false;
            r.observed = std::string("exception: ") + e.what();
        }
        out.push_back(std::move(r));
    };
    const bool full = opt.level == VerifyLevel::Full;
    const PencilNumerator variant =
        opt.mutate_numerator ? PencilNumerator::RestrictedSquare : PencilNumerator::BoundaryLayer;

    // grid_domain -----------------------------------------------------------
    check("grid.interval_rasterization", [&](CheckResult& r) {
        const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 1.0 / 8);
        r.observed = std::to_string(d.size()) + " nodes, volume " + fmt(d.volume());
        r.expected = "7 nodes, volume 0.875";
        r.pass = d.size() == 7 && d.volume() == 0.875;
    });
    check("grid.fatten_semigroup_prefix", [&](CheckResult& r) {
        const GridDomain d = build_domain(DiskShape{{0.0, 0.0}, 1.0}, 0.2);
        const GridDomain a = fatten(fatten(d, 1), 1);
        const GridDomain b = fatten(d, 2);
        bool prefix = true;
        for (std::size_t i = 0; i < d.size(); ++i) prefix = prefix && b.node(i) == d.node(i);
        r.pass = a.same_mask(b) && prefix;
        r.observed = std::string(a.same_mask(b) ? "same mask" : "masks differ") + (prefix ? ", prefix kept" : ", prefix lost");
        r.expected = "same mask, prefix kept";
    });

    // assembly --------------------------------------------------------------
    check("assembly.numerator_minus_F2_rank", [&](CheckResult& r) {
        const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 1.0 / 5);
        const auto c = detail::sampled(d, FieldSpec::free(1), 1);
        const KreinPencil p = assemble_krein_pencil(d, c, 1, variant);
        const Eigen::MatrixXcd f = Eigen::MatrixXcd(p.denominator.matrix);
        const Eigen::MatrixXcd diff = Eigen::MatrixXcd(p.numerator.matrix) - f * f;
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(diff);
        lu.setThreshold(1e-10);
        const auto rank = diff.norm() == 0.0 ? 0 : lu.rank();
        r.observed = "rank " + std::to_string(rank);
        r.expected = "rank 1 or 2 (boundary-layer rows present)";
        r.pass = rank >= 1 && rank <= 2;
    });
    check("assembly.pencil_distinct_from_friedrichs", [&](CheckResult& r) {
        const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 1.0 / 40);
        const auto c = detail::sampled(d, FieldSpec::free(1), 1);
        const KreinPencil p = assemble_krein_pencil(d, c, 1, variant);
        const HermitianOperator f = assemble_friedrichs(d, c, 1);
        const double kf = hermitian_eigs(f, 1).values[0];
        const double kk = pencil_eigs(p.numerator, p.denominator, 1).values[0];
        r.observed = "pencil " + fmt(kk) + ", Friedrichs " + fmt(kf);
        r.expected = "relative gap > 0.5";
        r.pass = (kk - kf) / kf > 0.5;
    });
    check("assembly.gauge_invariance", [&](CheckResult& r) {
        std::mt19937 rng(opt.seed);
        const GridDomain d = build_domain(DiskShape{{0.0, 0.0}, 1.0}, 0.25);
        const FieldSpec s = detail::random_spec(rng);
        const auto c = detail::sampled(d, s, 2);
        std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
        std::map<LatticePoint, double> chi_tab;
        auto chi = [&](const LatticePoint& p) {
            auto it = chi_tab.find(p);
            if (it == chi_tab.end()) it = chi_tab.emplace(p, u(rng)).first;
            return it->second;
        };
        const auto g = std::make_shared<const CoefficientField>(c->gauge_transformed(chi));
        double worst = 0.0;
        for (int m = 1; m <= 2; ++m) {
            const Eigen::VectorXd e0 = detail::all_eigs(assemble_friedrichs(d, c, m).matrix);
            const Eigen::VectorXd e1 = detail::all_eigs(assemble_friedrichs(d, g, m).matrix);
            worst = std::max(worst, ((e0 - e1).cwiseAbs().array() / e0.cwiseAbs().array()).maxCoeff());
            const KreinPencil p0 = assemble_krein_pencil(d, c, m, variant);
            const KreinPencil p1 = assemble_krein_pencil(d, g, m, variant);
            const auto s0 = pencil_eigs(p0.numerator, p0.denominator);
            const auto s1 = pencil_eigs(p1.numerator, p1.denominator);
            for (std::size_t j = 0; j < s0.values.size(); ++j) {
                worst = std::max(worst, std::abs(s0.values[j] - s1.values[j]) / std::abs(s0.values[j]));
            }
        }
        r.observed = "max relative change " + fmt(worst);
        r.expected = "<= 1e-10";
        r.pass = worst <= 1e-10;
    });
    check("assembly.diamagnetic_bound", [&](CheckResult& r) {
        std::mt19937 rng(opt.seed + 1);
        const int trials = full ? 40 : 10;
        double worst = std::numeric_limits<double>::infinity();
        for (int t = 0; t < trials; ++t) {
            const GridDomain d = build_domain(BoxShape{{0.0, 0.0}, {1.0, 0.5 + 0.1 * (t % 5)}}, 1.0 / 8);
            const auto c = detail::sampled(d, detail::random_spec(rng), 1);
            const auto c0 = detail::sampled(d, FieldSpec::free(2), 1);
            const double l = hermitian_eigs(assemble_friedrichs(d, c, 1), 1).values[0];
            const double l0 = hermitian_eigs(assemble_friedrichs(d, c0, 1), 1).values[0];
            worst = std::min(worst, l - c->eps_a() * l0);
        }
        r.observed = "min lambda_min(F) - eps_a lambda_min(F_free) = " + fmt(worst);
        r.expected = ">= 0";
        r.pass = worst >= 0.0;
    });
    check("assembly.pencil_ordering", [&](CheckResult& r) {
        std::mt19937 rng(opt.seed + 2);
        std::size_t violations = 0;
        std::size_t pairs = 0;
        for (int m = 1; m <= 2; ++m) {
            for (int t = 0; t < 4; ++t) {
                const GridDomain d = build_domain(DiskShape{{0.0, 0.0}, 1.0}, 0.2 + 0.02 * t);
                const auto c = detail::sampled(d, t == 0 ? FieldSpec::free(2) : detail::random_spec(rng), m);
                const auto f = hermitian_eigs(assemble_friedrichs(d, c, m));
                const KreinPencil p = assemble_krein_pencil(d, c, m, variant);
                const auto k = pencil_eigs(p.numerator, p.denominator);
                for (std::size_t j = 0; j < f.values.size(); ++j, ++pairs) {
                    if (k.values[j] < f.values[j]) ++violations;
                }
            }
        }
        r.observed = std::to_string(violations) + " violations in " + std::to_string(pairs) + " pairs";
        r.expected = "0 violations";
        r.pass = violations == 0;
    });

    // eigensolve ------------------------------------------------------------
    check("eigensolve.lanczos_matches_dense", [&](CheckResult& r) {
        std::mt19937 rng(opt.seed + 3);
        const GridDomain d = build_domain(DiskShape{{0.0, 0.0}, 1.0}, 0.08);
        const auto c = detail::sampled(d, detail::random_spec(rng), 1);
        const KreinPencil p = assemble_krein_pencil(d, c, 1, variant);
        EigenOptions lanczos;
        lanczos.dense_threshold = 10;
        const auto a = pencil_eigs(p.numerator, p.denominator, 12);
        const auto b = pencil_eigs(p.numerator, p.denominator, 12, lanczos);
        double worst = 0.0;
        for (std::size_t j = 0; j < a.values.size(); ++j) {
            worst = std::max(worst, std::abs(a.values[j] - b.values[j]) / a.values[j]);
        }
        r.observed = "max relative difference " + fmt(worst);
        r.expected = "<= 1e-8";
        r.pass = worst <= 1e-8;
    });
    check("eigensolve.counting_strict_and_scaling", [&](CheckResult& r) {
        Spectrum s;
        s.values = {1.0, 2.0, 2.0, 5.0};
        s.residuals.assign(4, 0.0);
        s.problem_size = 4;
        Spectrum t = s;
        for (double& v : t.values) v *= 3.0;
        bool scaling = true;
        for (double lam : {0.5, 1.0, 1.5, 2.0, 4.0, 6.0}) {
            scaling = scaling && counting(t, 3.0 * lam).count == counting(s, lam).count;
        }
        const bool strict = counting(s, 2.0).count == 1 && counting(s, 2.0000001).count == 3;
        r.observed = std::string(strict ? "strict" : "not strict") + ", " + (scaling ? "scaling exact" : "scaling broken");
        r.expected = "strict, scaling exact";
        r.pass = strict && scaling;
    });

    // bounds ----------------------------------------------------------------
    check("bounds.krein_minimizer_oracle", [&](CheckResult& r) {
        double worst = 0.0;
        const int nmax = full ? 4 : 3;
        const int mmax = full ? 3 : 2;
        for (int n = 1; n <= nmax; ++n) {
            for (int m = 1; m <= mmax; ++m) {
                const auto cf = krein_minimizer_closed_form(n, m);
                const auto orc = krein_minimizer_oracle(n, m);
                worst = std::max({worst, std::abs(orc.value - cf.value) / cf.value,
                                  std::abs(orc.alpha_star - cf.alpha_star) / cf.alpha_star});
            }
        }
        r.observed = "max relative deviation " + fmt(worst);
        r.expected = "<= 1e-6";
        r.pass = worst <= 1e-6;
    });
    check("bounds.krein_minimizer_identities", [&](CheckResult& r) {
        double id = 0.0;
        double deriv = 0.0;
        for (int n = 1; n <= 4; ++n) {
            for (int m = 1; m <= 3; ++m) {
                for (double a : {0.1, 0.5, 1.0, 2.0, 7.0}) {
                    const double f5 = krein_objective(a, n, m);
                    const double f6 = krein_objective_reduced(a, n, m);
                    id = std::max(id, std::abs(f5 - f6) / std::abs(f5));
                    const double e = 1e-5 * a;
                    const double d = ((a + e) * krein_objective(a + e, n, m) - (a - e) * krein_objective(a - e, n, m)) /
                                     (2.0 * e);
                    const double rn = std::pow(r_alpha_2m(a), n / (2.0 * m));
                    deriv = std::max(deriv, std::abs(d - rn) / rn);
                }
            }
        }
        r.observed = "two forms " + fmt(id) + ", derivative " + fmt(deriv);
        r.expected = "<= 1e-12, <= 1e-6";
        r.pass = id <= 1e-12 && deriv <= 1e-6;
    });
    check("bounds.friedrichs_minimization", [&](CheckResult& r) {
        double worst = 0.0;
        double cross = 0.0;
        for (int n = 1; n <= 4; ++n) {
            for (int m = 1; m <= 3; ++m) {
                const auto f = friedrichs_minimization(n, m);
                worst = std::max(worst, std::abs(f.oracle.value - f.closed_form.value) / f.closed_form.value);
                cross = std::max(cross, f.crosscheck_error);
            }
        }
        r.observed = "oracle " + fmt(worst) + ", closed form vs quadrature " + fmt(cross);
        r.expected = "<= 1e-6, <= 1e-8";
        r.pass = worst <= 1e-6 && cross <= 1e-8;
    });
    check("bounds.constant_chain", [&](CheckResult& r) {
        bool ok = true;
        for (int n = 1; n <= 8; ++n) {
            for (int m = 1; m <= 4; ++m) ok = ok && constant_chain_check(n, m).ok();
        }
        ok = ok && constant_chain_check(100, 1).ok();
        r.observed = ok ? "chain holds" : "chain broken";
        r.expected = "1 < f < g < e, F and G decreasing";
        r.pass = ok;
    });
    check("bounds.weyl_two_forms", [&](CheckResult& r) {
        Eigen::MatrixXd a(2, 2);
        a << 1.0, 0.0, 0.0, 4.0;
        const double det = weyl_density_det(a);
        const double ang = weyl_density_angular(a);
        r.observed = "relative gap " + fmt(std::abs(det - ang) / det);
        r.expected = "<= 1e-6";
        r.pass = std::abs(det - ang) <= 1e-6 * det;
    });

    // scattering ------------------------------------------------------------
    check("scattering.free_case", [&](CheckResult& r) {
        const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 1.0 / 50);
        const auto p = make_scattering_problem_1d([](std::span<const double>) { return 0.0; }, 0.0, 1.0, 4);
        const CphiReport c = cphi_estimate(p, d, xi_grid(1, 2, 8));
        r.observed = fmt(c.cphi) + " vs |Omega| = " + fmt(c.free_field_value);
        r.expected = "equal to 1e-10";
        r.pass = std::abs(c.cphi - c.free_field_value) <= 1e-10 * c.free_field_value;
    });
    check("scattering.square_well", [&](CheckResult& r) {
        const double a = 0.5;
        const double q0 = 3.0;
        const GridDomain d = build_domain(IntervalShape{-1.0, 1.0}, 1.0 / 100);
        const auto p = make_scattering_problem_1d(
            [=](std::span<const double> x) { return std::abs(x[0]) <= a ? q0 : 0.0; }, -a, a, 8);
        double worst = 0.0;
        for (double k : {1.0, 2.0, 5.0}) {
            const DistortedWave w = solve_lippmann_schwinger(p, {k, 0.0, 0.0}, d);
            const SquareWellSolution exact(q0, a, k);
            for (std::size_t i = 0; i < d.size(); ++i) {
                worst = std::max(worst, std::abs(w.values_on_domain[static_cast<Eigen::Index>(i)] - exact(d.coords(i)[0])));
            }
        }
        r.observed = "max error " + fmt(worst);
        r.expected = "<= 1e-6";
        r.pass = worst <= 1e-6;
    });
    check("scattering.branch_symmetry", [&](CheckResult& r) {
        const GridDomain d = build_domain(IntervalShape{-1.0, 1.0}, 1.0 / 50);
        const auto p = make_scattering_problem_1d(
            [](std::span<const double> x) { return 2.0 * std::exp(-x[0] * x[0]); }, -0.8, 0.8, 6);
        const DistortedWave plus = solve_lippmann_schwinger(p, {-3.0, 0.0, 0.0}, d);
        const DistortedWave minus = solve_lippmann_schwinger(with_branch(p, Branch::Minus), {3.0, 0.0, 0.0}, d);
        const double gap = (minus.values_on_domain - plus.values_on_domain.conjugate()).cwiseAbs().maxCoeff();
        r.observed = "max |phi_-(xi) - conj(phi_+(-xi))| = " + fmt(gap);
        r.expected = "<= 1e-12";
        r.pass = gap <= 1e-12;
    });
    check("scattering.large_xi_ray", [&](CheckResult& r) {
        const GridDomain d = build_domain(IntervalShape{-1.0, 1.0}, 1.0 / 200);
        const double a = 0.5;
        const auto p = make_scattering_problem_1d(
            [=](std::span<const double> x) {
                return std::abs(x[0]) <= a ? 3.0 * std::pow(std::cos(std::numbers::pi * x[0] / (2.0 * a)), 2) : 0.0;
            },
            -a, a, 8);
        std::vector<double> dist;
        for (double t : {5.0, 10.0, 20.0}) {
            const DistortedWave w = solve_lippmann_schwinger(p, {t, 0.0, 0.0}, d);
            double e = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                e += std::norm(w.values_on_domain[static_cast<Eigen::Index>(i)] - std::polar(1.0, t * d.coords(i)[0]));
            }
            dist.push_back(std::sqrt(e * d.cell_volume()));
        }
        r.observed = fmt(dist[0]) + ", " + fmt(dist[1]) + ", " + fmt(dist[2]);
        r.expected = "strictly decreasing";
        r.pass = dist[1] < dist[0] && dist[2] < dist[1];
    });

    if (!full) return out;

    // full-level convergence ------------------------------------------------
    check("full.dirichlet_1d", [&](CheckResult& r) {
        const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 1.0 / 2000);
        const auto s = hermitian_eigs(assemble_friedrichs(d, detail::sampled(d, FieldSpec::free(1), 1), 1), 5);
        double worst = 0.0;
        for (int j = 1; j <= 5; ++j) {
            const double exact = std::numbers::pi * std::numbers::pi * j * j;
            worst = std::max(worst, std::abs(s.values[j - 1] - exact) / exact);
        }
        r.observed = "max relative error " + fmt(worst);
        r.expected = "<= 0.01";
        r.pass = worst <= 0.01;
    });
    check("full.buckling_1d", [&](CheckResult& r) {
        const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 1.0 / 2000);
        const KreinPencil p = assemble_krein_pencil(d, detail::sampled(d, FieldSpec::free(1), 1), 1, variant);
        const auto s = pencil_eigs(p.numerator, p.denominator, 2);
        const auto exact = clamped_rod_buckling_eigenvalues(2);
        const double e0 = std::abs(s.values[0] - exact[0]) / exact[0];
        const double e1 = std::abs(s.values[1] - exact[1]) / exact[1];
        r.observed = fmt(s.values[0]) + ", " + fmt(s.values[1]);
        r.expected = "within 1% of " + fmt(exact[0]) + ", " + fmt(exact[1]);
        r.pass = e0 <= 0.01 && e1 <= 0.01;
    });
    check("full.scattering_3d_born", [&](CheckResult& r) {
        const GridDomain d = build_domain(BoxShape{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}, 1.0 / 8);
        const auto p = make_scattering_problem_3d([](std::span<const double>) { return 0.01; }, {0.0, 0.0, 0.0}, 1.0, 24);
        const DistortedWave w = solve_lippmann_schwinger(p, {3.0, 0.0, 0.0}, d);
        const double rel = std::abs(w.l2_on_domain - d.volume()) / d.volume();
        r.observed = "relative deviation from |Omega| " + fmt(rel);
        r.expected = "<= 0.01";
        r.pass = rel <= 0.01;
    });
    return out;
}

}  // namespace kreinlab
