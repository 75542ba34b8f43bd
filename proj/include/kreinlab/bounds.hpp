#pragma once

// Counting-function bound constants, the Weyl leading term and the
// alpha-minimizations that produce the Krein and Friedrichs shape factors.
//
// For lambda > 0:
//   N_K(lambda) <= v_n (2 pi)^-n (1 + 2m/(2m+n))^{n/(2m)} C_phi lambda^{n/(2m)}
//   N_F(lambda) <= v_n (2 pi)^-n (1 + 2m/n)^{n/(2m)}      C_phi lambda^{n/(2m)}
// where C_phi = sup_xi ||phi(., xi)||^2_{L^2(Omega)}.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "kreinlab/coefficients.hpp"
#include "kreinlab/errors.hpp"
#include "kreinlab/grid_domain.hpp"
#include "kreinlab/quadrature.hpp"

namespace kreinlab {

/// Volume of the unit ball in R^n: pi^{n/2} / Gamma(n/2 + 1).
inline double unit_ball_volume(int n) {
    if (n < 1) throw ArgumentError("dimension must be >= 1");
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// (1 + 2m/(2m+n))^{n/(2m)}.
inline double krein_shape_factor(int n, int m) {
    return std::pow(1.0 + 2.0 * m / (2.0 * m + n), n / (2.0 * m));
}

/// (1 + 2m/n)^{n/(2m)}.
inline double friedrichs_shape_factor(int n, int m) {
    return std::pow(1.0 + 2.0 * m / n, n / (2.0 * m));
}

enum class Extension_kind { Krein, Friedrichs };

struct BoundConstants {
    int n = 1;
    int m = 1;
    double v_n = 2.0;
    double cphi = 1.0;
    Extension_kind kind = Extension_kind::Krein;
    double shape = 1.0;
    /// v_n (2 pi)^-n * shape * cphi.
    double prefactor = 0.0;

    double operator()(double lambda) const {
        if (!(lambda > 0.0)) throw ArgumentError("bound evaluated at nonpositive lambda");
        return prefactor * std::pow(lambda, n / (2.0 * m));
    }
};

inline BoundConstants bound_constants(Extension_kind kind, int n, int m, double cphi) {
    if (n < 1 || m < 1) throw ArgumentError("n and m must be >= 1");
    if (!(cphi > 0.0)) throw ArgumentError("C_phi must be positive");
    BoundConstants c;
    c.n = n;
    c.m = m;
    c.v_n = unit_ball_volume(n);
    c.cphi = cphi;
    c.kind = kind;
    c.shape = kind == Extension_kind::Krein ? krein_shape_factor(n, m) : friedrichs_shape_factor(n, m);
    c.prefactor = c.v_n * std::pow(2.0 * std::numbers::pi, -n) * c.shape * cphi;
    return c;
}

inline double krein_bound(double lambda, int n, int m, double cphi) {
    return bound_constants(Extension_kind::Krein, n, m, cphi)(lambda);
}

inline double friedrichs_bound(double lambda, int n, int m, double cphi) {
    return bound_constants(Extension_kind::Friedrichs, n, m, cphi)(lambda);
}

// ---------------------------------------------------------------------------
// Weyl leading term

/// Full symmetric coefficient matrix a(x), n x n.
using MatrixField = std::function<Eigen::MatrixXd(const Point&)>;

/// (1 / (n (2 pi)^n)) * integral over the unit sphere of (xi, a xi)^{-n/2}.
inline double weyl_density_angular(const Eigen::MatrixXd& a) {
    const auto n = static_cast<int>(a.rows());
    auto form = [&](const Eigen::VectorXd& xi) {
        const double v = xi.dot(a * xi);
        if (!(v > 0.0)) throw ArgumentError("coefficient matrix is not positive definite");
        return std::pow(v, -0.5 * n);
    };
    double sphere = 0.0;
    if (n == 1) {
        Eigen::VectorXd e(1);
        e[0] = 1.0;
        sphere = 2.0 * form(e);
    } else if (n == 2) {
        // Periodic trapezoid rule: exponentially convergent for analytic integrands.
        const int pts = 512;
        for (int i = 0; i < pts; ++i) {
            const double t = 2.0 * std::numbers::pi * i / pts;
            Eigen::VectorXd xi(2);
            xi << std::cos(t), std::sin(t);
            sphere += form(xi);
        }
        sphere *= 2.0 * std::numbers::pi / pts;
    } else if (n == 3) {
        using Gauss = boost::math::quadrature::gauss<double, 40>;
        const int pts = 256;
        for (int i = 0; i < pts; ++i) {
            const double phi = 2.0 * std::numbers::pi * i / pts;
            sphere += Gauss::integrate(
                [&](double t) {
                    const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
                    Eigen::VectorXd xi(3);
                    xi << s * std::cos(phi), s * std::sin(phi), t;
                    return form(xi);
                },
                -1.0, 1.0);
        }
        sphere *= 2.0 * std::numbers::pi / pts;
    } else {
        throw ArgumentError("angular Weyl density implemented for n <= 3");
    }
    return sphere / (n * std::pow(2.0 * std::numbers::pi, n));
}

/// v_n (2 pi)^-n det(a)^{-1/2}.
inline double weyl_density_det(const Eigen::MatrixXd& a) {
    const auto n = static_cast<int>(a.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw ArgumentError("coefficient matrix is not positive definite");
    const double det = a.determinant();
    return unit_ball_volume(n) * std::pow(2.0 * std::numbers::pi, -n) / std::sqrt(det);
}

struct WeylTerm {
    double value = 0.0;           // det form times lambda^{n/(2m)}
    double value_angular = 0.0;   // sphere-integral form times lambda^{n/(2m)}
    double coefficient = 0.0;     // v_n (2 pi)^-n * int_Omega det a^{-1/2}
    double relative_discrepancy = 0.0;
};

/// Weyl leading term, midpoint quadrature at the mask nodes, both forms.
inline WeylTerm weyl_leading(double lambda, const GridDomain& d, const MatrixField& a, int m) {
    if (!(lambda > 0.0)) throw ArgumentError("Weyl term evaluated at nonpositive lambda");
    if (m < 1) throw ArgumentError("operator order parameter m must be >= 1");
    double det_sum = 0.0;
    double ang_sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Eigen::MatrixXd ax = a(d.coords(i));
        if (ax.rows() != d.dim() || ax.cols() != d.dim()) {
            throw ArgumentError("coefficient matrix has wrong shape");
        }
        det_sum += weyl_density_det(ax);
        ang_sum += weyl_density_angular(ax);
    }
    const double dv = d.cell_volume();
    const double power = std::pow(lambda, d.dim() / (2.0 * m));
    WeylTerm w;
    w.coefficient = det_sum * dv;
    w.value = w.coefficient * power;
    w.value_angular = ang_sum * dv * power;
    w.relative_discrepancy = std::abs(w.value - w.value_angular) / std::abs(w.value);
    return w;
}

/// Diagonal a taken from the coefficient field.
inline WeylTerm weyl_leading(double lambda, const GridDomain& d, const CoefficientField& c, int m) {
    auto a = [&](const Point& x) {
        Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(d.dim(), d.dim());
        LatticePoint p{0, 0, 0};
        for (int k = 0; k < d.dim(); ++k) {
            p[k] = static_cast<int>(std::lround((x[k] - d.base()[k]) / d.spacing()));
        }
        for (int k = 0; k < d.dim(); ++k) mat(k, k) = c.a_node(k, p);
        return mat;
    };
    return weyl_leading(lambda, d, MatrixField(a), m);
}

/// v_n (2 pi)^-n |Omega| lambda^{n/(2m)}: the identity-coefficient case.
inline double weyl_leading_free(double lambda, const GridDomain& d, int m) {
    return unit_ball_volume(d.dim()) * std::pow(2.0 * std::numbers::pi, -d.dim()) * d.volume() *
           std::pow(lambda, d.dim() / (2.0 * m));
}

// ---------------------------------------------------------------------------
// Alpha-minimizations

enum class MinimizationMethod { ClosedForm, Oracle };

struct MinimizationResult {
    double alpha_star = 0.0;
    double value = 0.0;       // minimum, v_n divided out
    double r_alpha_2m = 0.0;  // r_alpha^{2m} at alpha_star
    MinimizationMethod method = MinimizationMethod::ClosedForm;
};

/// r_alpha^{2m} = 1/2 + sqrt(alpha + 1/4), the root of r^{4m} - r^{2m} = alpha above 1.
inline double r_alpha_2m(double alpha) { return 0.5 + std::sqrt(alpha + 0.25); }

/// f_{n,m}(alpha) = n/alpha [alpha r^n/n + r^{n+2m}/(n+2m) - r^{n+4m}/(n+4m)], r = r_alpha.
inline double krein_objective(double alpha, int n, int m) {
    if (!(alpha > 0.0)) throw ArgumentError("alpha must be positive");
    const double r = std::pow(r_alpha_2m(alpha), 1.0 / (2.0 * m));
    return n / alpha *
           (alpha * std::pow(r, n) / n + std::pow(r, n + 2 * m) / (n + 2 * m) -
            std::pow(r, n + 4 * m) / (n + 4 * m));
}

/// Same function after eliminating alpha inside the bracket:
/// alpha f = 4m r^{n+4m}/(n+4m) - 2m r^{n+2m}/(n+2m).
inline double krein_objective_reduced(double alpha, int n, int m) {
    if (!(alpha > 0.0)) throw ArgumentError("alpha must be positive");
    const double r = std::pow(r_alpha_2m(alpha), 1.0 / (2.0 * m));
    return (4.0 * m * std::pow(r, n + 4 * m) / (n + 4 * m) -
            2.0 * m * std::pow(r, n + 2 * m) / (n + 2 * m)) /
           alpha;
}

/// alpha~ = 2m(n+4m)/(n+2m)^2, f~ = ((n+4m)/(n+2m))^{n/(2m)}.
inline MinimizationResult krein_minimizer_closed_form(int n, int m) {
    if (n < 1 || m < 1) throw ArgumentError("n and m must be >= 1");
    const double nn = n;
    const double mm = m;
    MinimizationResult r;
    r.alpha_star = 2.0 * mm * (nn + 4.0 * mm) / ((nn + 2.0 * mm) * (nn + 2.0 * mm));
    r.r_alpha_2m = (nn + 4.0 * mm) / (nn + 2.0 * mm);
    r.value = std::pow(r.r_alpha_2m, nn / (2.0 * mm));
    r.method = MinimizationMethod::ClosedForm;
    return r;
}

/// Numerical minimization of alpha^{-1} int_{R^n} [alpha - |eta|^{4m} + |eta|^{2m}]_+ / v_n
/// by radial adaptive Simpson quadrature and golden-section search on
/// (1e-3, 10). Uses no closed-form algebra: the support radius comes from
/// bisection on the integrand itself.
inline MinimizationResult krein_minimizer_oracle(int n, int m) {
    if (n < 1 || m < 1) throw ArgumentError("n and m must be >= 1");
    auto support_radius = [&](double alpha) {
        auto g = [&](double r) {
            return alpha - std::pow(r, 4 * m) + std::pow(r, 2 * m);
        };
        double hi = 2.0;
        while (g(hi) > 0.0) hi *= 2.0;
        return bisect(g, 1.0, hi);
    };
    auto objective = [&](double alpha) {
        const double ra = support_radius(alpha);
        auto integrand = [&](double r) {
            return (alpha - std::pow(r, 4 * m) + std::pow(r, 2 * m)) * std::pow(r, n - 1);
        };
        return n / alpha * adaptive_simpson(integrand, 0.0, ra, 1e-15, 50);
    };
    const double lo = 1e-3;
    const double hi = 10.0;
    const LineMinimum best = golden_section(objective, lo, hi, 1e-10);
    if (best.x - lo < 1e-6 || hi - best.x < 1e-6) {
        throw SolverError("Krein minimizer oracle: bracketing failure, minimum at the bracket end");
    }
    MinimizationResult r;
    r.alpha_star = best.x;
    r.value = best.value;
    r.r_alpha_2m = std::pow(support_radius(best.x), 2 * m);
    r.method = MinimizationMethod::Oracle;
    return r;
}

/// I_F(alpha) = alpha^{-1} int_{R^n} [alpha + 1 - |eta|^{2m}]_+ d eta, closed form.
inline double friedrichs_integral(double alpha, int n, int m) {
    if (!(alpha > 0.0)) throw ArgumentError("alpha must be positive");
    return 2.0 * m * unit_ball_volume(n) / (2.0 * m + n) / alpha *
           std::pow(alpha + 1.0, (2.0 * m + n) / (2.0 * m));
}

/// I_F by radial quadrature.
inline double friedrichs_integral_quadrature(double alpha, int n, int m) {
    if (!(alpha > 0.0)) throw ArgumentError("alpha must be positive");
    const double radius = std::pow(alpha + 1.0, 1.0 / (2.0 * m));
    auto integrand = [&](double r) { return (alpha + 1.0 - std::pow(r, 2 * m)) * std::pow(r, n - 1); };
    return n * unit_ball_volume(n) / alpha * adaptive_simpson(integrand, 0.0, radius, 1e-15, 50);
}

/// I_F'(alpha) = n v_n/(2m+n) (alpha+1)^{n/(2m)} alpha^{-2} (alpha - 2m/n).
inline double friedrichs_integral_derivative(double alpha, int n, int m) {
    return n * unit_ball_volume(n) / (2.0 * m + n) * std::pow(alpha + 1.0, n / (2.0 * m)) /
           (alpha * alpha) * (alpha - 2.0 * m / n);
}

struct FriedrichsMinimization {
    MinimizationResult closed_form;
    MinimizationResult oracle;
    /// Max relative gap between the closed form and quadrature at the probe points.
    double crosscheck_error = 0.0;
    std::vector<double> probes{0.5, 1.0, 3.0};
};

/// alpha* = 2m/n, minimum (1 + 2m/n)^{n/(2m)} after dividing by v_n.
inline FriedrichsMinimization friedrichs_minimization(int n, int m) {
    if (n < 1 || m < 1) throw ArgumentError("n and m must be >= 1");
    FriedrichsMinimization out;
    out.closed_form.alpha_star = 2.0 * m / n;
    out.closed_form.value = friedrichs_shape_factor(n, m);
    out.closed_form.r_alpha_2m = out.closed_form.alpha_star + 1.0;
    out.closed_form.method = MinimizationMethod::ClosedForm;

    const double vn = unit_ball_volume(n);
    for (double a : out.probes) {
        const double exact = friedrichs_integral(a, n, m);
        const double quad = friedrichs_integral_quadrature(a, n, m);
        out.crosscheck_error = std::max(out.crosscheck_error, std::abs(exact - quad) / std::abs(exact));
    }
    const double lo = 1e-3;
    const double hi = 10.0;
    const LineMinimum best = golden_section(
        [&](double a) { return friedrichs_integral_quadrature(a, n, m) / vn; }, lo, hi, 1e-10);
    if (best.x - lo < 1e-6 || hi - best.x < 1e-6) {
        throw SolverError("Friedrichs oracle: bracketing failure, minimum at the bracket end");
    }
    out.oracle.alpha_star = best.x;
    out.oracle.value = best.value;
    out.oracle.r_alpha_2m = best.x + 1.0;
    out.oracle.method = MinimizationMethod::Oracle;
    return out;
}

struct ChainReport {
    int n = 1;
    int m = 1;
    double krein_factor = 0.0;       // f~
    double friedrichs_factor = 0.0;  // g~
    bool chain_holds = false;        // 1 < f~ < g~ < e
    bool g_decreasing = false;
    bool f_decreasing = false;
    bool f_below_g = false;

    bool ok() const { return chain_holds && g_decreasing && f_decreasing && f_below_g; }
};

/// G(x) = ln(1+x)/x, log of g~ at x = 2m/n.
inline double chain_log_g(double x) { return std::log1p(x) / x; }
/// F(x) = ln(1 + x/(1+x))/x, log of f~ at x = 2m/n.
inline double chain_log_f(double x) { return std::log1p(x / (1.0 + x)) / x; }

/// Strict chain 1 < f~ < g~ < e and monotone decrease of F, G on a log grid.
inline ChainReport constant_chain_check(int n, int m) {
    ChainReport r;
    r.n = n;
    r.m = m;
    r.krein_factor = krein_shape_factor(n, m);
    r.friedrichs_factor = friedrichs_shape_factor(n, m);
    r.chain_holds = 1.0 < r.krein_factor && r.krein_factor < r.friedrichs_factor &&
                    r.friedrichs_factor < std::numbers::e;
    r.g_decreasing = true;
    r.f_decreasing = true;
    r.f_below_g = true;
    double prev_g = std::numeric_limits<double>::infinity();
    double prev_f = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 60; ++i) {
        const double x = std::pow(10.0, -3.0 + 0.1 * i);
        const double g = chain_log_g(x);
        const double f = chain_log_f(x);
        r.g_decreasing = r.g_decreasing && g < prev_g;
        r.f_decreasing = r.f_decreasing && f < prev_f;
        r.f_below_g = r.f_below_g && f < g;
        prev_g = g;
        prev_f = f;
    }
    return r;
}

}  // namespace kreinlab
