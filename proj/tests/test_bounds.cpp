#include <gtest/gtest.h>

#include "kreinlab/bounds.hpp"
#include "kreinlab/quadrature.hpp"

using namespace kreinlab;

TEST(UnitBall, HalfIntegerClosedForms) {
    const double pi = std::numbers::pi;
    EXPECT_NEAR(unit_ball_volume(1), 2.0, 1e-14);
    EXPECT_NEAR(unit_ball_volume(2), pi, 1e-14);
    EXPECT_NEAR(unit_ball_volume(3), 4.0 * pi / 3.0, 1e-14);
    EXPECT_NEAR(unit_ball_volume(4), pi * pi / 2.0, 1e-13);
    EXPECT_NEAR(unit_ball_volume(5), 8.0 * pi * pi / 15.0, 1e-13);
    EXPECT_THROW(unit_ball_volume(0), ArgumentError);
}

TEST(BoundFormulas, Substitution) {
    EXPECT_NEAR(krein_bound(50.0, 2, 1, 1.0), 75.0 / (4.0 * std::numbers::pi), 1e-12);
    EXPECT_NEAR(friedrichs_bound(50.0, 2, 1, 1.0), 100.0 / (4.0 * std::numbers::pi), 1e-12);
    EXPECT_NEAR(krein_bound(1.0, 1, 1, 1.0), 2.0 / (2.0 * std::numbers::pi) * std::sqrt(5.0 / 3.0), 1e-12);
    EXPECT_NEAR(friedrichs_shape_factor(1, 1), std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(krein_bound(7.0, 3, 2, 2.0), 2.0 * krein_bound(7.0, 3, 2, 1.0), 1e-12);
    for (int n = 1; n <= 4; ++n) {
        for (int m = 1; m <= 3; ++m) EXPECT_LT(krein_bound(3.0, n, m, 1.0), friedrichs_bound(3.0, n, m, 1.0));
    }
    EXPECT_THROW(krein_bound(0.0, 2, 1, 1.0), ArgumentError);
    EXPECT_THROW(friedrichs_bound(-1.0, 2, 1, 1.0), ArgumentError);
}

TEST(Weyl, FormsAgree) {
    Eigen::MatrixXd a(2, 2);
    a << 1.0, 0.0, 0.0, 4.0;
    EXPECT_NEAR(weyl_density_angular(a), weyl_density_det(a), 1e-6 * weyl_density_det(a));
    Eigen::MatrixXd b(3, 3);
    b << 2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5;
    EXPECT_NEAR(weyl_density_angular(b), weyl_density_det(b), 1e-6 * weyl_density_det(b));
    Eigen::MatrixXd c(1, 1);
    c << 9.0;
    EXPECT_NEAR(weyl_density_angular(c), weyl_density_det(c), 1e-14);
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(weyl_density_det(bad), ArgumentError);
}

TEST(Weyl, IdentityAndScaledCoefficient) {
    const GridDomain d = build_domain(BoxShape{{0.0, 0.0}, {1.0, 1.0}}, 0.1);
    auto ident = [](const Point&) { return Eigen::MatrixXd::Identity(2, 2).eval(); };
    auto four = [](const Point&) { return (4.0 * Eigen::MatrixXd::Identity(2, 2)).eval(); };
    const double w = weyl_leading(50.0, d, ident, 1).value;
    EXPECT_NEAR(w, weyl_leading_free(50.0, d, 1), 1e-12);
    EXPECT_NEAR(weyl_leading(50.0, d, four, 1).value, 0.25 * w, 1e-12);
    const CoefficientField c = sample_coefficients(d, FieldSpec::free(2), 1);
    EXPECT_NEAR(weyl_leading(50.0, d, c, 1).value, w, 1e-12);
}

TEST(KreinMinimizer, ClosedFormValues) {
    auto r = krein_minimizer_closed_form(2, 1);
    EXPECT_NEAR(r.alpha_star, 0.75, 1e-15);
    EXPECT_NEAR(r.value, 1.5, 1e-15);
    r = krein_minimizer_closed_form(1, 1);
    EXPECT_NEAR(r.alpha_star, 10.0 / 9.0, 1e-15);
    EXPECT_NEAR(r.value, std::sqrt(5.0 / 3.0), 1e-15);
    EXPECT_NEAR(krein_minimizer_closed_form(3, 2).value, std::pow(11.0 / 7.0, 0.75), 1e-14);
    EXPECT_NEAR(krein_minimizer_closed_form(1, 3).alpha_star, 6.0 * 13.0 / 49.0, 1e-15);
    for (int n = 1; n <= 4; ++n) {
        for (int m = 1; m <= 3; ++m) {
            const auto cf = krein_minimizer_closed_form(n, m);
            EXPECT_NEAR(cf.r_alpha_2m, r_alpha_2m(cf.alpha_star), 1e-14);
            EXPECT_NEAR(krein_objective(cf.alpha_star, n, m), cf.value, 1e-12);
        }
    }
}

TEST(KreinMinimizer, ObjectiveAtTwoMatchesQuadrature) {
    // n = m = 1, alpha = 2: r^2 = 2.
    const double reduced = (4.0 * std::pow(2.0, 2.5) / 5.0 - 2.0 * std::pow(2.0, 1.5) / 3.0) / 2.0;
    const double quad = 1.0 / 2.0 *
                        adaptive_simpson([](double r) { return 2.0 + r * r - std::pow(r, 4); }, 0.0, std::sqrt(2.0));
    EXPECT_NEAR(krein_objective(2.0, 1, 1), reduced, 1e-13);
    EXPECT_NEAR(krein_objective(2.0, 1, 1), quad, 1e-11);
}

TEST(KreinMinimizer, BlowsUpAtBothEnds) {
    EXPECT_GT(krein_objective(1e-8, 2, 1), 1e3);
    EXPECT_GT(krein_objective(1e8, 2, 1), 1e3);
}

TEST(KreinMinimizer, OracleMatchesClosedForm) {
    for (int n = 1; n <= 4; ++n) {
        for (int m = 1; m <= 3; ++m) {
            const auto cf = krein_minimizer_closed_form(n, m);
            const auto orc = krein_minimizer_oracle(n, m);
            EXPECT_NEAR(orc.value, cf.value, 1e-6 * cf.value) << n << ',' << m;
            EXPECT_NEAR(orc.alpha_star, cf.alpha_star, 1e-6 * cf.alpha_star) << n << ',' << m;
            EXPECT_NEAR(orc.r_alpha_2m, cf.r_alpha_2m, 1e-6 * cf.r_alpha_2m);
        }
    }
}

TEST(Friedrichs, MinimizationAndDerivativeSign) {
    const auto f = friedrichs_minimization(2, 1);
    EXPECT_NEAR(f.closed_form.alpha_star, 1.0, 1e-15);
    EXPECT_NEAR(f.closed_form.value, 2.0, 1e-15);
    EXPECT_NEAR(f.oracle.value, 2.0, 1e-6);
    EXPECT_LE(f.crosscheck_error, 1e-8);
    EXPECT_NEAR(friedrichs_minimization(1, 1).closed_form.value, std::sqrt(3.0), 1e-15);
    for (int n = 1; n <= 4; ++n) {
        for (int m = 1; m <= 3; ++m) {
            const double a = 2.0 * m / n;
            EXPECT_LT(friedrichs_integral_derivative(0.9 * a, n, m), 0.0);
            EXPECT_GT(friedrichs_integral_derivative(1.1 * a, n, m), 0.0);
            EXPECT_NEAR(friedrichs_integral(a, n, m) / unit_ball_volume(n), friedrichs_shape_factor(n, m), 1e-12);
        }
    }
}

TEST(Chain, StrictAndMonotone) {
    const auto r = constant_chain_check(2, 1);
    EXPECT_TRUE(r.ok());
    EXPECT_NEAR(r.krein_factor, 1.5, 1e-15);
    EXPECT_NEAR(r.friedrichs_factor, 2.0, 1e-15);
    const auto big = constant_chain_check(100, 1);
    EXPECT_TRUE(big.ok());
    EXPECT_LT(big.friedrichs_factor, std::numbers::e);
    for (double x : {0.1, 1.0, 10.0}) EXPECT_LT(chain_log_f(x), chain_log_g(x));
}

TEST(Quadrature, SimpsonGoldenBisect) {
    EXPECT_NEAR(adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0), std::exp(1.0) - 1.0, 1e-12);
    const auto m = golden_section([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0);
    EXPECT_NEAR(m.x, 0.3, 1e-9);
    EXPECT_NEAR(bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0), std::sqrt(2.0), 1e-14);
    EXPECT_THROW(bisect([](double x) { return x * x + 1.0; }, 0.0, 2.0), ArgumentError);
}
