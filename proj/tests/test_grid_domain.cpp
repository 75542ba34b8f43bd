#include <sstream>

#include <gtest/gtest.h>

#include <cmath>

#include "kreinlab/coefficients.hpp"
#include "kreinlab/expression.hpp"
#include "kreinlab/grid_domain.hpp"

using namespace kreinlab;

TEST(BuildDomain, IntervalCounts) {
    const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 1.0 / 8);
    EXPECT_EQ(d.size(), 7u);
    EXPECT_DOUBLE_EQ(d.volume(), 7.0 / 8.0);
}

TEST(BuildDomain, UnitSquare) {
    const GridDomain d = build_domain(BoxShape{{0.0, 0.0}, {1.0, 1.0}}, 0.25);
    EXPECT_EQ(d.size(), 9u);
    EXPECT_DOUBLE_EQ(d.volume(), 9.0 / 16.0);
}

TEST(BuildDomain, VolumeConvergesAtFirstOrder) {
    double prev = 1.0;
    for (double h : {0.1, 0.05, 0.025, 0.0125}) {
        const GridDomain d = build_domain(BoxShape{{0.0, 0.0}, {2.0, 1.0}}, h);
        const double err = std::abs(d.volume() - 2.0);
        EXPECT_LE(err, 6.0 * h);
        EXPECT_LT(err, prev);
        prev = err;
    }
}

TEST(BuildDomain, Errors) {
    EXPECT_THROW(build_domain(IntervalShape{0.0, 1.0}, 0.0), ArgumentError);
    EXPECT_THROW(build_domain(IntervalShape{0.0, 1.0}, -1.0), ArgumentError);
    EXPECT_THROW(build_domain(IntervalShape{0.0, 0.05}, 0.1), DomainError);
    std::istringstream empty("");
    EXPECT_THROW(read_mask(empty), DomainError);
    std::istringstream zeros("1 0.1 3 0\n0 0 0\n");
    EXPECT_THROW(read_mask(zeros), DomainError);
}

TEST(MaskFile, RoundTrip) {
    const GridDomain d = build_domain(DiskShape{{0.0, 0.0}, 1.0}, 0.25);
    std::stringstream s;
    write_mask(s, d);
    const GridDomain e = read_mask(s);
    ASSERT_EQ(e.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (int a = 0; a < 2; ++a) EXPECT_NEAR(e.coords(i)[a], d.coords(i)[a], 1e-12);
    }
}

TEST(Fatten, IntervalAndSquare) {
    std::istringstream in("1 0.125 9 0\n0 1 1 1 1 1 1 1 0\n");
    const GridDomain d = read_mask(in);
    const GridDomain f = fatten(d, 1);
    EXPECT_EQ(f.size(), 9u);
    const GridDomain sq = build_domain(BoxShape{{0.0, 0.0}, {1.0, 1.0}}, 0.25);
    EXPECT_EQ(fatten(sq, 1).size(), 25u);
    EXPECT_THROW(fatten(sq, 0), ArgumentError);
}

TEST(Fatten, SemigroupAndPrefix) {
    const GridDomain d = build_domain(DiskShape{{0.3, -0.2}, 0.9}, 0.15);
    const GridDomain two = fatten(d, 2);
    EXPECT_TRUE(fatten(fatten(d, 1), 1).same_mask(two));
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(two.node(i), d.node(i));
        EXPECT_EQ(two.index_of(d.node(i)), static_cast<std::int64_t>(i));
    }
}

TEST(Expression, GrammarAndErrors) {
    const double x[2] = {0.5, 2.0};
    EXPECT_DOUBLE_EQ(Expression::parse("1 + 2*x1^2 - x2/4")(x), 1.0);
    EXPECT_DOUBLE_EQ(Expression::parse("-2^2")(x), -4.0);
    EXPECT_DOUBLE_EQ(Expression::parse("indicator(0.4, 0.6, x1)")(x), 1.0);
    EXPECT_DOUBLE_EQ(Expression::parse("indicator(0.4, 0.45, x1)")(x), 0.0);
    EXPECT_NEAR(Expression::parse("exp(0) + sin(pi/2) + cos(0) + abs(-1)")(x), 4.0, 1e-15);
    EXPECT_THROW(Expression::parse("1 +"), ArgumentError);
    EXPECT_THROW(Expression::parse("x3", 2), ArgumentError);
    EXPECT_THROW(Expression::parse("foo(1)"), ArgumentError);
}

TEST(SampleCoefficients, FreeCase) {
    const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 0.1);
    const CoefficientField c = sample_coefficients(d, FieldSpec::free(1), 1);
    EXPECT_TRUE(c.is_free());
    EXPECT_TRUE(c.is_real());
    EXPECT_DOUBLE_EQ(c.eps_a(), 1.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_DOUBLE_EQ(c.a(0, d.node(i)), 1.0);
        EXPECT_DOUBLE_EQ(c.theta(0, d.node(i)), 0.0);
        EXPECT_DOUBLE_EQ(c.q(d.node(i)), 0.0);
    }
}

TEST(SampleCoefficients, IndicatorPotential) {
    const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 0.05);
    const FieldSpec s = FieldSpec::from_json({{"q", "indicator(0.4, 0.6, x1)"}}, 1);
    const CoefficientField c = sample_coefficients(d, s, 1);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = d.coords(i)[0];
        // nodes on an endpoint depend on rounding of the lattice coordinate
        if (std::abs(x - 0.4) < 1e-9 || std::abs(x - 0.6) < 1e-9) continue;
        const bool inside = x > 0.4 && x < 0.6;
        EXPECT_DOUBLE_EQ(c.q(d.node(i)), inside ? 1.0 : 0.0) << "x = " << x;
    }
}

TEST(SampleCoefficients, EpsAIsSampledMinimum) {
    const GridDomain d = build_domain(IntervalShape{-0.5, 0.5}, 0.05);
    const FieldSpec s = FieldSpec::from_json(
        {{"a", "1 + exp(-x1^2/(1 - 4*x1^2 + 0.001)) * indicator(-0.5, 0.5, x1)"}, {"R0", 0.6}}, 1);
    const CoefficientField c = sample_coefficients(d, s, 1);
    EXPECT_DOUBLE_EQ(c.eps_a(), 1.0);
    EXPECT_GT(c.max_a(), 1.9);
}

TEST(SampleCoefficients, Violations) {
    const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 0.1);
    EXPECT_THROW(sample_coefficients(d, FieldSpec::from_json({{"a", "x1 - 0.5"}}, 1), 1), CoefficientError);
    EXPECT_THROW(sample_coefficients(d, FieldSpec::from_json({{"q", "-1"}}, 1), 1), CoefficientError);
    EXPECT_THROW(sample_coefficients(d, FieldSpec::from_json({{"a", "2"}, {"R0", 0.5}}, 1), 1),
                 CoefficientError);
    EXPECT_THROW(FieldSpec::from_json({{"extension", "other"}}, 1), ConfigError);
}
