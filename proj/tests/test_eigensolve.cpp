#include <sstream>

#include <gtest/gtest.h>

#include "kreinlab/assembly.hpp"
#include "kreinlab/eigensolve.hpp"

using namespace kreinlab;

namespace {

std::shared_ptr<const CoefficientField> sampled(const GridDomain& d, const FieldSpec& s, int m) {
    return std::make_shared<const CoefficientField>(sample_coefficients(d, s, m));
}

Spectrum make_spectrum(std::vector<double> v) {
    Spectrum s;
    s.values = std::move(v);
    s.residuals.assign(s.values.size(), 0.0);
    s.problem_size = s.values.size();
    return s;
}

}  // namespace

TEST(Counting, StrictInequality) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const Spectrum s = make_spectrum({pi2, 4 * pi2, 9 * pi2});
    EXPECT_EQ(counting(s, 10.0).count, 1u);
    EXPECT_EQ(counting(s, pi2).count, 0u);
    EXPECT_EQ(counting(s, std::nextafter(pi2, 100.0)).count, 1u);
}

TEST(Counting, MultiplicityOnUnitSquare) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const Spectrum s = make_spectrum({2 * pi2, 5 * pi2, 5 * pi2, 8 * pi2});
    EXPECT_EQ(counting(s, 50.0).count, 3u);
}

TEST(Counting, PositiveOnlyAndCompleteness) {
    Spectrum s = make_spectrum({-1.0, 0.0, 1.0, 2.0});
    EXPECT_EQ(counting(s, 3.0).count, 2u);
    s.problem_size = 10;
    EXPECT_FALSE(counting(s, 3.0).complete);
    EXPECT_TRUE(counting(s, 1.5).complete);
}

TEST(Counting, ScalingAndMonotone) {
    const Spectrum s = make_spectrum({1.0, 1.5, 1.5, 4.0, 7.0});
    Spectrum t = s;
    for (double& v : t.values) v *= 2.5;
    std::size_t prev = 0;
    for (double lam = 0.25; lam < 10.0; lam += 0.25) {
        EXPECT_EQ(counting(t, 2.5 * lam).count, counting(s, lam).count);
        EXPECT_GE(counting(s, lam).count, prev);
        prev = counting(s, lam).count;
    }
}

TEST(TrustCutoff, Rules) {
    const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 0.01);
    EXPECT_NEAR(trust_cutoff(d, 1, 0.1), 4000.0, 1e-9);
    EXPECT_NEAR(trust_cutoff(d, 1, 1.0), 40000.0, 1e-8);
    EXPECT_NEAR(trust_cutoff(d, 2, 1.0), 40000.0 * 40000.0, 1e-3);
    EXPECT_THROW(trust_cutoff(d, 1, 0.0), ArgumentError);
}

TEST(Solvers, DenseResidualsAndOrder) {
    const GridDomain d = build_domain(DiskShape{{0.0, 0.0}, 1.0}, 0.15);
    const auto c = sampled(d, FieldSpec::from_json({{"b", {"x2", "-x1"}}, {"q", "1"}}, 2), 1);
    const KreinPencil p = assemble_krein_pencil(d, c, 1);
    const Spectrum s = pencil_eigs(p.numerator, p.denominator);
    EXPECT_TRUE(s.complete());
    for (std::size_t j = 0; j < s.values.size(); ++j) {
        EXPECT_LE(s.residuals[j], 1e-8);
        if (j > 0) {
            EXPECT_LE(s.values[j - 1], s.values[j]);
        }
    }
}

TEST(Solvers, LanczosMatchesDense) {
    const GridDomain d = build_domain(DiskShape{{0.0, 0.0}, 1.0}, 0.07);
    for (const auto& spec : {FieldSpec::free(2), FieldSpec::from_json({{"b", {"2*x2", "0"}}, {"q", "x1^2"}}, 2)}) {
        const auto c = sampled(d, spec, 2);
        for (int m = 1; m <= 2; ++m) {
            EigenOptions it;
            it.dense_threshold = 50;
            const HermitianOperator f = assemble_friedrichs(d, c, m);
            const Spectrum a = hermitian_eigs(f, 8);
            const Spectrum b = hermitian_eigs(f, 8, it);
            const KreinPencil p = assemble_krein_pencil(d, c, m);
            const Spectrum pa = pencil_eigs(p.numerator, p.denominator, 8);
            const Spectrum pb = pencil_eigs(p.numerator, p.denominator, 8, it);
            for (int j = 0; j < 8; ++j) {
                EXPECT_NEAR(a.values[j], b.values[j], 1e-8 * a.values[j]);
                EXPECT_NEAR(pa.values[j], pb.values[j], 1e-8 * pa.values[j]);
            }
        }
    }
}

TEST(Solvers, FormMonotonicity) {
    // A = F(q = 0) <= B = F(q = 5): N(lambda; B) <= N(lambda; A).
    const GridDomain d = build_domain(BoxShape{{0.0, 0.0}, {1.0, 1.0}}, 0.1);
    const Spectrum a = hermitian_eigs(assemble_friedrichs(d, sampled(d, FieldSpec::free(2), 1), 1));
    const Spectrum b =
        hermitian_eigs(assemble_friedrichs(d, sampled(d, FieldSpec::from_json({{"q", "5"}}, 2), 1), 1));
    for (double lam = 10.0; lam < 500.0; lam += 7.0) EXPECT_LE(counting(b, lam).count, counting(a, lam).count);
}

TEST(Solvers, AllRequestedAboveThresholdIsAnError) {
    const GridDomain d = build_domain(IntervalShape{0.0, 1.0}, 0.01);
    EigenOptions it;
    it.dense_threshold = 10;
    const HermitianOperator f = assemble_friedrichs(d, sampled(d, FieldSpec::free(1), 1), 1);
    EXPECT_THROW(hermitian_eigs(f, all_eigenvalues, it), ArgumentError);
}

TEST(SpectrumCsv, Columns) {
    Spectrum s = make_spectrum({1.0, 2.0});
    s.trust_cutoff = 1.5;
    std::ostringstream out;
    write_spectrum_csv(out, s);
    EXPECT_EQ(out.str(), "index,eigenvalue,residual,trusted\n1,1,0,1\n2,2,0,0\n");
}
