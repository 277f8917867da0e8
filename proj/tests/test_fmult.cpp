#include <gtest/gtest.h>

#include "ovtl/fmult.hpp"

using namespace ovtl;

namespace {

struct Bench {
    Grid g;
    LPFamily fam;
    SymbolSequence rho;
    FieldGenerator gen;
    explicit Bench(int d, long N, int n = 2)
        : g(d, N), fam(make_lp_family(g)), rho(lp_sequence(fam, fam.j_max())), gen(band_limited_generator(g, n, 0, N / 4.0))
    {
    }
};

} // namespace

TEST(Multiplier, IdentityGivesRatioOne)
{
    Bench s(1, 128);
    SymbolSequence one = constant_sequence(1.0, s.fam.j_max());
    for (double p : {1.0, 2.0, 3.0}) {
        MultiplierCertificate c = empirical_square_bound(one, s.rho, s.gen, s.fam, 0.5, p, 3);
        EXPECT_NEAR(c.r_emp, 1.0, 1e-12);
        EXPECT_TRUE(c.pass());
        MultiplierCertificate k = empirical_conic_bound(one, s.rho, s.gen, s.fam, 0.5, p, 2);
        EXPECT_NEAR(k.r_emp, 1.0, 1e-12);
    }
    EXPECT_NEAR(exact_l2_bound(one, s.rho, s.g), 1.0, 1e-15);
}

TEST(Multiplier, ZeroSequence)
{
    Bench s(1, 64);
    SymbolSequence zero = constant_sequence(0.0, s.fam.j_max());
    MultiplierCertificate c = empirical_conic_bound(zero, s.rho, s.gen, s.fam, 0, 2, 2);
    EXPECT_EQ(c.r_emp, 0.0);
    EXPECT_EQ(c.c_hyp, 0.0);
}

TEST(Multiplier, BesselDilateBoundedAndStable)
{
    Bench s(2, 32);
    SymbolSequence b = bessel_sequence(2, 1.0, s.fam.j_max());
    MultiplierCertificate c = empirical_square_bound(b, s.rho, s.gen, s.fam, 0.5, 1, 10);
    EXPECT_TRUE(c.pass());
    double lo = *std::min_element(c.ratios.begin(), c.ratios.end());
    EXPECT_GT(lo, 0);
    EXPECT_LE(c.r_emp / lo, 2.0);
    MultiplierCertificate e = empirical_square_bound(b, s.rho, s.gen, s.fam, 0, 2, 5);
    EXPECT_LE(e.r_emp, exact_l2_bound(b, s.rho, s.g) * (1 + 1e-12));
    EXPECT_TRUE(empirical_conic_bound(b, s.rho, s.gen, s.fam, 0.5, 1, 3).pass());
}

TEST(Multiplier, HypothesisViolationsThrow)
{
    Bench s(1, 64);
    SymbolSequence one = constant_sequence(1.0, s.fam.j_max());
    SymbolSequence off = s.rho;
    off.member = [f = s.fam](int j, const Vec& xi) { return cplx(f.member(j + 1, xi, 1), 0); };
    EXPECT_THROW(empirical_square_bound(one, off, s.gen, s.fam, 0, 2, 1), HypothesisError);
    SymbolSequence noprof = s.rho;
    noprof.profile = nullptr;
    EXPECT_NO_THROW(empirical_square_bound(one, noprof, s.gen, s.fam, 0, 2, 1));
    EXPECT_THROW(empirical_square_bound(one, noprof, s.gen, s.fam, 0, 1, 1), HypothesisError);
}

TEST(Hypothesis, IdentityIsFamilyConstant)
{
    Grid g(2, 64);
    LPFamily fam = make_lp_family(g);
    double sigma = default_sigma(2), W = default_window(g);
    HypothesisTable t = hypothesis_table(constant_sequence(1.0, 3), sigma, fam);
    double base = hsigma_norm(make_symbol(g, [&](const Vec& xi) { return cplx(fam.phi(xi, 2), 0); }, "phi", W), sigma);
    double zero = hsigma_norm(make_symbol(g, [&](const Vec& xi) {
        return cplx(fam.member(0, xi, 2) + fam.member(1, xi, 2), 0);
    }, "z", W), sigma);
    for (auto& e : t.entries)
        if (e.j > 0) EXPECT_NEAR(e.value, base, 1e-13 * base);
    EXPECT_NEAR(t.zero_part, zero, 1e-13 * zero);
    EXPECT_EQ(t.entries.size(), 1u + 3 * 5);
    EXPECT_EQ(hypothesis_constant(constant_sequence(0.0, 3), sigma, fam), 0.0);
}

TEST(Hypothesis, BesselDilateTablePattern)
{
    Grid g(1, 256);
    LPFamily fam = make_lp_family(g);
    double beta = 1.5, sigma = default_sigma(1);
    HypothesisTable t = hypothesis_table(bessel_sequence(1, beta, 5), sigma, fam);
    for (auto& e : t.entries) {
        if (e.j == 0) continue;
        Symbol m = make_symbol(g, [&](const Vec& xi) {
            double r = std::ldexp(std::abs(xi[0]), e.j + e.k);
            return cplx(std::exp2(-e.j * beta) * std::pow(1 + r * r, beta / 2) * fam.phi(xi, 1), 0);
        }, "ref", t.window);
        EXPECT_NEAR(e.value, hsigma_norm(m, sigma), 1e-13 * e.value);
        EXPECT_TRUE(std::isfinite(e.value));
    }
}

TEST(Hypothesis, HomogeneousAndShiftInvariant)
{
    Grid g(1, 256);
    LPFamily fam = make_lp_family(g);
    double sigma = default_sigma(1);
    SymbolSequence r = riesz_sequence(1, 0.5, 5);
    double base = hypothesis_table(r, sigma, fam).sup_part;
    for (int K = -2; K <= 2; ++K) EXPECT_NEAR(hypothesis_table(shifted(r, K), sigma, fam).sup_part, base, 0.01 * base);
    SymbolSequence b = bessel_sequence(1, 1.0, 4);
    double c = hypothesis_constant(b, sigma, fam);
    EXPECT_NEAR(hypothesis_constant(b.scaled(3.5), sigma, fam), 3.5 * c, 1e-12 * c);
}

TEST(Hypothesis, UnresolvableWindowThrows)
{
    Grid g(1, 64);
    LPFamily fam = make_lp_family(g);
    SymbolSequence one = constant_sequence(1.0, 2);
    EXPECT_THROW(hypothesis_constant(one, 1.0, fam, 32), ResolutionError);
    EXPECT_THROW(hypothesis_constant(one, 1.0, fam, 4), ResolutionError);
    try {
        hypothesis_constant(one, 1.0, fam, 32);
    } catch (const ResolutionError& e) {
        EXPECT_NE(std::string(e.what()).find("(j,k)"), std::string::npos);
    }
}

TEST(CzKernel, ZeroAndLowPass)
{
    Grid g(1, 512);
    LPFamily fam = make_lp_family(g);
    CZEstimates z = cz_kernel_estimates(constant_sequence(0.0, 2), default_sigma(1), fam);
    EXPECT_EQ(z.e1, 0.0);
    EXPECT_EQ(z.e2, 0.0);
    EXPECT_EQ(z.e3, 0.0);
    SymbolSequence low = lp_sequence(fam, 2);
    low.member = [fam](int j, const Vec& xi) { return cplx(j == 0 ? fam.member(0, xi, 1) : 0.0, 0); };
    CZEstimates e = cz_kernel_estimates(low, default_sigma(1), fam);
    EXPECT_NEAR(e.e1, 1.0, 1e-15);
    EXPECT_TRUE(std::isfinite(e.e2) && e.e2 > 0);
    EXPECT_TRUE(std::isfinite(e.e3) && e.e3 > 0);
    EXPECT_GT(e.phi_norm, 0);
}

TEST(CzKernel, ConstantStableUnderRefinement)
{
    for (int which = 0; which < 2; ++which) {
        std::vector<double> cs;
        for (long N : {512L, 1024L}) {
            Grid g(1, N);
            LPFamily fam = make_lp_family(g);
            SymbolSequence s = which == 0 ? lp_sequence(fam, 3) : product(bessel_sequence(1, 1.0, 3), lp_sequence(fam, 3));
            CZEstimates e = cz_kernel_estimates(s, default_sigma(1), fam);
            cs.push_back(e.constant());
        }
        EXPECT_NEAR(cs[1] / cs[0], 1.0, 0.2) << which;
    }
}

TEST(Certificate, SectionCarriesParameters)
{
    Bench s(1, 64);
    MultiplierCertificate c = empirical_square_bound(constant_sequence(1.0, s.fam.j_max()), s.rho, s.gen, s.fam, 0, 2, 1);
    Section sec = c.to_section();
    EXPECT_EQ(*sec.find("pass"), "true");
    EXPECT_EQ(*sec.find("margin"), "100");
    EXPECT_TRUE(sec.find("window"));
}
