#include "fgmx/measures.hpp"
#include "fgmx/random.hpp"
#include "fgmx/sampler.hpp"
#include "fgmx/subfamilies.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fgmx;

namespace {

CopulaSpec named(Family f, std::map<std::string, double> v, std::map<std::string, std::string> e = {}) {
    return make_named({f, std::move(v), std::move(e)});
}

} // namespace

TEST(KGenerator, InverseSurvivalExamples) {
    const CopulaSpec ca = make_k_copula(ca_generator(0.5));
    const CopulaSpec b11 = make_k_copula(b11_generator(0.5));
    const CopulaSpec ex = make_k_copula(exponential_generator());
    for (double u : {0.05, 0.3, 0.7, 1.0}) {
        EXPECT_NEAR(ca.theta()(u), std::pow(u, -0.5) - 1.0, 1e-12);
        EXPECT_NEAR(b11.theta()(u), 0.5 * (1.0 / u - 1.0), 1e-12);
        EXPECT_NEAR(ex.theta()(u), -std::log(u), 1e-12);
    }
    EXPECT_TRUE(ex.is_valid());
    EXPECT_EQ(ex.report()->method, "hazard");
}

TEST(KGenerator, RejectsSurvivalNotStartingAtOne) {
    const Func1D surv([](double x) { return 0.9 * std::pow(1 + x, -0.5); });
    const Func1D dens([](double x) { return 0.45 * std::pow(1 + x, -1.5); });
    const Func1D inv([](double p) { return std::pow(p / 0.9, -2.0) - 1.0; });
    EXPECT_THROW(make_k_generator(surv, dens, inv, kInf, "scaled"), ContractError);
}

TEST(Hazard, GpdPassesExactlyOnItsDomain) {
    for (double a : {0.3, 0.7, 1.0})
        for (double s : {0.5, 1.0}) EXPECT_TRUE(check_hazard(gpd_generator(a, s)).pass) << a << " " << s;
    const HazardCheck bad = check_hazard(gpd_generator(1.0, 2.0));
    EXPECT_FALSE(bad.pass);
    EXPECT_EQ(bad.witness_t, 0.0);
    EXPECT_FALSE(check_hazard(gpd_generator(0.8, 1.5)).pass);
    const CopulaSpec s = make_k_copula(gpd_generator(1.0, 2.0));
    EXPECT_FALSE(s.is_valid());
    EXPECT_FALSE(s.report()->cond_c.pass);
}

TEST(Hazard, UniformPasses) {
    for (double a : {0.2, 0.6, 1.0}) EXPECT_TRUE(check_hazard(uniform_generator(a)).pass);
}

TEST(RhoK, Examples) {
    EXPECT_NEAR(rho_k(ca_generator(0.5)), 3.0 / 7.0, 1e-9);
    EXPECT_NEAR(rho_k(b11_generator(0.3)), 0.3, 1e-9);
    EXPECT_NEAR(rho_k(exponential_generator()), 0.75, 1e-9);
}

TEST(LambdaK, Examples) {
    EXPECT_NEAR(lambda_k(ca_generator(0.4)), 0.4, 1e-14);
    EXPECT_NEAR(lambda_k(uniform_generator(0.6)), 0.6, 1e-14);
    EXPECT_NEAR(lambda_k(exponential_generator()), 1.0, 1e-14);
}

TEST(GpdInversion, Examples) {
    const GpdParams b = gpd_from_rho_lambda(0.3, 0.3);
    EXPECT_NEAR(b.alpha, 1.0, 1e-14);
    EXPECT_NEAR(b.sigma, 0.3, 1e-14);
    const GpdParams c = gpd_from_rho_lambda(3.0 / 7.0, 0.5);
    EXPECT_NEAR(c.alpha, 0.5, 1e-12);
    EXPECT_NEAR(c.sigma, 1.0, 1e-12);
    try {
        gpd_from_rho_lambda(0.3, 0.5);
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("lambda < 4 rho / 3"), std::string::npos);
    }
    EXPECT_THROW(gpd_from_rho_lambda(0.5, 0.4), DomainError);
}

TEST(MakeNamed, Examples) {
    EXPECT_NEAR(spearman_rho(named(Family::fgm, {{"theta", 1.0}})), 1.0 / 3.0, 1e-9);
    const CopulaSpec ct = named(Family::constant_theta, {{"theta", 2.0}}, {{"phi", "t*(1-t)^2"}});
    ASSERT_TRUE(ct.is_valid());
    EXPECT_EQ(upper_tail_dep(ct), 0.0);
    EXPECT_NEAR(spearman_rho(validated(reciprocal_spec())), 0.6, 1e-8);
}

TEST(MakeNamed, ParameterDomains) {
    EXPECT_THROW(named(Family::ca, {{"alpha", 1.2}}), DomainError);
    EXPECT_THROW(named(Family::b11, {{"sigma", 0.0}}), DomainError);
    EXPECT_THROW(named(Family::gpd, {{"alpha", 0.8}, {"sigma", 1.5}}), DomainError);
    EXPECT_THROW(named(Family::uniform_k, {{"alpha", 1.5}}), DomainError);
    EXPECT_THROW(named(Family::fgm, {{"theta", 1.5}}), DomainError);
    EXPECT_THROW(named(Family::ca, {}), DomainError);
    EXPECT_THROW(family_from_string("clayton"), DomainError);
    EXPECT_EQ(family_tags().size(), 8u);
}

TEST(MakeNamed, DuranteRequiresUnitEndpoint) {
    // f(t) = sqrt(t): C = min(u,v) sqrt(max(u,v)), rho = 12 int int C - 3 = 3/7
    const CopulaSpec d = named(Family::durante_f, {}, {{"f", "sqrt(t)"}});
    ASSERT_TRUE(d.is_valid());
    EXPECT_NEAR(spearman_rho(d), 3.0 / 7.0, 1e-8);
    EXPECT_NEAR(cdf(d, 0.3, 0.6), 0.3 * std::sqrt(0.6), 1e-14);
    EXPECT_THROW(named(Family::durante_f, {}, {{"f", "0.5*sqrt(t)"}}), DomainError);
}

TEST(Property, ClosedFormMatchesMachinery) {
    std::vector<KGenerator> gens;
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        gens.push_back(ca_generator(p));
        gens.push_back(b11_generator(p));
        gens.push_back(uniform_generator(p));
        gens.push_back(gpd_generator(p, 1.0 / (p + 0.2)));
    }
    gens.push_back(exponential_generator());
    for (const KGenerator& k : gens) {
        const CopulaSpec s = make_k_copula(k);
        ASSERT_TRUE(s.is_valid()) << k.label;
        EXPECT_NEAR(rho_k(k), spearman_rho(s), 1e-6) << k.label;
        EXPECT_NEAR(lambda_k(k), upper_tail_dep(s), 1e-6) << k.label;
    }
}

TEST(Property, CaIsWeightedGeometricMean) {
    CounterRng rng(11);
    for (double a : {0.2, 0.5, 0.9}) {
        const CopulaSpec s = named(Family::ca, {{"alpha", a}});
        for (int i = 0; i < 500; ++i) {
            const double u = rng.next(), v = rng.next();
            const double oracle = std::pow(std::min(u, v), a) * std::pow(u * v, 1.0 - a);
            EXPECT_NEAR(cdf(s, u, v), oracle, 1e-12);
        }
    }
}

TEST(Property, B11IsMixture) {
    CounterRng rng(12);
    for (double sg : {0.1, 0.5, 1.0}) {
        const CopulaSpec s = named(Family::b11, {{"sigma", sg}});
        for (int i = 0; i < 500; ++i) {
            const double u = rng.next(), v = rng.next();
            EXPECT_NEAR(cdf(s, u, v), sg * std::min(u, v) + (1 - sg) * u * v, 1e-12);
        }
    }
}

TEST(Property, B11DominatesCa) {
    for (int i = 1; i <= 20; ++i) {
        const double a = i / 20.0;
        EXPECT_GE(spearman_rho(named(Family::b11, {{"sigma", a}})) + 1e-12,
                  spearman_rho(named(Family::ca, {{"alpha", a}})));
    }
}

TEST(Property, VanishingThetaAtOneGivesNonNegativeRhoReachingOne) {
    for (double a : {0.05, 0.5, 0.99}) EXPECT_GE(spearman_rho(named(Family::ca, {{"alpha", a}})), 0.0);
    EXPECT_GT(spearman_rho(named(Family::ca, {{"alpha", 0.999}})), 0.998);
    EXPECT_GT(upper_tail_dep(named(Family::ca, {{"alpha", 0.999}})), 0.998);
}

TEST(Property, ReciprocalThetaBound) {
    for (double c : {0.5, 0.9, 1.0}) {
        const CopulaSpec s = validated(CopulaSpec(Func1D::from_expr(detail::format_number(c) + "/t"), fgm_phi()));
        EXPECT_TRUE(s.is_valid()) << c;
    }
    for (double c : {1.05, 1.1, 2.0}) {
        const CopulaSpec s = validated(CopulaSpec(Func1D::from_expr(detail::format_number(c) + "/t"), fgm_phi()));
        EXPECT_FALSE(s.is_valid()) << c;
    }
}

TEST(Fit, Examples) {
    const FitResult ca = invert_rho(3.0 / 7.0, {Family::ca, {}, {}});
    EXPECT_NEAR(ca.value, 0.5, 1e-9);
    EXPECT_EQ(ca.parameter, "alpha");

    const SampleBatch batch = sample(named(Family::b11, {{"sigma", 0.5}}), 5000, 2024);
    const FitResult b = fit_rho_inversion(batch.pairs, {Family::b11, {}, {}});
    EXPECT_GE(b.value, 0.45);
    EXPECT_LE(b.value, 0.55);
    EXPECT_EQ(b.n, 5000u);

    try {
        invert_rho(0.9, {Family::fgm, {}, {}});
        FAIL();
    } catch (const RangeError& e) {
        EXPECT_NEAR(e.lo(), -1.0 / 3.0, 1e-9);
        EXPECT_NEAR(e.hi(), 1.0 / 3.0, 1e-9);
    }
}

TEST(Fit, ConstantThetaAndSmallSamples) {
    // phi = t(1-t)^2: rho = 24 theta int phi Phi = theta / 12
    const FitResult r = invert_rho(0.05, {Family::constant_theta, {}, {{"phi", "t*(1-t)^2"}}});
    EXPECT_NEAR(r.value, 0.6, 1e-9);
    std::vector<std::pair<double, double>> tiny(10, {0.5, 0.5});
    EXPECT_THROW(fit_rho_inversion(tiny, {Family::ca, {}, {}}), ContractError);
}
