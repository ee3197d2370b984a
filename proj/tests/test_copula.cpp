#include "fgmx/copula.hpp"
#include "fgmx/random.hpp"
#include "fgmx/subfamilies.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace fgmx;

namespace {

CopulaSpec product() { return validated(CopulaSpec(Func1D::constant(0.0), Func1D::identity(), "product")); }

CopulaSpec ca_direct(double a) {
    Func1D theta = Func1D([a](double t) { return std::pow(t, -a) - 1.0; })
                       .with_derivative([a](double t) { return -a * std::pow(t, -a - 1.0); });
    return validated(CopulaSpec(theta, Func1D::identity(), "ca"));
}

CopulaSpec b11_direct(double s) {
    Func1D theta = Func1D([s](double t) { return s * (1.0 / t - 1.0); })
                       .with_derivative([s](double t) { return -s / (t * t); });
    return validated(CopulaSpec(theta, Func1D::identity(), "b11"));
}

std::vector<CopulaSpec> battery() {
    return {product(),
            validated(fgm_spec(1.0)),
            validated(fgm_spec(-1.0)),
            validated(fgm_spec(0.3)),
            ca_direct(0.5),
            ca_direct(1.0),
            b11_direct(0.5),
            validated(reciprocal_spec()),
            make_named({Family::gpd, {{"alpha", 0.4}, {"sigma", 2.0}}, {}}),
            make_named({Family::uniform_k, {{"alpha", 0.8}}, {}}),
            make_named({Family::exponential_k, {}, {}}),
            make_named({Family::constant_theta, {{"theta", -0.8}}, {{"phi", "t*(1-t)^2"}}}),
            make_named({Family::durante_f, {}, {{"f", "t^0.3"}}})};
}

} // namespace

TEST(Validate, FgmInsideRange) {
    const ValidityReport r = validate(fgm_spec(0.5));
    EXPECT_TRUE(r.verdict);
    EXPECT_NEAR(r.cond_c.value, -0.5, 1e-3);
    EXPECT_GE(r.cond_c.value, -0.5);
    EXPECT_EQ(r.n_grid, 512);
    EXPECT_EQ(r.eps, 1e-4);
}

TEST(Validate, FgmOutsideRangeFailsConditionC) {
    const ValidityReport r = validate(fgm_spec(1.2));
    EXPECT_FALSE(r.verdict);
    EXPECT_TRUE(r.cond_a.pass && r.cond_b.pass && r.cond_d.pass);
    EXPECT_FALSE(r.cond_c.pass);
    // oracle: min over u <= v of 1.2 (1-2u)(1-2v) on [eps, 1-eps] is -1.2 (1-2 eps)^2
    EXPECT_NEAR(r.cond_c.value, -1.2 * (1 - 2e-4) * (1 - 2e-4), 1e-9);
    ASSERT_TRUE(r.cond_c.where.has_value());
    const Point2 w = *r.cond_c.where;
    EXPECT_LE(w.u, w.v);
    EXPECT_TRUE((w.u < 0.01 && w.v > 0.99));
}

TEST(Validate, IncreasingThetaFailsConditionD) {
    const ValidityReport r = validate(CopulaSpec(Func1D::identity(), fgm_phi()));
    EXPECT_FALSE(r.verdict);
    EXPECT_FALSE(r.cond_d.pass);
    EXPECT_NEAR(r.cond_d.value, 1.0, 1e-12);
}

TEST(Validate, ConditionsAAndB) {
    const ValidityReport a = validate(CopulaSpec(Func1D::constant(0.1), Func1D::from_expr("(t+0.1)*(1-t)")));
    EXPECT_FALSE(a.cond_a.pass);
    EXPECT_NEAR(a.cond_a.value, 0.1, 1e-12);
    const ValidityReport b = validate(CopulaSpec(Func1D::constant(0.1), Func1D::from_expr("t*(2-t)")));
    EXPECT_FALSE(b.cond_b.pass);
    EXPECT_NEAR(b.cond_b.value, 0.1, 1e-12);
}

TEST(Validate, EvaluationErrorsBecomeFailures) {
    // ln(t - 0.5) is undefined on half the square
    const ValidityReport r = validate(CopulaSpec(Func1D::from_expr("ln(t-0.5)"), Func1D::identity()));
    EXPECT_FALSE(r.verdict);
}

TEST(Validate, BadOptions) {
    ValidateOptions o;
    o.n_grid = 10;
    EXPECT_THROW(validate(fgm_spec(0.5), o), ContractError);
    o = {};
    o.eps = 0.6;
    EXPECT_THROW(validate(fgm_spec(0.5), o), ContractError);
}

TEST(Validate, VerdictIsConjunction) {
    for (double th : {-1.5, -1.0, 0.0, 0.7, 1.3}) {
        const ValidityReport r = validate(fgm_spec(th));
        EXPECT_EQ(r.verdict, r.cond_a.pass && r.cond_b.pass && r.cond_c.pass && r.cond_d.pass);
    }
}

TEST(Cdf, Examples) {
    EXPECT_DOUBLE_EQ(cdf(product(), 0.3, 0.7), 0.21);
    EXPECT_NEAR(cdf(ca_direct(1.0), 0.3, 0.7), 0.3, 1e-15);
    EXPECT_DOUBLE_EQ(cdf(validated(fgm_spec(1.0)), 0.5, 0.5), 0.3125);
}

TEST(Cdf, RequiresValidation) {
    EXPECT_THROW(cdf(fgm_spec(0.5), 0.3, 0.3), ContractError);
    const CopulaSpec bad = validated(fgm_spec(2.0));
    EXPECT_THROW(cdf(bad, 0.3, 0.3), ContractError);
    EXPECT_THROW(cdf(validated(fgm_spec(0.5)), 1.2, 0.3), ContractError);
}

TEST(RectangleMass, Examples) {
    EXPECT_NEAR(rectangle_mass(ca_direct(0.5), 0, 1, 0, 1), 1.0, 1e-15);
    EXPECT_NEAR(rectangle_mass(product(), 0.2, 0.5, 0.4, 0.9), 0.15, 1e-15);
    EXPECT_NEAR(rectangle_mass(b11_direct(0.5), 0.4, 0.6, 0.4, 0.6), 0.12, 1e-14);
}

TEST(DensityAc, Examples) {
    EXPECT_DOUBLE_EQ(density_ac(product(), 0.3, 0.8), 1.0);
    EXPECT_NEAR(density_ac(validated(fgm_spec(1.0)), 0.25, 0.75), 0.75, 1e-15);
    EXPECT_NEAR(density_ac(b11_direct(0.5), 0.3, 0.8), 0.5, 1e-14);
    EXPECT_THROW(density_ac(product(), 0.4, 0.4), ContractError);
}

TEST(Decompose, Examples) {
    const CopulaSpec fgm = validated(fgm_spec(0.7));
    for (double u : {0.2, 0.6, 1.0}) EXPECT_EQ(decompose(fgm, u, 0.5).singular, 0.0);
    const Decomposition d = decompose(ca_direct(0.5), 1.0, 1.0);
    // oracle: -int_0^1 theta' t^2 = 0.5 int t^0.5 = 1/3
    EXPECT_NEAR(d.singular, 1.0 / 3.0, 1e-9);
    EXPECT_NEAR(d.ac + d.singular, 1.0, 1e-9);
    const Decomposition z = decompose(ca_direct(0.5), 0.0, 0.4);
    EXPECT_EQ(z.ac, 0.0);
    EXPECT_EQ(z.singular, 0.0);
}

TEST(Decompose, SingularPartIsNonDecreasing) {
    const CopulaSpec s = ca_direct(0.5);
    double prev = 0.0;
    for (int i = 1; i <= 20; ++i) {
        const double cur = decompose(s, i / 20.0, 1.0).singular;
        EXPECT_GE(cur, prev - 1e-12);
        prev = cur;
    }
}

TEST(Decompose, AbsolutelyContinuousPartMatchesIntegratedDensity) {
    QuadratureConfig coarse;
    coarse.abs_tol = coarse.rel_tol = 1e-9;
    for (const CopulaSpec& s : {validated(fgm_spec(0.8)), ca_direct(0.5), b11_direct(0.4)}) {
        for (auto [u, v] : {std::pair{0.3, 0.8}, std::pair{0.7, 0.7}, std::pair{0.9, 0.2}}) {
            // split the inner integral at the diagonal where the density kinks
            auto inner = [&](double x) {
                auto f = [&](double y) { return y == x ? 1.0 : density_ac(s, x, y); };
                const double cut = std::clamp(x, 0.0, v);
                return integrate_fn(f, 0.0, cut, coarse).value + integrate_fn(f, cut, v, coarse).value;
            };
            const double ac = integrate_fn(inner, 0.0, u, coarse).value;
            EXPECT_NEAR(ac, decompose(s, u, v).ac, 1e-6) << s.label() << " at " << u << "," << v;
        }
    }
}

TEST(Conditional, Examples) {
    for (double v : {0.1, 0.5, 0.9}) EXPECT_NEAR(conditional_cdf(product(), 0.4, v), v, 1e-15);
    EXPECT_NEAR(conditional_cdf(b11_direct(0.5), 0.3, 0.8), 0.9, 1e-14);
    const ConditionalSlice slice(ca_direct(0.5), 0.5);
    EXPECT_NEAR(slice.jump(), 0.25 * 0.5 * std::pow(0.5, -1.5), 1e-14);
    EXPECT_NEAR(slice.jump(), 0.35355339059327373, 1e-14);
}

TEST(Conditional, ShapeAndRightContinuity) {
    for (const CopulaSpec& s : battery()) {
        for (double u : {0.05, 0.3, 0.5, 0.77, 0.95}) {
            EXPECT_NEAR(conditional_cdf(s, u, 0.0), 0.0, 1e-12);
            EXPECT_NEAR(conditional_cdf(s, u, 1.0), 1.0, 1e-12);
            double prev = 0.0;
            for (int i = 1; i <= 200; ++i) {
                const double f = conditional_cdf(s, u, i / 200.0);
                EXPECT_GE(f, prev - 1e-9) << s.label();
                prev = f;
            }
            const ConditionalSlice slice(s, u);
            EXPECT_NEAR(conditional_cdf(s, u, u), slice.at_u(), 1e-12);
            EXPECT_NEAR(slice(u - 1e-9), slice.left_limit(), 1e-6);
        }
    }
}

TEST(Conditional, IsThePartialDerivativeInU) {
    for (const CopulaSpec& s : battery()) {
        for (double u : {0.2, 0.6}) {
            for (double v : {0.1, 0.45, 0.9}) {
                const double h = 1e-6;
                const double diff = (cdf(s, u + h, v) - cdf(s, u, v)) / h;
                EXPECT_NEAR(diff, conditional_cdf(s, u, v), 1e-4) << s.label() << " " << u << "," << v;
            }
        }
    }
}

TEST(Vstar, Examples) {
    EXPECT_EQ(endpoint_vstar(validated(fgm_spec(0.5))), 1.0);
    Func1D hinge = Func1D([](double t) { return std::max(0.0, 0.5 - t); })
                       .with_derivative([](double t) { return t < 0.5 ? -1.0 : 0.0; });
    const CopulaSpec s = validated(CopulaSpec(hinge, fgm_phi()));
    ASSERT_TRUE(s.is_valid());
    EXPECT_NEAR(endpoint_vstar(s), 0.5, 1e-9);
    EXPECT_EQ(endpoint_vstar(ca_direct(0.5)), 1.0);
    EXPECT_THROW(endpoint_vstar(product()), ContractError);
}

TEST(Property, GroundedAndUniformMargins) {
    CounterRng rng(11);
    for (const CopulaSpec& s : battery()) {
        ASSERT_TRUE(s.is_valid()) << s.label();
        for (int i = 0; i < 200; ++i) {
            const double x = rng.next();
            EXPECT_NEAR(cdf(s, x, 0.0), 0.0, 1e-9);
            EXPECT_NEAR(cdf(s, 0.0, x), 0.0, 1e-9);
            EXPECT_NEAR(cdf(s, x, 1.0), x, 1e-9);
            EXPECT_NEAR(cdf(s, 1.0, x), x, 1e-9);
            // approach the edges from inside as well
            EXPECT_NEAR(cdf(s, x, 1.0 - 1e-12), x, 1e-9) << s.label();
            EXPECT_NEAR(cdf(s, 1e-13, x), 0.0, 1e-9) << s.label();
        }
    }
}

TEST(Property, TwoIncreasing) {
    CounterRng rng(12);
    for (const CopulaSpec& s : battery()) {
        for (int i = 0; i < 1000; ++i) {
            double u1 = rng.next(), u2 = rng.next(), v1 = rng.next(), v2 = rng.next();
            if (u1 > u2) std::swap(u1, u2);
            if (v1 > v2) std::swap(v1, v2);
            EXPECT_GE(rectangle_mass(s, u1, u2, v1, v2), -1e-12) << s.label();
        }
    }
}

TEST(Property, SymmetryAndFrechetBounds) {
    CounterRng rng(13);
    for (const CopulaSpec& s : battery()) {
        for (int i = 0; i < 500; ++i) {
            const double u = rng.next(), v = rng.next();
            const double c = cdf(s, u, v);
            EXPECT_EQ(c, cdf(s, v, u));
            EXPECT_GE(c, std::max(u + v - 1.0, 0.0) - 1e-9);
            EXPECT_LE(c, std::min(u, v) + 1e-9);
        }
    }
}

TEST(Validate, ProductCopulaIsAcceptedWithNote) {
    const ValidityReport r = validate(CopulaSpec(Func1D::constant(0.0), Func1D::identity()));
    EXPECT_TRUE(r.verdict);
    ASSERT_FALSE(r.notes.empty());
}
