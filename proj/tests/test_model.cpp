#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "uvol/errors.hpp"
#include "uvol/model.hpp"
#include "uvol/payoff.hpp"

using namespace uvol;
using namespace uvol::model;

TEST(Curve, ConstantAndPiecewise) {
    Curve c(0.3);
    EXPECT_EQ(c(0.0), 0.3);
    EXPECT_EQ(c(5.0), 0.3);
    EXPECT_TRUE(c.is_constant());
    EXPECT_DOUBLE_EQ(c.integral(0.25, 0.75), 0.15);

    Curve p({0.0, 0.5, 1.0}, {1.0, 2.0, 0.0});
    EXPECT_FALSE(p.is_constant());
    EXPECT_DOUBLE_EQ(p(0.25), 1.5);
    EXPECT_DOUBLE_EQ(p(0.75), 1.0);
    EXPECT_EQ(p(-1.0), 1.0);  // flat beyond the knots
    EXPECT_EQ(p(3.0), 0.0);
    EXPECT_DOUBLE_EQ(p.min_value(), 0.0);
    EXPECT_DOUBLE_EQ(p.max_value(), 2.0);
    EXPECT_DOUBLE_EQ(p.integral(0.0, 1.0), 0.75 + 0.5);
    EXPECT_DOUBLE_EQ(p.integral(-1.0, 0.0), 1.0);
}

TEST(Curve, IntegralsMatchQuadrature) {
    Curve p({0.0, 0.3, 0.7, 1.0}, {0.2, -0.1, 0.4, 0.4});
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    for (auto [a, b] : {std::pair{0.0, 1.0}, {0.1, 0.9}, {0.35, 0.5}, {-0.2, 1.4}}) {
        double ref = 0.0, ref_sq = 0.0;
        std::vector<double> cuts{a};
        for (double k : p.times())
            if (k > a && k < b) cuts.push_back(k);
        cuts.push_back(b);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            ref += GK::integrate([&](double t) { return p(t); }, cuts[i], cuts[i + 1]);
            ref_sq += GK::integrate([&](double t) { return p(t) * p(t); }, cuts[i], cuts[i + 1]);
        }
        EXPECT_NEAR(p.integral(a, b), ref, 1e-13);
        EXPECT_NEAR(p.integral_of_square(a, b), ref_sq, 1e-13);
    }
}

TEST(Curve, RejectsBadKnots) {
    EXPECT_THROW(Curve({0.0, 0.0}, {1.0, 2.0}), InvalidInput);
    EXPECT_THROW(Curve({0.0, 1.0}, {1.0}), InvalidInput);
    EXPECT_THROW(Curve(std::nan("")), InvalidInput);
}

TEST(MarketModel, Validation) {
    MarketModel m;
    EXPECT_NO_THROW(m.validate());
    m.T = 0.0;
    EXPECT_THROW(m.validate(), InvalidInput);
    m.T = 1.0;
    m.sigma = Curve({0.0, 1.0}, {1.0, 1e-9});
    EXPECT_THROW(m.validate(), InvalidInput);
}

TEST(MarketModel, DerivedCoefficients) {
    MarketModel m;
    m.r = Curve({0.0, 1.0}, {0.01, 0.03});
    m.eta = Curve(0.07);
    m.mu = Curve({0.0, 0.5}, {0.5, 0.0});
    m.sigma = Curve({0.0, 1.0}, {1.0, 2.0});
    const auto c = derive_coefficients(m);
    for (double t : {0.0, 0.5, 1.0}) {
        EXPECT_NEAR(c.b(t), (m.eta(t) - m.r(t)) / m.sigma(t), 1e-15);
        EXPECT_NEAR(c.d(t), m.mu(t) / m.sigma(t), 1e-15);
    }

    MarketModel flat;
    flat.r = flat.eta = Curve(0.02);
    const auto z = derive_coefficients(flat);
    EXPECT_EQ(z.b(0.3), 0.0);
    EXPECT_EQ(z.d(0.3), 0.0);
}

TEST(VolatilityBand, Validation) {
    EXPECT_NO_THROW((VolatilityBand{0.01, 0.09}.validate()));
    EXPECT_THROW((VolatilityBand{0.0, 0.09}.validate()), InvalidInput);
    EXPECT_THROW((VolatilityBand{0.1, 0.09}.validate()), InvalidInput);
    EXPECT_TRUE((VolatilityBand{0.04, 0.04}.degenerate()));
}

TEST(GApply, Examples) {
    const VolatilityBand band{0.01, 0.09};
    EXPECT_DOUBLE_EQ(g_apply(1.0, band), 0.045);
    EXPECT_DOUBLE_EQ(g_apply(-1.0, band), -0.005);
    EXPECT_EQ(g_apply(0.0, band), 0.0);
}

TEST(GApply, GapIdentityIsExact) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> v(1e-4, 1.0), a(-1e3, 1e3);
    for (int i = 0; i < 20000; ++i) {
        double lo = v(gen), hi = v(gen);
        if (lo > hi) std::swap(lo, hi);
        const VolatilityBand band{lo, hi};
        const double alpha = a(gen);
        EXPECT_EQ(g_apply(alpha, band) + g_apply(-alpha, band),
                  0.5 * (hi * std::abs(alpha) - lo * std::abs(alpha)));
    }
}

TEST(GApply, SublinearMonotoneHomogeneous) {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> v(1e-4, 1.0), a(-10.0, 10.0), l(0.0, 5.0);
    for (int i = 0; i < 20000; ++i) {
        double lo = v(gen), hi = v(gen);
        if (lo > hi) std::swap(lo, hi);
        const VolatilityBand band{lo, hi};
        const double x = a(gen), y = a(gen), lambda = l(gen);
        const double tol = 1e-14 * (std::abs(x) + std::abs(y) + 1.0);
        EXPECT_LE(g_apply(x + y, band), g_apply(x, band) + g_apply(y, band) + tol);
        EXPECT_NEAR(g_apply(lambda * x, band), lambda * g_apply(x, band), tol * (1.0 + lambda));
        EXPECT_EQ(g_apply(std::max(x, y), band) >= g_apply(std::min(x, y), band), true);
    }
}

TEST(GApply, DegenerateBandIsLinear) {
    const VolatilityBand band{0.04, 0.04};
    for (double a : {-3.0, -0.5, 0.0, 0.25, 7.0}) EXPECT_DOUBLE_EQ(g_apply(a, band), 0.02 * a);
}

TEST(Payoff, Evaluation) {
    EXPECT_EQ(Payoff(Call{100})(110), 10.0);
    EXPECT_EQ(Payoff(Call{100})(90), 0.0);
    EXPECT_EQ(Payoff(Put{100})(90), 10.0);
    EXPECT_EQ(Payoff(CallSpread{90, 110})(200), 20.0);
    const Payoff fly(Butterfly{90, 100, 110});
    EXPECT_EQ(fly(80), 0.0);
    EXPECT_EQ(fly(95), 5.0);
    EXPECT_EQ(fly(100), 10.0);
    EXPECT_EQ(fly(105), 5.0);
    EXPECT_EQ(fly(130), 0.0);
    const Payoff skew(Butterfly{90, 100, 120});  // weights 1, -1.5, 0.5
    EXPECT_DOUBLE_EQ(skew(110), 5.0);
    EXPECT_DOUBLE_EQ(skew(125), 0.0);
    const Payoff dig(SmoothedDigital{100, 2});
    EXPECT_EQ(dig(97), 0.0);
    EXPECT_DOUBLE_EQ(dig(100), 0.5);
    EXPECT_EQ(dig(103), 1.0);
    EXPECT_DOUBLE_EQ(Payoff(TabulatedCurve{{0, 1, 3}, {0, 2, 0}})(2.0), 1.0);
    EXPECT_EQ(Payoff(Constant{4})(123.0), 4.0);
    EXPECT_DOUBLE_EQ(Payoff(Polynomial{{1, 0, 2}})(3.0), 19.0);
    EXPECT_DOUBLE_EQ(Payoff(Call{100}, 2.0, 1.0)(110), 21.0);
    EXPECT_EQ(payoff_eval(Payoff(Call{100}), 110), 10.0);
}

TEST(Payoff, Errors) {
    EXPECT_THROW(Payoff(Butterfly{100, 90, 110}), InvalidInput);
    EXPECT_THROW(Payoff(CallSpread{110, 90}), InvalidInput);
    EXPECT_THROW(Payoff(SmoothedDigital{100, 0}), InvalidInput);
    EXPECT_THROW(Payoff(TabulatedCurve{{0, 0}, {1, 2}}), InvalidInput);
    EXPECT_THROW(Payoff(Polynomial{{}}), InvalidInput);
    const Payoff tab(TabulatedCurve{{1, 2}, {0, 1}});
    EXPECT_THROW(tab(0.5), DomainError);
    EXPECT_THROW(tab(2.5), DomainError);
}

TEST(Payoff, AffineWrappers) {
    const Payoff c(Call{100});
    EXPECT_EQ(c.negated()(120), -20.0);
    EXPECT_EQ(c.scaled(3.0)(120), 60.0);
    EXPECT_EQ(c.shifted(1.5)(120), 21.5);
    EXPECT_EQ(c.shifted(1.5).scaled(2.0)(120), 43.0);
    EXPECT_EQ(c.scaled(2.0).lipschitz_L(), 2.0);
    EXPECT_EQ(Payoff(SmoothedDigital{100, 2}).lipschitz_L(), 0.25);
    EXPECT_EQ(Payoff(Constant{1}).lipschitz_L(), 0.0);
    EXPECT_EQ(Payoff(Polynomial{{0, 0, 1}}).growth_m(), 1);
    EXPECT_EQ((Payoff(Butterfly{90, 100, 110}).kinks()), (std::vector<double>{90, 100, 110}));
}

TEST(Payoff, Convexity) {
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(50.0 + i);
    EXPECT_TRUE(payoff_is_convex(Payoff(Call{100}), grid));
    EXPECT_TRUE(payoff_is_convex(Payoff(Put{100}), grid));
    EXPECT_TRUE(payoff_is_convex(Payoff(Constant{3}), grid));
    EXPECT_TRUE(payoff_is_convex(Payoff(Polynomial{{0, 0, 1}}), grid));
    EXPECT_FALSE(payoff_is_convex(Payoff(Butterfly{90, 100, 110}), grid));
    EXPECT_FALSE(payoff_is_convex(Payoff(Call{100}).negated(), grid));
    EXPECT_FALSE(payoff_is_convex(Payoff(CallSpread{90, 110}), grid));
    EXPECT_THROW(payoff_is_convex(Payoff(Call{100}), std::vector<double>{1.0, 2.0}), InvalidInput);
    EXPECT_THROW(payoff_is_convex(Payoff(Call{100}), std::vector<double>{1.0, 3.0, 2.0}), InvalidInput);
}
