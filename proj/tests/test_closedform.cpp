#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "uvol/closedform.hpp"
#include "uvol/errors.hpp"
#include "uvol/pde.hpp"

using namespace uvol;
using namespace uvol::closedform;
using model::Payoff;

namespace {

BsParams atm(double sigma) {
    BsParams p;
    p.rate_integral = 0.02;
    p.sigma = sigma;
    return p;
}

MarketModel market() {
    MarketModel m;
    m.r = Curve(0.02);
    m.eta = Curve(0.02);
    return m;
}

}  // namespace

TEST(NormCdf, Values) {
    EXPECT_EQ(norm_cdf(0.0), 0.5);
    EXPECT_NEAR(norm_cdf(1.96), 0.9750021048517795, 1e-15);
    EXPECT_NEAR(norm_cdf(-1.0), 0.15865525393145707, 1e-15);
    EXPECT_NEAR(norm_cdf(-8.0) / 6.22096057427174e-16, 1.0, 1e-12);
}

TEST(BlackScholes, FrozenPrices) {
    const std::pair<double, std::pair<double, double>> rows[] = {
        {0.1, {oracle::bs_call_s10, oracle::bs_put_s10}},
        {0.2, {oracle::bs_call_s20, oracle::bs_put_s20}},
        {0.3, {oracle::bs_call_s30, oracle::bs_put_s30}},
    };
    for (const auto& [sigma, prices] : rows) {
        EXPECT_NEAR(black_scholes_price(atm(sigma), OptionKind::call), prices.first, 1e-12);
        EXPECT_NEAR(black_scholes_price(atm(sigma), OptionKind::put), prices.second, 1e-12);
    }
}

TEST(BlackScholes, PutCallParity) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> s(20, 300), k(20, 300), r(-0.02, 0.1), v(0.01, 1.0), t(0.05, 5);
    for (int i = 0; i < 2000; ++i) {
        BsParams p;
        p.spot = s(gen);
        p.strike = k(gen);
        p.maturity = t(gen);
        p.rate_integral = r(gen) * p.maturity;
        p.sigma = v(gen);
        const double c = black_scholes_price(p, OptionKind::call);
        const double q = black_scholes_price(p, OptionKind::put);
        EXPECT_NEAR(c - q, p.spot - p.strike * std::exp(-p.rate_integral), 1e-10 * (p.spot + p.strike));
        EXPECT_GE(c, 0.0);
        EXPECT_GE(q, 0.0);
    }
}

TEST(BlackScholes, ZeroVolatilityAndErrors) {
    auto p = atm(0.0);
    EXPECT_DOUBLE_EQ(black_scholes_price(p, OptionKind::call), 100.0 - 100.0 * std::exp(-0.02));
    EXPECT_EQ(black_scholes_price(p, OptionKind::put), 0.0);
    p.spot = 0.0;
    EXPECT_THROW(black_scholes_price(p, OptionKind::call), InvalidInput);
    p = atm(-0.1);
    EXPECT_THROW(black_scholes_price(p, OptionKind::call), InvalidInput);
    p = atm(0.2);
    p.tau = 1.0;
    EXPECT_THROW(black_scholes_price(p, OptionKind::call), InvalidInput);
}

TEST(Quadrature, MatchesClosedFormsAndGaussKronrod) {
    EXPECT_NEAR(lognormal_quadrature_price(Payoff(model::Call{100}), atm(0.2)), oracle::bs_call_s20, 1e-8);
    EXPECT_NEAR(lognormal_quadrature_price(Payoff(model::Put{100}), atm(0.3)), oracle::bs_put_s30, 1e-8);
    const Payoff fly(model::Butterfly{90, 100, 110});
    EXPECT_NEAR(lognormal_quadrature_price(fly, atm(0.1)), oracle::fly_s10, 1e-8);
    EXPECT_NEAR(lognormal_quadrature_price(fly, atm(0.2)), oracle::fly_s20, 1e-8);
    EXPECT_NEAR(lognormal_quadrature_price(fly, atm(0.3)), oracle::fly_s30, 1e-8);

    const Payoff dig(model::SmoothedDigital{105, 4});
    const Payoff poly(model::Polynomial{{1.0, 0.5, 0.01}});
    for (double sigma : {0.1, 0.25, 0.4}) {
        EXPECT_NEAR(lognormal_quadrature_price(dig, atm(sigma)),
                    oracle::lognormal_gk([&](double x) { return dig(x); }, 100, 0.02, sigma, 1.0, {101, 109}), 1e-8);
        EXPECT_NEAR(lognormal_quadrature_price(poly, atm(sigma)),
                    oracle::lognormal_gk([&](double x) { return poly(x); }, 100, 0.02, sigma, 1.0), 1e-7);
    }
    // E[S_T] e^{-R} = S_0
    EXPECT_NEAR(lognormal_quadrature_price(Payoff(model::Polynomial{{0, 1}}), atm(0.3)), 100.0, 1e-7);
}

TEST(ConvexReduction, CallAtExtremeVolatilities) {
    const VolatilityBand band{0.01, 0.09};
    const Payoff call(model::Call{100});
    EXPECT_NEAR(*convex_reduction_price(call, market(), band, 0.0, 100, Side::super), oracle::bs_call_s30, 1e-8);
    EXPECT_NEAR(*convex_reduction_price(call, market(), band, 0.0, 100, Side::sub), oracle::bs_call_s10, 1e-8);
    EXPECT_FALSE(convex_reduction_price(Payoff(model::Butterfly{90, 100, 110}), market(), band, 0, 100, Side::super));
    EXPECT_FALSE(convex_reduction_price(call.negated(), market(), band, 0, 100, Side::super));
}

TEST(ConvexReduction, TimeDependentSigmaAndLaterStart) {
    auto m = market();
    m.sigma = Curve({0.0, 1.0}, {0.5, 1.5});
    const VolatilityBand band{0.01, 0.09};
    const double tau = 0.25;
    BsParams p;
    p.tau = tau;
    p.rate_integral = 0.02 * 0.75;
    p.sigma = std::sqrt(0.09 * m.sigma.integral_of_square(tau, 1.0) / 0.75);
    EXPECT_NEAR(*convex_reduction_price(Payoff(model::Call{100}), m, band, tau, 100, Side::super),
                black_scholes_price(p, OptionKind::call), 1e-8);
}

TEST(ConvexReduction, AgreesWithPde) {
    const VolatilityBand band{0.01, 0.09};
    const auto g = pde::default_grid(market(), band, 100.0);
    for (const Payoff& p : {Payoff(model::Call{100}), Payoff(model::Put{95}), Payoff(model::Call{110}, 2.0, 1.0)}) {
        for (auto side : {Side::super, Side::sub}) {
            const double cf = *convex_reduction_price(p, market(), band, 0.0, 100, side);
            const auto sol = pde::solve_bsb(p, market(), band, g, side == Side::super ? pde::Side::super : pde::Side::sub);
            const double tol = 0.005 * std::abs(cf) + 1e-6 * 100;
            EXPECT_LE(std::abs(pde::price_at(sol, 0, 100) - cf), 3 * tol);
        }
    }
}
