#pragma once

#include <optional>

#include "uvol/model.hpp"
#include "uvol/payoff.hpp"

namespace uvol::closedform {

using model::MarketModel;
using model::Payoff;
using model::VolatilityBand;

enum class OptionKind { call, put };
enum class Side { super, sub };

/// Inputs of a constant-volatility lognormal valuation at time tau for expiry maturity.
/// rate_integral is the integral of r over [tau, maturity].
struct BsParams {
    double spot = 100.0;
    double strike = 100.0;
    double rate_integral = 0.0;
    double sigma = 0.2;
    double tau = 0.0;
    double maturity = 1.0;

    void validate() const;
    double time_to_expiry() const { return maturity - tau; }
};

/// Standard normal CDF through std::erfc.
double norm_cdf(double x);

double black_scholes_price(const BsParams& p, OptionKind kind);

/// e^{-R} E[Phi(S_T)] under the lognormal law of p, by adaptive Simpson in the standard
/// normal variable on [-10, 10], split at the payoff kinks.
double lognormal_quadrature_price(const Payoff& payoff, const BsParams& p);

/// For convex payoffs: the constant-volatility price at the extreme variance of the band
/// (v_high for super, v_low for sub), with effective variance v * int_tau^T sigma_s^2 ds.
/// Returns nullopt when the payoff fails the convexity gate.
std::optional<double> convex_reduction_price(const Payoff& payoff, const MarketModel& model,
                                             const VolatilityBand& band, double tau, double spot,
                                             Side side);

}  // namespace uvol::closedform
