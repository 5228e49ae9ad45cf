#include "uvol/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "uvol/errors.hpp"
#include "uvol/pde.hpp"

namespace uvol::closedform {

void BsParams::validate() const {
    if (!(spot > 0.0)) throw InvalidInput("spot must be positive");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be >= 0");
    if (!(tau < maturity)) throw InvalidInput("valuation time tau must precede maturity");
    if (!std::isfinite(rate_integral)) throw InvalidInput("rate integral must be finite");
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double black_scholes_price(const BsParams& p, OptionKind kind) {
    p.validate();
    const double df = std::exp(-p.rate_integral);
    const double sd = p.sigma * std::sqrt(p.time_to_expiry());
    if (sd == 0.0) {
        const double fwd_intrinsic = p.spot - p.strike * df;
        return kind == OptionKind::call ? std::max(fwd_intrinsic, 0.0)
                                        : std::max(-fwd_intrinsic, 0.0);
    }
    const double d1 = (std::log(p.spot / p.strike) + p.rate_integral) / sd + 0.5 * sd;
    const double d2 = d1 - sd;
    if (kind == OptionKind::call) return p.spot * norm_cdf(d1) - p.strike * df * norm_cdf(d2);
    return p.strike * df * norm_cdf(-d2) - p.spot * norm_cdf(-d1);
}

namespace {

template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, 50);
}

constexpr double z_limit = 10.0;
constexpr double quad_tol = 1e-9;

}  // namespace

double lognormal_quadrature_price(const Payoff& payoff, const BsParams& p) {
    p.validate();
    const double df = std::exp(-p.rate_integral);
    const double sd = p.sigma * std::sqrt(p.time_to_expiry());
    const double log_mean = std::log(p.spot) + p.rate_integral - 0.5 * sd * sd;
    if (sd == 0.0) return df * payoff(std::exp(log_mean));

    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    auto integrand = [&](double z) {
        return payoff(std::exp(log_mean + sd * z)) * inv_sqrt_2pi * std::exp(-0.5 * z * z);
    };

    std::vector<double> cuts{-z_limit, z_limit};
    for (double k : payoff.kinks()) {
        if (!(k > 0.0)) continue;
        const double z = (std::log(k) - log_mean) / sd;
        if (z > -z_limit && z < z_limit) cuts.push_back(z);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const double piece_tol = quad_tol / static_cast<double>(cuts.size() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += adaptive_simpson(integrand, cuts[i], cuts[i + 1], piece_tol);
    return df * total;
}

std::optional<double> convex_reduction_price(const Payoff& payoff, const MarketModel& model,
                                             const VolatilityBand& band, double tau, double spot,
                                             Side side) {
    model.validate();
    band.validate();
    const auto grid = pde::default_grid(model, band, spot).nodes();
    if (!model::payoff_is_convex(payoff, grid)) return std::nullopt;

    const double v = side == Side::super ? band.v_high : band.v_low;
    BsParams p;
    p.spot = spot;
    p.tau = tau;
    p.maturity = model.T;
    p.rate_integral = model.r.integral(tau, model.T);
    p.validate();
    p.sigma = std::sqrt(v * model.sigma.integral_of_square(tau, model.T) / p.time_to_expiry());
    return lognormal_quadrature_price(payoff, p);
}

}  // namespace uvol::closedform
