#pragma once

#include <functional>

#include "uvol/curve.hpp"

namespace uvol::model {

inline constexpr double sigma_floor = 1e-8;

/// Market coefficients of dS = eta S dt + mu S d<B> + sigma S dB with riskless rate r.
///
/// All coefficients are deterministic piecewise-linear curves on [0, T].
struct MarketModel {
    Curve r{0.0};
    Curve eta{0.0};
    Curve mu{0.0};
    Curve sigma{1.0};
    double T = 1.0;

    /// Throws InvalidInput when T <= 0 or sigma dips below sigma_floor.
    void validate() const;
};

/// b = (eta - r) / sigma and d = mu / sigma, evaluated pointwise from the model curves.
struct DerivedCoefficients {
    std::function<double(double)> b;
    std::function<double(double)> d;
};

DerivedCoefficients derive_coefficients(const MarketModel& model);

/// Admissible variance interval [v_low, v_high] of the G-Brownian motion.
struct VolatilityBand {
    double v_low = 0.04;
    double v_high = 0.04;

    void validate() const;
    bool degenerate() const { return v_low == v_high; }
};

/// G(alpha) = 1/2 sup_{v in band} v * alpha.
double g_apply(double alpha, const VolatilityBand& band);

}  // namespace uvol::model
