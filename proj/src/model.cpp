#include "uvol/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "uvol/errors.hpp"

namespace uvol::model {

void MarketModel::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("T must be positive and finite");
    // sigma is piecewise linear, so its minimum sits on a knot.
    if (sigma.min_value() < sigma_floor) {
        std::ostringstream msg;
        msg << "sigma falls to " << sigma.min_value() << ", below sigma_floor " << sigma_floor;
        throw InvalidInput(msg.str());
    }
}

DerivedCoefficients derive_coefficients(const MarketModel& model) {
    model.validate();
    DerivedCoefficients out;
    out.b = [eta = model.eta, r = model.r, sigma = model.sigma](double t) {
        return (eta(t) - r(t)) / sigma(t);
    };
    out.d = [mu = model.mu, sigma = model.sigma](double t) { return mu(t) / sigma(t); };
    return out;
}

void VolatilityBand::validate() const {
    if (!std::isfinite(v_low) || !std::isfinite(v_high) || !(v_low > 0.0) || v_low > v_high) {
        std::ostringstream msg;
        msg << "volatility band requires 0 < v_low <= v_high, got [" << v_low << ", " << v_high
            << "]";
        throw InvalidInput(msg.str());
    }
}

double g_apply(double alpha, const VolatilityBand& band) {
    return 0.5 * (band.v_high * std::max(alpha, 0.0) - band.v_low * std::max(-alpha, 0.0));
}

}  // namespace uvol::model
