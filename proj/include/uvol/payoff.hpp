#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace uvol::model {

struct Call {
    double strike;
};
struct Put {
    double strike;
};
/// Long call at k1, short call at k2 (k1 < k2).
struct CallSpread {
    double k1, k2;
};
/// Tent with zero wings outside [k1, k3] and peak k2 - k1 at k2.
struct Butterfly {
    double k1, k2, k3;
};
/// Linear ramp from 0 at strike - width to 1 at strike + width.
struct SmoothedDigital {
    double strike, width;
};
/// Linear interpolation through sampled points; querying outside [x.front(), x.back()] throws.
struct TabulatedCurve {
    std::vector<double> x, y;
};
struct Constant {
    double value;
};
/// sum_k coeffs[k] * x^k
struct Polynomial {
    std::vector<double> coeffs;
};

using PayoffKind =
    std::variant<Call, Put, CallSpread, Butterfly, SmoothedDigital, TabulatedCurve, Constant, Polynomial>;

/// Terminal claim Phi(x) = scale * kind(x) + offset.
///
/// The affine wrapper keeps negation, scaling and bond shifts of a payoff in the same
/// family, which the duality and invariance checks rely on.
class Payoff {
public:
    explicit Payoff(PayoffKind kind, double scale = 1.0, double offset = 0.0);

    double operator()(double x) const;

    Payoff scaled(double lambda) const;
    Payoff shifted(double c) const;
    Payoff negated() const { return scaled(-1.0); }

    /// Local-Lipschitz metadata: |Phi(x) - Phi(x')| <= L (1 + |x|^m + |x'|^m) |x - x'|.
    double lipschitz_L() const;
    int growth_m() const;

    /// Abscissae where Phi fails to be smooth.
    std::vector<double> kinks() const;

    const PayoffKind& kind() const { return kind_; }
    double scale() const { return scale_; }
    double offset() const { return offset_; }
    std::string name() const;

private:
    PayoffKind kind_;
    double scale_;
    double offset_;
};

double payoff_eval(const Payoff& p, double x);

/// True iff every second divided difference on the grid is >= -1e-9 * (payoff scale).
/// The grid must hold at least three strictly increasing points.
bool payoff_is_convex(const Payoff& p, std::span<const double> grid);

}  // namespace uvol::model
