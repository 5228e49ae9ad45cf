#include "uvol/curve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uvol/errors.hpp"

namespace uvol {

Curve::Curve(double constant) : times_{0.0}, values_{constant} {
    if (!std::isfinite(constant)) throw InvalidInput("curve value must be finite");
}

Curve::Curve(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty() || times_.size() != values_.size())
        throw InvalidInput("curve needs matching, non-empty knot and value lists");
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (!std::isfinite(times_[i]) || !std::isfinite(values_[i]))
            throw InvalidInput("curve knot " + std::to_string(i) + " is not finite");
        if (i > 0 && !(times_[i] > times_[i - 1]))
            throw InvalidInput("curve knot times must be strictly increasing");
    }
}

double Curve::operator()(double t) const {
    if (t <= times_.front()) return values_.front();
    if (t >= times_.back()) return values_.back();
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - times_.begin());
    double w = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
    return values_[i - 1] + w * (values_[i] - values_[i - 1]);
}

template <class SegmentRule>
double Curve::integrate(double a, double b, SegmentRule rule) const {
    if (b == a) return 0.0;
    if (b < a) return -integrate(b, a, rule);
    double total = 0.0;
    double left = a;
    for (double knot : times_) {
        if (knot <= left) continue;
        if (knot >= b) break;
        total += rule(knot - left, (*this)(left), (*this)(knot));
        left = knot;
    }
    total += rule(b - left, (*this)(left), (*this)(b));
    return total;
}

double Curve::integral(double a, double b) const {
    return integrate(a, b, [](double h, double y0, double y1) { return 0.5 * h * (y0 + y1); });
}

double Curve::integral_of_square(double a, double b) const {
    return integrate(a, b, [](double h, double y0, double y1) {
        return h * (y0 * y0 + y0 * y1 + y1 * y1) / 3.0;
    });
}

double Curve::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
double Curve::max_value() const { return *std::max_element(values_.begin(), values_.end()); }
double Curve::max_abs() const { return std::max(std::abs(min_value()), std::abs(max_value())); }

bool Curve::is_constant() const {
    return std::all_of(values_.begin(), values_.end(),
                       [&](double v) { return v == values_.front(); });
}

std::vector<double> merged_knots(std::initializer_list<const Curve*> curves) {
    std::vector<double> knots;
    for (const Curve* c : curves)
        if (!c->is_constant()) knots.insert(knots.end(), c->times().begin(), c->times().end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    return knots;
}

}  // namespace uvol
