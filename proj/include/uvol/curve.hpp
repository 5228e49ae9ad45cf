#pragma once

#include <vector>

namespace uvol {

/// Deterministic time curve, piecewise-linear between knots and flat beyond them.
class Curve {
public:
    Curve() : Curve(0.0) {}
    explicit Curve(double constant);
    Curve(std::vector<double> times, std::vector<double> values);

    double operator()(double t) const;

    /// Exact integral of the curve over [a, b].
    double integral(double a, double b) const;
    /// Exact integral of the squared curve over [a, b].
    double integral_of_square(double a, double b) const;

    double min_value() const;
    double max_value() const;
    double max_abs() const;
    bool is_constant() const;

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }

private:
    template <class SegmentRule>
    double integrate(double a, double b, SegmentRule rule) const;

    std::vector<double> times_;
    std::vector<double> values_;
};

/// Sorted union of the knot times of several curves (empty if all are constant).
std::vector<double> merged_knots(std::initializer_list<const Curve*> curves);

}  // namespace uvol
