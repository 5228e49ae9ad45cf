#include "uvol/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "uvol/errors.hpp"

namespace uvol::model {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double pos(double x) { return x > 0.0 ? x : 0.0; }

// Wing weights making the butterfly a tent that returns to zero at k3.
struct FlyWeights {
    double mid, right;
};
FlyWeights fly_weights(const Butterfly& b) {
    double right = (b.k2 - b.k1) / (b.k3 - b.k2);
    return {-(1.0 + right), right};
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw InvalidInput(std::string("payoff parameter ") + what + " is not finite");
}

void validate(const PayoffKind& kind) {
    std::visit(overloaded{
                   [](const Call& c) { check_finite(c.strike, "strike"); },
                   [](const Put& p) { check_finite(p.strike, "strike"); },
                   [](const CallSpread& s) {
                       check_finite(s.k1, "k1");
                       check_finite(s.k2, "k2");
                       if (!(s.k1 < s.k2)) throw InvalidInput("call spread needs k1 < k2");
                   },
                   [](const Butterfly& b) {
                       check_finite(b.k1, "k1");
                       check_finite(b.k2, "k2");
                       check_finite(b.k3, "k3");
                       if (!(b.k1 < b.k2 && b.k2 < b.k3))
                           throw InvalidInput("butterfly needs k1 < k2 < k3");
                   },
                   [](const SmoothedDigital& d) {
                       check_finite(d.strike, "strike");
                       if (!(d.width > 0.0)) throw InvalidInput("smoothed digital needs width > 0");
                   },
                   [](const TabulatedCurve& t) {
                       if (t.x.size() < 2 || t.x.size() != t.y.size())
                           throw InvalidInput("tabulated curve needs >= 2 matching (x, y) samples");
                       for (std::size_t i = 0; i < t.x.size(); ++i) {
                           check_finite(t.x[i], "x");
                           check_finite(t.y[i], "y");
                           if (i > 0 && !(t.x[i] > t.x[i - 1]))
                               throw InvalidInput("tabulated curve abscissae must be strictly increasing");
                       }
                   },
                   [](const Constant& c) { check_finite(c.value, "value"); },
                   [](const Polynomial& p) {
                       if (p.coeffs.empty()) throw InvalidInput("polynomial needs coefficients");
                       for (double c : p.coeffs) check_finite(c, "coefficient");
                   },
               },
               kind);
}

double eval_kind(const PayoffKind& kind, double x) {
    return std::visit(
        overloaded{
            [x](const Call& c) { return pos(x - c.strike); },
            [x](const Put& p) { return pos(p.strike - x); },
            [x](const CallSpread& s) { return pos(x - s.k1) - pos(x - s.k2); },
            [x](const Butterfly& b) {
                auto w = fly_weights(b);
                return pos(x - b.k1) + w.mid * pos(x - b.k2) + w.right * pos(x - b.k3);
            },
            [x](const SmoothedDigital& d) {
                return std::clamp((x - (d.strike - d.width)) / (2.0 * d.width), 0.0, 1.0);
            },
            [x](const TabulatedCurve& t) {
                if (x < t.x.front() || x > t.x.back()) {
                    std::ostringstream msg;
                    msg << "tabulated payoff queried at " << x << " outside sampled range ["
                        << t.x.front() << ", " << t.x.back() << "]";
                    throw DomainError(msg.str());
                }
                auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
                if (it == t.x.end()) return t.y.back();
                std::size_t i = static_cast<std::size_t>(it - t.x.begin());
                double w = (x - t.x[i - 1]) / (t.x[i] - t.x[i - 1]);
                return t.y[i - 1] + w * (t.y[i] - t.y[i - 1]);
            },
            [](const Constant& c) { return c.value; },
            [x](const Polynomial& p) {
                double acc = 0.0;
                for (auto it = p.coeffs.rbegin(); it != p.coeffs.rend(); ++it) acc = acc * x + *it;
                return acc;
            },
        },
        kind);
}

}  // namespace

Payoff::Payoff(PayoffKind kind, double scale, double offset)
    : kind_(std::move(kind)), scale_(scale), offset_(offset) {
    validate(kind_);
    if (!std::isfinite(scale_) || !std::isfinite(offset_))
        throw InvalidInput("payoff scale and offset must be finite");
}

double Payoff::operator()(double x) const { return scale_ * eval_kind(kind_, x) + offset_; }

Payoff Payoff::scaled(double lambda) const { return Payoff(kind_, lambda * scale_, lambda * offset_); }

Payoff Payoff::shifted(double c) const { return Payoff(kind_, scale_, offset_ + c); }

double Payoff::lipschitz_L() const {
    double base = std::visit(
        overloaded{
            [](const Call&) { return 1.0; },
            [](const Put&) { return 1.0; },
            [](const CallSpread&) { return 1.0; },
            [](const Butterfly& b) { return std::max(1.0, std::abs(fly_weights(b).right)); },
            [](const SmoothedDigital& d) { return 1.0 / (2.0 * d.width); },
            [](const TabulatedCurve& t) {
                double L = 0.0;
                for (std::size_t i = 1; i < t.x.size(); ++i)
                    L = std::max(L, std::abs((t.y[i] - t.y[i - 1]) / (t.x[i] - t.x[i - 1])));
                return L;
            },
            [](const Constant&) { return 0.0; },
            [](const Polynomial& p) {
                double L = 0.0;
                for (std::size_t k = 1; k < p.coeffs.size(); ++k)
                    L += static_cast<double>(k) * std::abs(p.coeffs[k]);
                return L;
            },
        },
        kind_);
    return std::abs(scale_) * base;
}

int Payoff::growth_m() const {
    if (auto* p = std::get_if<Polynomial>(&kind_))
        return std::max<int>(1, static_cast<int>(p->coeffs.size()) - 2);
    return 1;
}

std::vector<double> Payoff::kinks() const {
    return std::visit(overloaded{
                          [](const Call& c) { return std::vector<double>{c.strike}; },
                          [](const Put& p) { return std::vector<double>{p.strike}; },
                          [](const CallSpread& s) { return std::vector<double>{s.k1, s.k2}; },
                          [](const Butterfly& b) { return std::vector<double>{b.k1, b.k2, b.k3}; },
                          [](const SmoothedDigital& d) {
                              return std::vector<double>{d.strike - d.width, d.strike + d.width};
                          },
                          [](const TabulatedCurve& t) { return t.x; },
                          [](const Constant&) { return std::vector<double>{}; },
                          [](const Polynomial&) { return std::vector<double>{}; },
                      },
                      kind_);
}

std::string Payoff::name() const {
    std::ostringstream out;
    out << std::visit(overloaded{
                          [](const Call& c) { return "Call(" + std::to_string(c.strike) + ")"; },
                          [](const Put& p) { return "Put(" + std::to_string(p.strike) + ")"; },
                          [](const CallSpread&) { return std::string("CallSpread"); },
                          [](const Butterfly&) { return std::string("Butterfly"); },
                          [](const SmoothedDigital&) { return std::string("SmoothedDigital"); },
                          [](const TabulatedCurve&) { return std::string("TabulatedCurve"); },
                          [](const Constant& c) { return "Constant(" + std::to_string(c.value) + ")"; },
                          [](const Polynomial&) { return std::string("Polynomial"); },
                      },
                      kind_);
    if (scale_ != 1.0) out << " x " << scale_;
    if (offset_ != 0.0) out << " + " << offset_;
    return out.str();
}

double payoff_eval(const Payoff& p, double x) { return p(x); }

bool payoff_is_convex(const Payoff& p, std::span<const double> grid) {
    if (grid.size() < 3) throw InvalidInput("convexity check needs at least 3 grid points");
    std::vector<double> values(grid.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw InvalidInput("convexity grid must be strictly increasing");
        values[i] = p(grid[i]);
        scale = std::max(scale, std::abs(values[i]));
    }
    double tol = 1e-9 * (scale > 0.0 ? scale : 1.0);
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        double left = (values[i] - values[i - 1]) / (grid[i] - grid[i - 1]);
        double right = (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]);
        double second = 2.0 * (right - left) / (grid[i + 1] - grid[i - 1]);
        if (second < -tol) return false;
    }
    return true;
}

}  // namespace uvol::model
