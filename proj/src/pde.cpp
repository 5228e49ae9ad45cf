#include "uvol/pde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "uvol/errors.hpp"

namespace uvol::pde {

const char* to_string(XMode mode) { return mode == XMode::log_price ? "log" : "arithmetic"; }
const char* to_string(Side side) { return side == Side::super ? "super" : "sub"; }

void PdeGrid::validate() const {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(anchor_spot))
        throw InvalidInput("grid bounds must be finite");
    if (!(x_min < anchor_spot && anchor_spot < x_max)) {
        std::ostringstream msg;
        msg << "grid needs x_min < anchor_spot < x_max, got " << x_min << " < " << anchor_spot
            << " < " << x_max;
        throw InvalidInput(msg.str());
    }
    if (x_mode == XMode::log_price && !(x_min > 0.0))
        throw InvalidInput("log-price grid needs x_min > 0");
    if (n_x < 16) throw InvalidInput("grid needs n_x >= 16 interior nodes");
    if (n_t < 0) throw InvalidInput("n_t must be >= 0 (0 selects the stability rule)");
    if (retain_every < 0) throw InvalidInput("retain_every must be >= 0");
}

std::vector<double> PdeGrid::nodes() const {
    validate();
    const int last = n_x + 1;
    std::vector<double> out(static_cast<std::size_t>(node_count()));
    if (x_mode == XMode::log_price) {
        double y0 = std::log(x_min);
        double h = (std::log(x_max) - y0) / last;
        for (int j = 0; j <= last; ++j) {
            double x = std::exp(y0 + j * h);
            if (std::abs(x - anchor_spot) <= 1e-9 * anchor_spot * h) x = anchor_spot;
            out[static_cast<std::size_t>(j)] = x;
        }
    } else {
        double h = (x_max - x_min) / last;
        for (int j = 0; j <= last; ++j) {
            double x = x_min + j * h;
            if (std::abs(x - anchor_spot) <= 1e-9 * h) x = anchor_spot;
            out[static_cast<std::size_t>(j)] = x;
        }
    }
    out.front() = x_min;
    out.back() = x_max;
    return out;
}

PdeGrid centered_grid(XMode mode, double anchor, double half_width, int n_x) {
    if (!(half_width > 0.0)) throw InvalidInput("grid half-width must be positive");
    PdeGrid g;
    g.x_mode = mode;
    g.n_x = n_x;
    g.anchor_spot = anchor;
    const int intervals = n_x + 1;
    const double h = 2.0 * half_width / intervals;
    const int below = intervals / 2;
    if (mode == XMode::log_price) {
        if (!(anchor > 0.0)) throw InvalidInput("log-price grid needs a positive anchor");
        double y_min = std::log(anchor) - below * h;
        g.x_min = std::exp(y_min);
        g.x_max = std::exp(y_min + intervals * h);
    } else {
        g.x_min = anchor - below * h;
        g.x_max = g.x_min + intervals * h;
    }
    g.validate();
    return g;
}

PdeGrid default_grid(const MarketModel& model, const VolatilityBand& band, double anchor, int n_x) {
    model.validate();
    band.validate();
    double sigma_bar = std::sqrt(band.v_high) * model.sigma.max_abs();
    return centered_grid(XMode::log_price, anchor, 6.0 * sigma_bar * std::sqrt(model.T), n_x);
}

namespace {

struct Geometry {
    std::vector<double> x, hm, hp;
};

Geometry make_geometry(const PdeGrid& grid) {
    Geometry g;
    g.x = grid.nodes();
    g.hm.assign(g.x.size(), 0.0);
    g.hp.assign(g.x.size(), 0.0);
    for (std::size_t j = 1; j + 1 < g.x.size(); ++j) {
        g.hm[j] = g.x[j] - g.x[j - 1];
        g.hp[j] = g.x[j + 1] - g.x[j];
    }
    return g;
}

// Stencil weights of D u_xx + a u_x at one node.
struct Stencil {
    double lo, mid, hi;
};

Stencil stencil(double D, double a, double hm, double hp) {
    const double H = hm + hp;
    double lo = (2.0 * D - a * hp) / (hm * H);
    double hi = (2.0 * D + a * hm) / (hp * H);
    if (lo >= 0.0 && hi >= 0.0) return {lo, -(lo + hi), hi};
    // Central differencing would give a negative neighbour weight: upwind the drift.
    lo = 2.0 * D / (hm * H);
    hi = 2.0 * D / (hp * H);
    if (a >= 0.0)
        hi += a / hp;
    else
        lo -= a / hm;
    return {lo, -(lo + hi), hi};
}

double diffusion_scale_sq(XMode mode, double x) { return mode == XMode::log_price ? x * x : 1.0; }

// Largest |centre weight| over nodes, times and candidate variances.
double stability_rate(const Geometry& g, XMode mode, const MarketModel& model,
                      const VolatilityBand& band) {
    const double sigma_sq = model.sigma.max_abs() * model.sigma.max_abs();
    const double r_abs = model.r.max_abs();
    double rate = 0.0;
    for (std::size_t j = 1; j + 1 < g.x.size(); ++j) {
        double D = 0.5 * band.v_high * sigma_sq * diffusion_scale_sq(mode, g.x[j]);
        double a = r_abs * std::abs(g.x[j]);
        double hmin = std::min(g.hm[j], g.hp[j]);
        rate = std::max(rate, 2.0 * D / (g.hm[j] * g.hp[j]) + a / hmin);
    }
    return rate;
}

// Boundary nodes carry no curvature. Where the drift points into the grid the node is
// advanced with a one-sided upwind difference (monotone); otherwise it is extrapolated
// linearly from the interior.
void update_boundaries(std::vector<double>& next, const std::vector<double>& u,
                       const std::vector<double>& x, double r, double dt, double disc) {
    const std::size_t n = u.size();
    const double a_lo = r * x[0];
    if (a_lo >= 0.0)
        next[0] = disc * (u[0] + dt * a_lo * (u[1] - u[0]) / (x[1] - x[0]));
    else
        next[0] = next[1] + (next[1] - next[2]) * (x[1] - x[0]) / (x[2] - x[1]);
    const double a_hi = r * x[n - 1];
    if (a_hi <= 0.0)
        next[n - 1] = disc * (u[n - 1] + dt * a_hi * (u[n - 1] - u[n - 2]) / (x[n - 1] - x[n - 2]));
    else
        next[n - 1] = next[n - 2] + (next[n - 2] - next[n - 3]) * (x[n - 1] - x[n - 2]) / (x[n - 2] - x[n - 3]);
}

}  // namespace

PdeSolution solve_bsb(const Payoff& payoff, const MarketModel& model, const VolatilityBand& band,
                      const PdeGrid& grid, Side side) {
    model.validate();
    band.validate();
    grid.validate();

    const Geometry geo = make_geometry(grid);
    const std::size_t n_nodes = geo.x.size();
    const double T = model.T;

    const double rate = stability_rate(geo, grid.x_mode, model, band);
    const double dt_max = rate > 0.0 ? 1.0 / rate : T;
    int n_t = grid.n_t;
    if (n_t == 0) {
        n_t = std::max(1, static_cast<int>(std::ceil(T / (0.9 * dt_max))));
    } else if (T / n_t > dt_max * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "n_t = " << n_t << " violates the explicit-scheme stability bound (needs n_t >= "
            << static_cast<long long>(std::ceil(T / dt_max)) << ")";
        throw SolverError(msg.str());
    }
    const double dt = T / n_t;
    const int keep = grid.retain_every > 0
                         ? grid.retain_every
                         : std::max(1, (n_t + PdeGrid::max_auto_slices - 1) / PdeGrid::max_auto_slices);

    PdeSolution sol;
    sol.grid = grid;
    sol.side = side;
    sol.model = model;
    sol.band = band;
    sol.x = geo.x;
    sol.n_t = n_t;
    sol.dt = dt;

    std::vector<double> u(n_nodes), next(n_nodes);
    for (std::size_t j = 0; j < n_nodes; ++j) u[j] = payoff(geo.x[j]);

    // Rows are collected from t = T backwards and reversed at the end.
    std::vector<std::vector<double>> rows;
    std::vector<double> row_times;
    rows.push_back(u);
    row_times.push_back(T);

    const double v_cand[2] = {band.v_low, band.v_high};
    for (int n = n_t - 1; n >= 0; --n) {
        const double t0 = n * dt;
        const double t1 = (n + 1 == n_t) ? T : (n + 1) * dt;
        const double tm = 0.5 * (t0 + t1);
        const double sig = model.sigma(tm);
        const double r = model.r(tm);
        const double disc = std::exp(-model.r.integral(t0, t1));

        for (std::size_t j = 1; j + 1 < n_nodes; ++j) {
            const double s2 = sig * sig * diffusion_scale_sq(grid.x_mode, geo.x[j]);
            const double a = r * geo.x[j];
            double best = 0.0;
            for (int k = 0; k < 2; ++k) {
                const Stencil st = stencil(0.5 * v_cand[k] * s2, a, geo.hm[j], geo.hp[j]);
                const double cand = st.lo * u[j - 1] + st.mid * u[j] + st.hi * u[j + 1];
                if (k == 0)
                    best = cand;
                else
                    best = side == Side::super ? std::max(best, cand) : std::min(best, cand);
            }
            next[j] = disc * (u[j] + dt * best);
        }
        update_boundaries(next, u, geo.x, r, dt, disc);
        std::swap(u, next);

        for (double v : u) {
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << "non-finite value in backward sweep at t = " << t0 << " (step " << n << ")";
                throw SolverError(msg.str());
            }
        }
        if (n % keep == 0) {
            rows.push_back(u);
            row_times.push_back(t0);
        }
    }

    sol.times.assign(row_times.rbegin(), row_times.rend());
    sol.values.reserve(rows.size() * n_nodes);
    for (auto it = rows.rbegin(); it != rows.rend(); ++it)
        sol.values.insert(sol.values.end(), it->begin(), it->end());
    return sol;
}

PdeSolution solve_g_heat(const Payoff& phi, const VolatilityBand& band, double t_horizon,
                         const PdeGrid& grid) {
    if (grid.x_mode != XMode::arithmetic)
        throw InvalidInput("G-heat equation is solved on an arithmetic grid");
    if (!(t_horizon > 0.0)) throw InvalidInput("G-heat horizon must be positive");
    MarketModel heat;
    heat.T = t_horizon;

    // Running the backward solver on [0, t_horizon] and reading it in reversed time gives
    // the forward G-heat flow.
    PdeSolution sol = solve_bsb(phi, heat, band, grid, Side::super);
    const std::size_t width = sol.x.size();
    const std::size_t count = sol.times.size();
    std::vector<double> times(count), values(sol.values.size());
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t src = count - 1 - i;
        times[i] = t_horizon - sol.times[src];
        std::copy_n(sol.values.begin() + static_cast<std::ptrdiff_t>(src * width), width,
                    values.begin() + static_cast<std::ptrdiff_t>(i * width));
    }
    sol.times = std::move(times);
    sol.values = std::move(values);
    return sol;
}

namespace {

struct Bracket {
    std::size_t lo;
    double w;  // weight of lo + 1
};

Bracket bracket(const std::vector<double>& axis, double q, const char* what) {
    const double span = axis.back() - axis.front();
    const double slack = 1e-12 * (span > 0.0 ? span : 1.0);
    if (!(q >= axis.front() - slack && q <= axis.back() + slack)) {
        std::ostringstream msg;
        msg << what << " = " << q << " outside surface domain [" << axis.front() << ", "
            << axis.back() << "]";
        throw DomainError(msg.str());
    }
    if (axis.size() == 1) return {0, 0.0};
    q = std::clamp(q, axis.front(), axis.back());
    auto it = std::upper_bound(axis.begin(), axis.end(), q);
    std::size_t hi = static_cast<std::size_t>(it - axis.begin());
    if (hi >= axis.size()) hi = axis.size() - 1;
    std::size_t lo = hi - 1;
    if (q == axis[lo]) return {lo, 0.0};
    return {lo, (q - axis[lo]) / (axis[hi] - axis[lo])};
}

double node_delta(std::span<const double> u, const std::vector<double>& x, std::size_t j) {
    const std::size_t n = x.size();
    if (j == 0) return (u[1] - u[0]) / (x[1] - x[0]);
    if (j == n - 1) return (u[n - 1] - u[n - 2]) / (x[n - 1] - x[n - 2]);
    const double hm = x[j] - x[j - 1];
    const double hp = x[j + 1] - x[j];
    const double H = hm + hp;
    return (-hp / (hm * H)) * u[j - 1] + ((hp - hm) / (hm * hp)) * u[j] + (hm / (hp * H)) * u[j + 1];
}

double lerp(double a, double b, double w) { return w == 0.0 ? a : a + w * (b - a); }

}  // namespace

double price_at(const PdeSolution& sol, double t, double x) {
    const Bracket bt = bracket(sol.times, t, "t");
    const Bracket bx = bracket(sol.x, x, "x");
    auto at = [&](std::size_t slice) {
        auto row = sol.row(slice);
        return bx.w == 0.0 ? row[bx.lo] : lerp(row[bx.lo], row[bx.lo + 1], bx.w);
    };
    const double lo = at(bt.lo);
    return bt.w == 0.0 ? lo : lerp(lo, at(bt.lo + 1), bt.w);
}

double delta_at(const PdeSolution& sol, double t, double x) {
    const std::size_t n = sol.x.size();
    if (!(x >= sol.x[1] && x <= sol.x[n - 2])) {
        std::ostringstream msg;
        msg << "delta queried at x = " << x << ", outside interior nodes [" << sol.x[1] << ", "
            << sol.x[n - 2] << "]";
        throw DomainError(msg.str());
    }
    const Bracket bt = bracket(sol.times, t, "t");
    const Bracket bx = bracket(sol.x, x, "x");
    auto at = [&](std::size_t slice) {
        auto row = sol.row(slice);
        const double d0 = node_delta(row, sol.x, bx.lo);
        return bx.w == 0.0 ? d0 : lerp(d0, node_delta(row, sol.x, bx.lo + 1), bx.w);
    };
    const double lo = at(bt.lo);
    return bt.w == 0.0 ? lo : lerp(lo, at(bt.lo + 1), bt.w);
}

std::vector<double> slice_delta(const PdeSolution& sol, std::size_t slice) {
    auto row = sol.row(slice);
    std::vector<double> out(sol.x.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = node_delta(row, sol.x, j);
    return out;
}

RefinementStudy refinement_study(const Payoff& payoff, const MarketModel& model,
                                 const VolatilityBand& band, const PdeGrid& base_grid, int levels,
                                 std::optional<double> reference, Side side) {
    if (levels < 3) throw InvalidInput("refinement study needs at least 3 levels");
    base_grid.validate();
    const bool log_mode = base_grid.x_mode == XMode::log_price;
    const double lo = log_mode ? std::log(base_grid.x_min) : base_grid.x_min;
    const double hi = log_mode ? std::log(base_grid.x_max) : base_grid.x_max;
    const double half_width = 0.5 * (hi - lo);

    RefinementStudy study;
    study.reference_is_finest = !reference.has_value();
    int n_x = base_grid.n_x;
    for (int l = 0; l < levels; ++l, n_x *= 2) {
        PdeGrid g = centered_grid(base_grid.x_mode, base_grid.anchor_spot, half_width, n_x);
        g.retain_every = 0;
        PdeSolution sol = solve_bsb(payoff, model, band, g, side);
        study.levels.push_back({n_x, 2.0 * half_width / (n_x + 1),
                                price_at(sol, 0.0, base_grid.anchor_spot), 0.0});
    }
    const double ref = reference.value_or(study.levels.back().price);
    for (auto& lvl : study.levels) lvl.error = std::abs(lvl.price - ref);
    for (std::size_t l = 0; l + 1 < study.levels.size(); ++l) {
        const auto& a = study.levels[l];
        const auto& b = study.levels[l + 1];
        study.successive_diffs.push_back(std::abs(b.price - a.price));
        if (a.error > 0.0 && b.error > 0.0)
            study.observed_orders.push_back(std::log(a.error / b.error) / std::log(a.h / b.h));
    }
    return study;
}

}  // namespace uvol::pde
