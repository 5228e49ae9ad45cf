#include "uvol/hedging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "uvol/closedform.hpp"
#include "uvol/errors.hpp"
#include "uvol/parallel.hpp"

namespace uvol::hedging {

const char* to_string(PricingMethod method) {
    return method == PricingMethod::pde ? "pde" : "convex-reduction";
}

namespace {

double grid_tolerance(double price, double spot) { return 0.005 * std::abs(price) + 1e-6 * spot; }

void check_horizon(const TimeGrid& tg, const MarketModel& model) {
    tg.validate();
    if (std::abs(tg.T - model.T) > 1e-12 * std::max(1.0, model.T)) {
        std::ostringstream msg;
        msg << "time grid ends at " << tg.T << " but the model matures at " << model.T;
        throw InvalidInput(msg.str());
    }
}

}  // namespace

PricePair hedging_prices(const Payoff& payoff, const MarketModel& model, const VolatilityBand& band,
                         double tau, double spot, std::optional<PdeGrid> grid) {
    model.validate();
    band.validate();
    if (!(tau >= 0.0 && tau < model.T)) throw InvalidInput("pricing time must satisfy 0 <= tau < T");
    if (!(spot > 0.0) || !std::isfinite(spot)) throw InvalidInput("spot must be positive");
    const PdeGrid g = grid ? *grid : pde::default_grid(model, band, spot);

    const auto sup = pde::solve_bsb(payoff, model, band, g, pde::Side::super);
    const auto neg = pde::solve_bsb(payoff.negated(), model, band, g, pde::Side::super);
    const auto sub = pde::solve_bsb(payoff, model, band, g, pde::Side::sub);

    double scale = 1.0, duality_gap = 0.0;
    for (std::size_t i = 0; i < sub.values.size(); ++i) {
        scale = std::max(scale, std::abs(sub.values[i]));
        duality_gap = std::max(duality_gap, std::abs(sub.values[i] + neg.values[i]));
    }
    if (duality_gap > 1e-9 * scale) {
        std::ostringstream msg;
        msg << "sub-side sweep disagrees with -super(-payoff) by " << duality_gap;
        throw SolverError(msg.str());
    }

    PricePair out;
    out.tau = tau;
    out.spot = spot;
    auto& d = out.diagnostics;
    d.n_x = g.n_x;
    d.n_t = sup.n_t;
    d.dt = sup.dt;
    d.x_min = g.x_min;
    d.x_max = g.x_max;
    d.duality_gap = duality_gap;
    d.pde_super = pde::price_at(sup, tau, spot);
    d.pde_sub = -pde::price_at(neg, tau, spot);
    out.super = d.pde_super;
    out.sub = d.pde_sub;
    out.method = PricingMethod::pde;
    d.grid_tolerance = grid_tolerance(std::max(std::abs(out.super), std::abs(out.sub)), spot);

    const auto cr_super =
        closedform::convex_reduction_price(payoff, model, band, tau, spot, closedform::Side::super);
    if (!cr_super) return out;
    const auto cr_sub =
        closedform::convex_reduction_price(payoff, model, band, tau, spot, closedform::Side::sub);
    if (!cr_sub) return out;

    const double gap_super = std::abs(*cr_super - d.pde_super);
    const double gap_sub = std::abs(*cr_sub - d.pde_sub);
    d.cross_check_gap = std::max(gap_super, gap_sub);
    if (gap_super > 3.0 * grid_tolerance(*cr_super, spot) ||
        gap_sub > 3.0 * grid_tolerance(*cr_sub, spot)) {
        std::ostringstream msg;
        msg << "closed form and PDE disagree: super " << *cr_super << " vs " << d.pde_super
            << ", sub " << *cr_sub << " vs " << d.pde_sub;
        throw SolverError(msg.str());
    }
    out.super = *cr_super;
    out.sub = *cr_sub;
    out.method = PricingMethod::convex_reduction;
    return out;
}

RepresentationReport representation_check(const Payoff& payoff, const MarketModel& model,
                                          const VolatilityBand& band, const PdeGrid& grid,
                                          std::span<const VolatilityControl> family,
                                          const RepresentationConfig& config) {
    model.validate();
    band.validate();
    check_horizon(config.time_grid, model);
    for (const auto& c : family) c.validate(band, config.time_grid);

    RepresentationReport rep;
    const auto sol = pde::solve_bsb(payoff, model, band, grid, pde::Side::super);
    rep.pde_price = pde::price_at(sol, 0.0, config.spot);
    PdeGrid half = grid;
    half.n_x = grid.n_x / 2;
    const double pde_half =
        pde::price_at(pde::solve_bsb(payoff, model, band, half, pde::Side::super), 0.0, config.spot);

    scenario::EstimatorConfig ec;
    ec.n_paths = config.n_paths;
    ec.seed = config.seed;
    ec.spot0 = config.spot;
    ec.threads = config.threads;
    ec.state_price = true;
    rep.estimate = scenario::estimate_g_expectation(
        [&payoff](const scenario::ScenarioPath& p) {
            return p.pi.back() * model::payoff_eval(payoff, p.S.back());
        },
        family, model, config.time_grid, ec);

    rep.mc_value = rep.estimate.value;
    rep.std_error = rep.estimate.std_errors[rep.estimate.argmax];
    rep.bias_allowance = config.time_grid.dt() * std::abs(rep.pde_price) + std::abs(rep.pde_price - pde_half);
    rep.gap = rep.mc_value - rep.pde_price;
    rep.tolerance = 3.0 * rep.std_error + rep.bias_allowance;
    rep.sandwich_holds = rep.gap <= rep.tolerance;
    rep.agrees = std::abs(rep.gap) <= rep.tolerance;
    return rep;
}

std::size_t HedgeStrategy::slice_at_or_before(double t) const {
    const double probe = t + 1e-12 * std::max(1.0, std::abs(t));
    auto it = std::upper_bound(times.begin(), times.end(), probe);
    if (it == times.begin()) return 0;
    return static_cast<std::size_t>(it - times.begin()) - 1;
}

double HedgeStrategy::psi_at(double t, double spot, bool* clamped) const {
    const std::size_t slice = slice_at_or_before(t);
    double s = spot;
    const bool out_of_grid = !(s >= x.front() && s <= x.back());
    if (clamped) *clamped = out_of_grid;
    s = std::clamp(s, x.front(), x.back());
    auto it = std::upper_bound(x.begin(), x.end(), s);
    std::size_t j = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    j = std::min(j, x.size() - 2);
    const double w = (s - x[j]) / (x[j + 1] - x[j]);
    const double* row = psi.data() + slice * x.size();
    return row[j] + w * (row[j + 1] - row[j]);
}

HedgeStrategy extract_strategy(std::shared_ptr<const PdeSolution> solution, const MarketModel& model) {
    if (!solution) throw InvalidInput("hedge extraction needs a solved surface");
    model.validate();
    HedgeStrategy h;
    h.solution = solution;
    h.times = solution->times;
    h.x = solution->x;
    const std::size_t nx = h.x.size();
    h.psi.resize(h.times.size() * nx);
    h.z.resize(h.psi.size());
    for (std::size_t i = 0; i < h.times.size(); ++i) {
        const auto delta = pde::slice_delta(*solution, i);
        const double sig = model.sigma(h.times[i]);
        for (std::size_t j = 0; j < nx; ++j) {
            const double psi = h.x[j] * delta[j];
            h.psi[i * nx + j] = psi;
            h.z[i * nx + j] = sig * psi;
        }
    }
    return h;
}

namespace {

constexpr std::size_t replication_block = 256;

struct BlockResult {
    std::vector<double> residual_sum;
    std::size_t clamp_events = 0;
};

double max_rise(std::span<const double> xs) {
    double lowest = std::numeric_limits<double>::infinity(), rise = 0.0;
    for (double v : xs) {
        lowest = std::min(lowest, v);
        rise = std::max(rise, v - lowest);
    }
    return rise;
}

}  // namespace

ReplicationReport replicate(const HedgeStrategy& strategy, double initial_wealth,
                            const Payoff& payoff, const MarketModel& model,
                            const VolatilityControl& control, const ReplicationConfig& config) {
    if (!strategy.solution) throw InvalidInput("replication needs a solved surface");
    model.validate();
    const auto& tg = config.time_grid;
    check_horizon(tg, model);
    if (config.n_paths == 0) throw InvalidInput("replication needs n_paths >= 1");
    if (!std::isfinite(initial_wealth)) throw InvalidInput("initial wealth must be finite");
    const auto& sol = *strategy.solution;
    const auto n = static_cast<std::size_t>(tg.n_steps);

    std::vector<double> growth(n);
    for (std::size_t k = 0; k < n; ++k)
        growth[k] = std::exp(model.r.integral(tg.time(static_cast<int>(k)), tg.time(static_cast<int>(k) + 1)));

    ReplicationReport rep;
    rep.initial_wealth = initial_wealth;
    rep.terminal_wealth.resize(config.n_paths);
    rep.payoff.resize(config.n_paths);
    rep.surplus.resize(config.n_paths);
    std::vector<double> path_rise(config.n_paths);

    const std::size_t n_blocks = (config.n_paths + replication_block - 1) / replication_block;
    std::vector<BlockResult> blocks(n_blocks);

    parallel_for(n_blocks, config.threads, [&](std::size_t b0, std::size_t b1) {
        scenario::ScenarioPath path;
        std::vector<double> z(n);
        for (std::size_t b = b0; b < b1; ++b) {
            auto& block = blocks[b];
            block.residual_sum.assign(n + 1, 0.0);
            const std::size_t end = std::min(config.n_paths, (b + 1) * replication_block);
            for (std::size_t i = b * replication_block; i < end; ++i) {
                scenario::draw_normals(scenario::path_seed(config.seed, i), z);
                scenario::simulate_scenario_into(path, control, model, tg, z, config.spot0);
                double y = initial_wealth;
                double lowest = std::numeric_limits<double>::infinity(), rise = 0.0;
                for (std::size_t k = 0; k <= n; ++k) {
                    const double s = path.S[k];
                    const double sc = std::clamp(s, sol.x.front(), sol.x.back());
                    const double k_proxy = pde::price_at(sol, path.t[k], sc) - y;
                    block.residual_sum[k] += k_proxy;
                    lowest = std::min(lowest, k_proxy);
                    rise = std::max(rise, k_proxy - lowest);
                    if (k == n) break;
                    bool clamped = false;
                    const double psi = strategy.psi_at(path.t[k], s, &clamped);
                    if (clamped) ++block.clamp_events;
                    y = (y - psi) * growth[k] + psi * (path.S[k + 1] / s);
                }
                rep.terminal_wealth[i] = y;
                rep.payoff[i] = model::payoff_eval(payoff, path.S[n]);
                rep.surplus[i] = y - rep.payoff[i];
                path_rise[i] = rise;
            }
        }
    });

    rep.residual.assign(n + 1, 0.0);
    for (const auto& block : blocks) {
        for (std::size_t k = 0; k <= n; ++k) rep.residual[k] += block.residual_sum[k];
        rep.clamp_events += block.clamp_events;
    }
    for (double& r : rep.residual) r /= static_cast<double>(config.n_paths);
    rep.residual_max_rise = max_rise(rep.residual);
    rep.path_residual_max_rise = *std::max_element(path_rise.begin(), path_rise.end());

    std::vector<double> abs_surplus(rep.surplus.size());
    for (std::size_t i = 0; i < abs_surplus.size(); ++i) abs_surplus[i] = std::abs(rep.surplus[i]);
    rep.mean_surplus = sample_stats(rep.surplus).mean;
    rep.mean_abs_surplus = sample_stats(abs_surplus).mean;
    rep.min_surplus = *std::min_element(rep.surplus.begin(), rep.surplus.end());
    rep.max_surplus = *std::max_element(rep.surplus.begin(), rep.surplus.end());
    rep.steps = config.n_paths * n;
    rep.valid = static_cast<double>(rep.clamp_events) <=
                config.max_clamp_fraction * static_cast<double>(rep.steps);
    for (double y : rep.terminal_wealth)
        if (!std::isfinite(y)) rep.valid = false;
    return rep;
}

std::vector<HistogramBin> histogram(std::span<const double> values, int bins) {
    if (bins < 1) throw InvalidInput("histogram needs at least one bin");
    std::vector<HistogramBin> out;
    if (values.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) {
        out.push_back({lo, hi, values.size()});
        return out;
    }
    const double width = (hi - lo) / bins;
    for (int b = 0; b < bins; ++b)
        out.push_back({lo + b * width, b + 1 == bins ? hi : lo + (b + 1) * width, 0});
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        out[std::min(b, out.size() - 1)].count++;
    }
    return out;
}

}  // namespace uvol::hedging
