#include "uvol/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "uvol/errors.hpp"
#include "uvol/parallel.hpp"

namespace uvol::scenario {

void TimeGrid::validate() const {
    if (n_steps < 1) throw InvalidInput("time grid needs n_steps >= 1");
    if (!(t0 < T) || !std::isfinite(t0) || !std::isfinite(T))
        throw InvalidInput("time grid needs finite t0 < T");
}

VolatilityControl VolatilityControl::schedule(std::vector<double> values, std::string id) {
    VolatilityControl c;
    c.id_ = std::move(id);
    c.values_ = std::move(values);
    return c;
}

VolatilityControl VolatilityControl::constant(double v, int n_steps, std::string id) {
    if (id.empty()) {
        std::ostringstream s;
        s << "const_" << v;
        id = s.str();
    }
    return schedule(std::vector<double>(static_cast<std::size_t>(std::max(n_steps, 0)), v),
                    std::move(id));
}

VolatilityControl VolatilityControl::threshold(double level, double v_below, double v_above,
                                               std::string id) {
    VolatilityControl c;
    if (id.empty()) {
        std::ostringstream s;
        s << "threshold_" << level;
        id = s.str();
    }
    c.id_ = std::move(id);
    c.is_threshold_ = true;
    c.level_ = level;
    c.v_below_ = v_below;
    c.v_above_ = v_above;
    return c;
}

void VolatilityControl::validate(const VolatilityBand& band, const TimeGrid& grid) const {
    band.validate();
    auto in_band = [&](double v) { return v >= band.v_low && v <= band.v_high; };
    if (is_threshold_) {
        if (!in_band(v_below_) || !in_band(v_above_))
            throw InvalidInput("control " + id_ + ": threshold variances outside the band");
        return;
    }
    if (values_.size() != static_cast<std::size_t>(grid.n_steps)) {
        std::ostringstream msg;
        msg << "control " << id_ << ": " << values_.size() << " variances for " << grid.n_steps
            << " time steps";
        throw InvalidInput(msg.str());
    }
    for (std::size_t k = 0; k < values_.size(); ++k)
        if (!in_band(values_[k]))
            throw InvalidInput("control " + id_ + ": variance at step " + std::to_string(k) +
                               " outside the band");
}

std::vector<VolatilityControl> default_family(const VolatilityBand& band, const TimeGrid& grid,
                                              double spot0) {
    std::vector<VolatilityControl> family;
    family.push_back(VolatilityControl::constant(band.v_low, grid.n_steps, "const_v_low"));
    family.push_back(VolatilityControl::constant(band.v_high, grid.n_steps, "const_v_high"));
    for (double m : {0.9, 1.0, 1.1}) {
        std::ostringstream id;
        id << "threshold_" << std::setprecision(6) << m * spot0;
        family.push_back(VolatilityControl::threshold(m * spot0, band.v_high, band.v_low, id.str()));
    }
    return family;
}

std::uint64_t path_seed(std::uint64_t base_seed, std::uint64_t index) {
    return splitmix64(base_seed ^ splitmix64(index));
}

void draw_normals(std::uint64_t seed, std::span<double> out) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& z : out) z = normal(gen);
}

namespace {

void check_schedule_length(const VolatilityControl& control, const TimeGrid& grid) {
    if (!control.is_threshold() &&
        control.values().size() != static_cast<std::size_t>(grid.n_steps)) {
        std::ostringstream msg;
        msg << "control " << control.id() << " has " << control.values().size()
            << " variances for a grid of " << grid.n_steps << " steps";
        throw InvalidInput(msg.str());
    }
}

void resize_path(ScenarioPath& p, std::size_t n) {
    for (auto* a : {&p.t, &p.W, &p.B, &p.qv, &p.qv_empirical, &p.B_tilde, &p.qv_tilde,
                    &p.cross_variation, &p.S})
        a->resize(n + 1);
    p.v.resize(n);
    p.pi.clear();
}

void fill_state_price(ScenarioPath& path, const MarketModel& model,
                      const model::DerivedCoefficients& coef) {
    const auto& g = path.grid;
    const int n = g.n_steps;
    const double dt = g.dt();
    path.pi.resize(static_cast<std::size_t>(n) + 1);
    path.pi[0] = 1.0;
    double log_pi = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double tk = path.t[i];
        const double b = coef.b(tk);
        const double d = coef.d(tk);
        const double dB = path.B[i + 1] - path.B[i];
        const double dBt = path.B_tilde[i + 1] - path.B_tilde[i];
        const double dqv = path.qv[i + 1] - path.qv[i];
        const double dqvt = path.qv_tilde[i + 1] - path.qv_tilde[i];
        log_pi -= model.r.integral(tk, path.t[i + 1]) + b * d * dt;
        log_pi -= b * dBt + 0.5 * b * b * dqvt;
        log_pi -= d * dB + 0.5 * d * d * dqv;
        path.pi[i + 1] = std::exp(log_pi);
    }
}

}  // namespace

void simulate_scenario_into(ScenarioPath& path, const VolatilityControl& control,
                            const MarketModel& model, const TimeGrid& grid,
                            std::span<const double> normals, double spot0) {
    grid.validate();
    check_schedule_length(control, grid);
    if (!(spot0 > 0.0)) throw InvalidInput("spot0 must be positive");
    const auto n = static_cast<std::size_t>(grid.n_steps);
    if (normals.size() < n) throw InvalidInput("not enough driver draws for the grid");

    path.grid = grid;
    resize_path(path, n);
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);

    path.t[0] = grid.t0;
    path.W[0] = path.B[0] = path.qv[0] = path.qv_empirical[0] = 0.0;
    path.B_tilde[0] = path.qv_tilde[0] = path.cross_variation[0] = 0.0;
    path.S[0] = spot0;
    double log_s = std::log(spot0);

    for (std::size_t k = 0; k < n; ++k) {
        const double tk = path.t[k];
        const double v = control.variance(static_cast<int>(k), path.S[k]);
        path.v[k] = v;
        const double dW = sqrt_dt * normals[k];
        const double dB = std::sqrt(v) * dW;
        const double dBt = dB / v;

        path.t[k + 1] = grid.time(static_cast<int>(k) + 1);
        path.W[k + 1] = path.W[k] + dW;
        path.B[k + 1] = path.B[k] + dB;
        path.qv[k + 1] = path.qv[k] + v * dt;
        path.qv_empirical[k + 1] = path.qv_empirical[k] + dB * dB;
        path.B_tilde[k + 1] = path.B_tilde[k] + dBt;
        path.qv_tilde[k + 1] = path.qv_tilde[k] + dt / v;
        // d<B, B~> = v * v^{-1} dt = dt
        path.cross_variation[k + 1] = path.t[k + 1] - grid.t0;

        const double sig = model.sigma(tk);
        log_s += (model.eta(tk) + model.mu(tk) * v - 0.5 * sig * sig * v) * dt + sig * dB;
        path.S[k + 1] = std::exp(log_s);
    }
}

ScenarioPath simulate_scenario(const VolatilityControl& control, const MarketModel& model,
                               const TimeGrid& grid, std::uint64_t seed, double spot0) {
    model.validate();
    grid.validate();
    std::vector<double> z(static_cast<std::size_t>(grid.n_steps));
    draw_normals(seed, z);
    ScenarioPath path;
    simulate_scenario_into(path, control, model, grid, z, spot0);
    return path;
}

void simulate_state_price(ScenarioPath& path, const MarketModel& model) {
    fill_state_price(path, model, model::derive_coefficients(model));
}

GExpectationEstimate estimate_g_expectation(const PathFunctional& functional,
                                            std::span<const VolatilityControl> family,
                                            const MarketModel& model, const TimeGrid& grid,
                                            const EstimatorConfig& config) {
    if (family.empty()) throw InvalidInput("g-expectation estimate needs a non-empty control family");
    if (config.n_paths == 0) throw InvalidInput("g-expectation estimate needs n_paths >= 1");
    model.validate();
    grid.validate();
    for (const auto& c : family) check_schedule_length(c, grid);
    const auto coef = model::derive_coefficients(model);

    const std::size_t n_ctrl = family.size();
    std::vector<std::vector<double>> samples(n_ctrl, std::vector<double>(config.n_paths));

    parallel_for(config.n_paths, config.threads, [&](std::size_t begin, std::size_t end) {
        ScenarioPath path;
        std::vector<double> z(static_cast<std::size_t>(grid.n_steps));
        for (std::size_t i = begin; i < end; ++i) {
            draw_normals(path_seed(config.seed, i), z);
            for (std::size_t c = 0; c < n_ctrl; ++c) {
                simulate_scenario_into(path, family[c], model, grid, z, config.spot0);
                if (config.state_price) fill_state_price(path, model, coef);
                samples[c][i] = functional(path);
            }
        }
    });

    GExpectationEstimate out;
    for (std::size_t c = 0; c < n_ctrl; ++c) {
        const auto stats = sample_stats(samples[c]);
        out.control_ids.push_back(family[c].id());
        out.means.push_back(stats.mean);
        out.std_errors.push_back(stats.std_error);
        if (c == 0 || stats.mean > out.means[out.argmax]) out.argmax = c;
    }
    out.value = out.means[out.argmax];
    return out;
}

SdeSpec SdeSpec::affine(double b0, double b1, double h0, double h1, double s0, double s1,
                        double initial) {
    SdeSpec s;
    s.b = [=](double, double x) { return b0 + b1 * x; };
    s.h = [=](double, double x) { return h0 + h1 * x; };
    s.sigma = [=](double, double x) { return s0 + s1 * x; };
    s.lipschitz_K = std::abs(b1) + std::abs(h1) + std::abs(s1);
    s.initial = initial;
    return s;
}

namespace {

std::vector<std::string> check_comparison_hypotheses(const SdeSpec& s1, const SdeSpec& s2,
                                                     const TimeGrid& grid) {
    std::vector<std::string> unmet;
    if (!(s1.initial >= s2.initial)) unmet.push_back("initial values: eta1 < eta2");

    const double centre = 0.5 * (s1.initial + s2.initial);
    const double reach = 10.0 * (1.0 + std::abs(s1.initial) + std::abs(s2.initial));
    constexpr int n_x = 41;
    // rounding dust in algebraically equal coefficients is not a violation
    auto below = [](double a, double b) { return a < b - 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); };
    bool b_ok = true, h_ok = true, sigma_ok = true;
    for (int k = 0; k <= grid.n_steps; ++k) {
        const double t = grid.time(k);
        for (int j = 0; j < n_x; ++j) {
            const double x = centre - reach + 2.0 * reach * j / (n_x - 1);
            if (below(s1.b(t, x), s2.b(t, x))) b_ok = false;
            if (below(s1.h(t, x), s2.h(t, x))) h_ok = false;
            const double sa = s1.sigma(t, x), sb = s2.sigma(t, x);
            if (std::abs(sa - sb) > 1e-12 * std::max({1.0, std::abs(sa), std::abs(sb)}))
                sigma_ok = false;
        }
    }
    if (!b_ok) unmet.push_back("drift: b1 < b2 somewhere on the tabulation");
    if (!h_ok) unmet.push_back("d<B> coefficient: h1 < h2 somewhere on the tabulation");
    if (!sigma_ok) unmet.push_back("diffusion coefficients differ");

    const auto n = static_cast<std::size_t>(grid.n_steps) + 1;
    auto forcing = [n](const SdeSpec& s, std::size_t k) {
        return s.forcing.empty() ? 0.0 : s.forcing[k];
    };
    if ((!s1.forcing.empty() && s1.forcing.size() != n) || (!s2.forcing.empty() && s2.forcing.size() != n))
        throw InvalidInput("SDE forcing must have one value per grid point");
    for (std::size_t k = 1; k < n; ++k) {
        const double inc = (forcing(s1, k) - forcing(s2, k)) - (forcing(s1, k - 1) - forcing(s2, k - 1));
        if (inc < 0.0) {
            unmet.push_back("forcing: V1 - V2 decreases");
            break;
        }
    }
    return unmet;
}

}  // namespace

ComparisonReport compare_sdes(const SdeSpec& spec1, const SdeSpec& spec2,
                              const VolatilityControl& control, const TimeGrid& grid,
                              std::size_t n_paths, std::uint64_t seed, double ord_tol,
                              int threads) {
    grid.validate();
    check_schedule_length(control, grid);
    ComparisonReport report;
    report.unmet = check_comparison_hypotheses(spec1, spec2, grid);
    report.hypotheses_met = report.unmet.empty();
    report.n_paths = n_paths;
    report.ord_tol = ord_tol;

    const auto n = static_cast<std::size_t>(grid.n_steps);
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    std::vector<std::size_t> path_violations(n_paths, 0);
    std::vector<double> path_max(n_paths, 0.0);

    auto forcing_inc = [](const SdeSpec& s, std::size_t k) {
        return s.forcing.empty() ? 0.0 : s.forcing[k + 1] - s.forcing[k];
    };

    parallel_for(n_paths, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> z(n);
        for (std::size_t i = begin; i < end; ++i) {
            draw_normals(path_seed(seed, i), z);
            double x1 = spec1.initial, x2 = spec2.initial;
            auto check = [&](double a, double b) {
                const double gap = b - a;
                if (gap > ord_tol * std::max({1.0, std::abs(a), std::abs(b)})) {
                    ++path_violations[i];
                    path_max[i] = std::max(path_max[i], gap);
                }
            };
            check(x1, x2);
            for (std::size_t k = 0; k < n; ++k) {
                const double t = grid.time(static_cast<int>(k));
                const double v = control.variance(static_cast<int>(k), x1);
                const double dB = std::sqrt(v) * sqrt_dt * z[k];
                const double n1 = x1 + spec1.b(t, x1) * dt + spec1.h(t, x1) * v * dt +
                                  spec1.sigma(t, x1) * dB + forcing_inc(spec1, k);
                const double n2 = x2 + spec2.b(t, x2) * dt + spec2.h(t, x2) * v * dt +
                                  spec2.sigma(t, x2) * dB + forcing_inc(spec2, k);
                x1 = n1;
                x2 = n2;
                check(x1, x2);
            }
        }
    });

    report.checks = n_paths * (n + 1);
    for (std::size_t i = 0; i < n_paths; ++i) {
        report.violations += path_violations[i];
        report.max_violation = std::max(report.max_violation, path_max[i]);
    }
    return report;
}

namespace {

struct GirsanovPathResult {
    double qv_gap, cross_gap, empirical_cross_gap, residual;
};

GirsanovPathResult girsanov_path(ScenarioPath& path, const VolatilityControl& control,
                                 const MarketModel& model, const model::DerivedCoefficients& coef,
                                 const TimeGrid& grid, std::span<const double> z) {
    simulate_scenario_into(path, control, model, grid, z, 1.0);
    const auto n = static_cast<std::size_t>(grid.n_steps);
    const double dt = grid.dt();
    double shift_total = 0.0, bg = 0.0, qv_g = 0.0, qv_b = 0.0, cross = 0.0, residual = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double tk = path.t[k];
        const double dB = path.B[k + 1] - path.B[k];
        const double shift = coef.b(tk) * dt + coef.d(tk) * (path.qv[k + 1] - path.qv[k]);
        const double dBg = dB - shift;
        bg += dBg;
        shift_total += shift;
        qv_g += dBg * dBg;
        qv_b += dB * dB;
        cross += dB * (path.B_tilde[k + 1] - path.B_tilde[k]);
        residual = std::max(residual, std::abs(bg + shift_total - path.B[k + 1]));
    }
    const double span = grid.T - grid.t0;
    return {std::abs(qv_g - qv_b), std::abs(path.cross_variation[n] - span),
            std::abs(cross - span), residual};
}

GirsanovReport reduce(const std::vector<GirsanovPathResult>& rs, int n_steps) {
    GirsanovReport r;
    r.n_steps = n_steps;
    for (const auto& p : rs) {
        r.max_qv_gap = std::max(r.max_qv_gap, p.qv_gap);
        r.max_cross_variation_gap = std::max(r.max_cross_variation_gap, p.cross_gap);
        r.max_empirical_cross_gap = std::max(r.max_empirical_cross_gap, p.empirical_cross_gap);
        r.max_drift_shift_residual = std::max(r.max_drift_shift_residual, p.residual);
    }
    return r;
}

}  // namespace

GirsanovReport girsanov_qv_check(const MarketModel& model, const VolatilityControl& control,
                                 const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                 int threads) {
    model.validate();
    grid.validate();
    check_schedule_length(control, grid);
    const auto coef = model::derive_coefficients(model);
    std::vector<GirsanovPathResult> results(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t begin, std::size_t end) {
        ScenarioPath path;
        std::vector<double> z(static_cast<std::size_t>(grid.n_steps));
        for (std::size_t i = begin; i < end; ++i) {
            draw_normals(path_seed(seed, i), z);
            results[i] = girsanov_path(path, control, model, coef, grid, z);
        }
    });
    return reduce(results, grid.n_steps);
}

GirsanovRefinement girsanov_refinement(const MarketModel& model, const VolatilityControl& control,
                                       const TimeGrid& grid, std::size_t n_paths,
                                       std::uint64_t seed, int threads) {
    model.validate();
    grid.validate();
    check_schedule_length(control, grid);
    TimeGrid fine_grid = grid;
    fine_grid.n_steps = 2 * grid.n_steps;
    VolatilityControl fine_control = control;
    if (!control.is_threshold()) {
        std::vector<double> doubled;
        doubled.reserve(control.values().size() * 2);
        for (double v : control.values()) doubled.insert(doubled.end(), {v, v});
        fine_control = VolatilityControl::schedule(std::move(doubled), control.id());
    }
    const auto coef = model::derive_coefficients(model);
    const auto n = static_cast<std::size_t>(grid.n_steps);

    std::vector<GirsanovPathResult> coarse(n_paths), fine(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t begin, std::size_t end) {
        ScenarioPath path;
        std::vector<double> zf(2 * n), zc(n);
        for (std::size_t i = begin; i < end; ++i) {
            draw_normals(path_seed(seed, i), zf);
            // sqrt(2 dt_f) (z1 + z2) / sqrt(2) = dW_1 + dW_2
            for (std::size_t k = 0; k < n; ++k) zc[k] = (zf[2 * k] + zf[2 * k + 1]) / std::sqrt(2.0);
            fine[i] = girsanov_path(path, fine_control, model, coef, fine_grid, zf);
            coarse[i] = girsanov_path(path, control, model, coef, grid, zc);
        }
    });
    GirsanovRefinement out;
    out.coarse = reduce(coarse, grid.n_steps);
    out.fine = reduce(fine, fine_grid.n_steps);
    out.qv_gap_ratio = out.fine.max_qv_gap > 0.0 ? out.coarse.max_qv_gap / out.fine.max_qv_gap : 0.0;
    return out;
}

}  // namespace uvol::scenario
