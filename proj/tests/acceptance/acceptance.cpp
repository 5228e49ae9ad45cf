// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../oracles.hpp"
#include "uvol/closedform.hpp"
#include "uvol/hedging.hpp"
#include "uvol/pde.hpp"
#include "uvol/scenario.hpp"

using namespace uvol;
using model::MarketModel;
using model::Payoff;
using model::VolatilityBand;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    failures += !ok;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

MarketModel market(double eta = 0.02, double mu = 0.0) {
    MarketModel m;
    m.r = Curve(0.02);
    m.eta = Curve(eta);
    m.mu = Curve(mu);
    m.sigma = Curve(1.0);
    m.T = 1.0;
    return m;
}

const VolatilityBand wide{0.01, 0.09};
const Payoff call(model::Call{100});
const Payoff fly(model::Butterfly{90, 100, 110});

double pde_price(const Payoff& p, const MarketModel& m, const VolatilityBand& band, int n_x, pde::Side side) {
    const auto sol = pde::solve_bsb(p, m, band, pde::default_grid(m, band, 100.0, n_x), side);
    return pde::price_at(sol, 0.0, 100.0);
}

hedging::RepresentationReport representation(const Payoff& p, const MarketModel& m) {
    const scenario::TimeGrid tg{0.0, 1.0, 512};
    const auto family = scenario::default_family(wide, tg, 100.0);
    hedging::RepresentationConfig rc;
    rc.time_grid = tg;
    rc.n_paths = 100000;
    rc.seed = 42;
    return hedging::representation_check(p, m, wide, pde::default_grid(m, wide, 100.0, 400), family, rc);
}

void criterion1() {
    const auto m = market();
    bool ok = true;
    std::string detail;
    for (int n_x : {400, 1600}) {
        const double tol = n_x == 400 ? 0.005 : 0.001;
        const double limit = n_x == 400 ? 10.0 : 120.0;
        const auto t0 = std::chrono::steady_clock::now();
        const double sup = pde_price(call, m, wide, n_x, pde::Side::super);
        const double sub = pde_price(call, m, wide, n_x, pde::Side::sub);
        const double secs = seconds_since(t0);
        const double es = rel(sup, oracle::bs_call_s30), eb = rel(sub, oracle::bs_call_s10);
        ok = ok && es <= tol && eb <= tol && secs < limit;
        detail += fmt("n_x=%d super err %.2e sub err %.2e (tol %.1e, %.1fs); ", n_x, es, eb, tol, secs);
    }
    report(1, ok, detail);
}

void criterion2() {
    const auto m = market();
    const VolatilityBand flat{0.04, 0.04};
    const double sup = pde_price(call, m, flat, 400, pde::Side::super);
    const double sub = pde_price(call, m, flat, 400, pde::Side::sub);
    const double gap = std::abs(sup - sub) / oracle::bs_call_s20;
    const double es = rel(sup, oracle::bs_call_s20), eb = rel(sub, oracle::bs_call_s20);
    report(2, gap <= 0.001 && es <= 0.005 && eb <= 0.005,
           fmt("|super-sub| rel %.2e, super err %.2e, sub err %.2e", gap, es, eb));
}

void criterion3() {
    const auto m = market();
    const double hi = std::max(oracle::fly_s10, oracle::fly_s30);
    const double lo = std::min(oracle::fly_s10, oracle::fly_s30);
    const double up400 = pde_price(fly, m, wide, 400, pde::Side::super) - hi;
    const double up800 = pde_price(fly, m, wide, 800, pde::Side::super) - hi;
    const double dn400 = lo - pde_price(fly, m, wide, 400, pde::Side::sub);
    const double dn800 = lo - pde_price(fly, m, wide, 800, pde::Side::sub);
    const double cu = rel(up800, up400), cd = rel(dn800, dn400);
    report(3, up400 > 0 && up800 > 0 && dn400 > 0 && dn800 > 0 && cu < 0.1 && cd < 0.1,
           fmt("super margin %.5f -> %.5f (change %.2e), sub margin %.5f -> %.5f (change %.2e)", up400, up800,
               cu, dn400, dn800, cd));
}

hedging::RepresentationReport call_rep;

void criterion4() {
    call_rep = representation(call, market());
    const auto fly_rep = representation(fly, market());
    report(4, call_rep.sandwich_holds && fly_rep.sandwich_holds,
           fmt("call mc %.5f vs pde %.5f + tol %.5f; butterfly mc %.5f vs pde %.5f + tol %.5f", call_rep.mc_value,
               call_rep.pde_price, call_rep.tolerance, fly_rep.mc_value, fly_rep.pde_price, fly_rep.tolerance));
}

void criterion5() {
    const auto shifted = representation(call, market(0.07, 0.5));
    const double change = std::abs(shifted.mc_value - call_rep.mc_value);
    const double combined = shifted.tolerance + call_rep.tolerance;
    report(5, shifted.agrees && change < combined,
           fmt("eta=0.07 mu=0.5: mc %.5f vs pde %.5f (gap %.5f, tol %.5f); change vs eta=r mu=0 %.5f < %.5f",
               shifted.mc_value, shifted.pde_price, shifted.gap, shifted.tolerance, change, combined));
}

void criterion6() {
    const Payoff square(model::Polynomial{{0.0, 0.0, 1.0}});
    const auto grid = pde::centered_grid(pde::XMode::arithmetic, 0.0, 10.0 * std::sqrt(wide.v_high), 400);
    const double up = pde::price_at(pde::solve_g_heat(square, wide, 1.0, grid), 1.0, 0.0);
    const double down = pde::price_at(pde::solve_g_heat(square.negated(), wide, 1.0, grid), 1.0, 0.0);
    const double eu = rel(up, wide.v_high), ed = rel(down, -wide.v_low);
    report(6, eu <= 0.005 && ed <= 0.005, fmt("x^2 -> %.8f (err %.2e), -x^2 -> %.8f (err %.2e)", up, eu, down, ed));
}

void criterion7() {
    const auto base = scenario::SdeSpec::affine(0.05, -0.1, 0.2, 0.1, 0.3, 0.05, 1.0);
    auto drift = base;
    drift.b = [](double, double x) { return 1.05 - 0.1 * x; };
    auto initial = base;
    initial.initial = 2.0;
    const scenario::TimeGrid tg{0.0, 1.0, 256};
    const auto control = scenario::VolatilityControl::threshold(1.0, wide.v_high, wide.v_low, "threshold_x0");
    const auto t0 = std::chrono::steady_clock::now();
    const auto a = scenario::compare_sdes(drift, base, control, tg, 1000, 42);
    const auto b = scenario::compare_sdes(initial, base, control, tg, 1000, 42);
    const double secs = seconds_since(t0);
    report(7, a.certified() && b.certified() && secs < 5.0,
           fmt("shifted drift %zu/%zu violations, shifted initial %zu/%zu violations, ord_tol %.0e, %.2fs",
               a.violations, a.checks, b.violations, b.checks, a.ord_tol, secs));
}

void criterion8() {
    const auto m = market(0.07, 0.5);
    const scenario::TimeGrid tg{0.0, 1.0, 256};
    const auto control = scenario::VolatilityControl::constant(wide.v_high, tg.n_steps, "const_v_high");
    const auto path = scenario::simulate_scenario(control, m, tg, 42, 100.0);
    const bool exact = path.cross_variation.back() == tg.T;
    const auto ref = scenario::girsanov_refinement(m, control, tg, 200, 42);
    const bool bracket = ref.coarse.max_cross_variation_gap == 0.0 && ref.fine.max_cross_variation_gap == 0.0;
    const bool rate = ref.qv_gap_ratio >= 1.5 && ref.qv_gap_ratio <= 3.0;
    report(8, exact && bracket && rate,
           fmt("<B,B~>_T == T: %s, bracket gaps %.1e/%.1e, qv gap %.3e -> %.3e (ratio %.3f)", exact ? "yes" : "no",
               ref.coarse.max_cross_variation_gap, ref.fine.max_cross_variation_gap, ref.coarse.max_qv_gap,
               ref.fine.max_qv_gap, ref.qv_gap_ratio));
}

hedging::ReplicationReport hedge(int n_x, int steps, double v, double initial) {
    const auto m = market();
    const auto sol = std::make_shared<const pde::PdeSolution>(
        pde::solve_bsb(call, m, wide, pde::default_grid(m, wide, 100.0, n_x), pde::Side::super));
    const auto strategy = hedging::extract_strategy(sol, m);
    hedging::ReplicationConfig rc;
    rc.time_grid = {0.0, 1.0, steps};
    rc.n_paths = 10000;
    rc.seed = 42;
    return hedging::replicate(strategy, initial, call, m, scenario::VolatilityControl::constant(v, steps), rc);
}

void criterion9() {
    const double price = hedging::hedging_prices(call, market(), wide, 0.0, 100.0).super;
    const double eps = 0.005 * price;
    const auto base = hedge(400, 512, wide.v_high, price);
    const auto fine = hedge(800, 1024, wide.v_high, price);
    const double rb = base.mean_abs_surplus / price, rf = fine.mean_abs_surplus / price;
    const bool a = base.valid && rb <= 0.01 && fine.mean_abs_surplus < base.mean_abs_surplus;
    report(9, a,
           fmt("(a) v_high: mean |surplus| %.3f%% of price at n_x=400/512 steps (limit 1%%), %.3f%% at n_x=800/1024",
               100 * rb, 100 * rf));
    const auto low = hedge(400, 512, wide.v_low, price);
    const bool b = low.valid && low.min_surplus >= -eps && low.residual_max_rise <= eps;
    report(9, b,
           fmt("(b) v_low: min surplus %.5f (limit %.5f), residual max rise %.2e (limit %.5f)", low.min_surplus,
               -eps, low.residual_max_rise, eps));
}

int run_cli(const std::string& command, const fs::path& config, const fs::path& out, const std::string& extra) {
    const std::string line = std::string(UVOL_CLI_PATH) + " " + command + " --config " + config.string() +
                             " --out " + out.string() + " " + extra + " > /dev/null 2>&1";
    const int status = std::system(line.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void criterion10() {
    std::string detail;

    bool identity = true;
    for (double lo : {0.0, 0.01, 0.04})
        for (double hi : {0.04, 0.09, 0.25})
            for (double a : {-7.5, -1.0, -1e-3, 0.0, 0.3, 2.0, 1e4}) {
                const VolatilityBand band{lo, hi};
                identity = identity && model::g_apply(a, band) + model::g_apply(-a, band) ==
                                           0.5 * (hi * std::abs(a) - lo * std::abs(a));
            }
    detail += fmt("g gap identity %s; ", identity ? "exact" : "broken");

    const auto m = market();
    const auto p0 = hedging::hedging_prices(fly, m, wide, 0.0, 100.0);
    const auto pt = hedging::hedging_prices(fly.shifted(3.0), m, wide, 0.0, 100.0);
    const auto ph = hedging::hedging_prices(fly.scaled(2.5), m, wide, 0.0, 100.0);
    const double bond = 3.0 * std::exp(-0.02);
    const double tol = p0.diagnostics.grid_tolerance;
    const double dt = std::max(std::abs(pt.super - p0.super - bond), std::abs(pt.sub - p0.sub - bond));
    const double dh = std::max(std::abs(ph.super - 2.5 * p0.super), std::abs(ph.sub - 2.5 * p0.sub));
    const bool invariants = dt <= tol && dh <= 2.5 * tol;
    detail += fmt("translation err %.1e, homogeneity err %.1e (tol %.1e); ", dt, dh, tol);

    const scenario::TimeGrid tg{0.0, 1.0, 128};
    const auto family = scenario::default_family(wide, tg, 100.0);
    scenario::EstimatorConfig ec;
    ec.n_paths = 5000;
    const double disc = std::exp(-0.02);
    const scenario::PathFunctional f = [&](const scenario::ScenarioPath& p) { return disc * fly(p.S.back()); };
    const scenario::PathFunctional g = [&](const scenario::ScenarioPath& p) { return -f(p); };
    const auto full = scenario::estimate_g_expectation(f, family, m, tg, ec);
    const std::vector<scenario::VolatilityControl> part(family.begin(), family.begin() + 2);
    const auto sub = scenario::estimate_g_expectation(f, part, m, tg, ec);
    const auto neg = scenario::estimate_g_expectation(g, family, m, tg, ec);
    const bool monotone = sub.value <= full.value;
    const bool flip = neg.value + full.value > 0.0;
    detail += fmt("family %.4f <= %.4f, E[X] + E[-X] = %.4f > 0; ", sub.value, full.value, neg.value + full.value);

    const auto dir = fs::temp_directory_path() / ("uvol_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    std::ifstream in(fs::path(UVOL_CONFIG_DIR) / "butterfly.json");
    auto cfg = nlohmann::json::parse(in);
    cfg["mc"]["n_paths"] = 5000;
    cfg["mc"]["n_steps"] = 128;
    const auto config = dir / "config.json";
    std::ofstream(config) << cfg.dump(2);
    const std::pair<const char*, std::vector<const char*>> commands[] = {
        {"price", {"price.json"}},
        {"mc-bound", {"mc_bound.json"}},
        {"hedge-sim", {"hedge_sim.json", "surplus.csv", "surplus_histogram.csv", "residual.csv"}},
        {"surface", {"surface_u.csv", "surface_delta.csv", "surface.json"}},
        {"convergence", {"convergence.csv", "convergence.json"}},
    };
    bool identical = true;
    int compared = 0;
    for (const auto& [command, files] : commands) {
        const bool ran = run_cli(command, config, dir / "a", "--threads 1") == 0 &&
                         run_cli(command, config, dir / "b", "--threads 1") == 0 &&
                         run_cli(command, config, dir / "c", "--threads 4") == 0;
        identical = identical && ran;
        for (const char* file : files) {
            const auto a = slurp(dir / "a" / file);
            identical = identical && !a.empty() && a == slurp(dir / "b" / file) && a == slurp(dir / "c" / file);
            ++compared;
        }
    }
    fs::remove_all(dir);
    detail += fmt("CLI outputs byte-identical across reruns and threads: %s (%d files)", identical ? "yes" : "no",
                  compared);

    report(10, identity && invariants && monotone && flip && identical, detail);
}

}  // namespace

int main() {
    const std::vector<std::function<void()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                         criterion6, criterion7, criterion8, criterion9, criterion10};
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        try {
            criteria[i]();
        } catch (const std::exception& e) {
            report(static_cast<int>(i + 1), false, std::string("exception: ") + e.what());
        }
    }
    std::printf("%d failing\n", failures);
    return failures == 0 ? 0 : 1;
}
