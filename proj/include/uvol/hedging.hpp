#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "uvol/model.hpp"
#include "uvol/payoff.hpp"
#include "uvol/pde.hpp"
#include "uvol/scenario.hpp"

namespace uvol::hedging {

using model::MarketModel;
using model::Payoff;
using model::VolatilityBand;
using pde::PdeGrid;
using pde::PdeSolution;
using scenario::TimeGrid;
using scenario::VolatilityControl;

enum class PricingMethod { pde, convex_reduction };
const char* to_string(PricingMethod method);

struct PriceDiagnostics {
    int n_x = 0;
    int n_t = 0;
    double dt = 0.0;
    double x_min = 0.0;
    double x_max = 0.0;
    /// 0.005 |price| + 1e-6 spot, the per-side tolerance of the default grid
    double grid_tolerance = 0.0;
    /// convex reduction only: max over sides of |closed form - PDE|
    double cross_check_gap = 0.0;
    /// max over nodes of |sub sweep - (-super(-payoff))|
    double duality_gap = 0.0;
    double pde_super = 0.0;
    double pde_sub = 0.0;
};

struct PricePair {
    double super = 0.0;
    double sub = 0.0;
    double tau = 0.0;
    double spot = 0.0;
    PricingMethod method = PricingMethod::pde;
    PriceDiagnostics diagnostics;
};

/// Super- and subhedging prices at (tau, spot). Convex payoffs use the closed form at the
/// extreme variances, cross-checked against the PDE; everything else uses the PDE. The sub
/// price is -super(-payoff), checked node by node against a direct sub-side sweep.
/// Without a grid, pde::default_grid around `spot` is used.
PricePair hedging_prices(const Payoff& payoff, const MarketModel& model, const VolatilityBand& band,
                         double tau, double spot, std::optional<PdeGrid> grid = std::nullopt);

struct RepresentationConfig {
    TimeGrid time_grid;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 42;
    double spot = 100.0;
    int threads = 1;
};

struct RepresentationReport {
    double pde_price = 0.0;
    double mc_value = 0.0;
    double std_error = 0.0;
    /// dt |pde price| + |PDE(n_x) - PDE(n_x / 2)|
    double bias_allowance = 0.0;
    double gap = 0.0;        // mc_value - pde_price
    double tolerance = 0.0;  // 3 std_error + bias_allowance
    bool sandwich_holds = false;  // gap <= tolerance
    bool agrees = false;          // |gap| <= tolerance
    scenario::GExpectationEstimate estimate;
};

/// Compares the t = 0 PDE super price with the family estimate of sup E[pi_T Phi(S_T)].
RepresentationReport representation_check(const Payoff& payoff, const MarketModel& model,
                                          const VolatilityBand& band, const PdeGrid& grid,
                                          std::span<const VolatilityControl> family,
                                          const RepresentationConfig& config);

/// psi = x u_x (money in the risky asset) and Z = sigma psi on the retained slices.
struct HedgeStrategy {
    std::shared_ptr<const PdeSolution> solution;
    std::vector<double> times;
    std::vector<double> x;
    std::vector<double> psi;  // row-major, times.size() x x.size()
    std::vector<double> z;

    /// psi on the nearest retained slice at or before t, linear in x. Spots outside the
    /// grid are clamped to it and reported through `clamped`.
    double psi_at(double t, double spot, bool* clamped = nullptr) const;
    std::size_t slice_at_or_before(double t) const;
};

HedgeStrategy extract_strategy(std::shared_ptr<const PdeSolution> solution, const MarketModel& model);

struct ReplicationConfig {
    TimeGrid time_grid;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 42;
    double spot0 = 100.0;
    int threads = 1;
    double max_clamp_fraction = 0.01;
};

struct ReplicationReport {
    double initial_wealth = 0.0;
    std::vector<double> terminal_wealth;
    std::vector<double> payoff;
    std::vector<double> surplus;  // terminal_wealth - payoff
    /// mean over paths of u(t_k, S_k) - Y_k, the discrete counterpart of K (nonincreasing
    /// in the limit), one entry per time point
    std::vector<double> residual;
    double mean_surplus = 0.0;
    double mean_abs_surplus = 0.0;
    double min_surplus = 0.0;
    double max_surplus = 0.0;
    /// largest increase of `residual` over any stretch of time
    double residual_max_rise = 0.0;
    /// largest rise of u - Y above its running minimum over single paths
    double path_residual_max_rise = 0.0;
    std::size_t steps = 0;
    std::size_t clamp_events = 0;
    bool valid = true;
};

/// Runs the self-financing wealth recursion along scenario paths of `control`,
/// Y_{k+1} = (Y_k - psi_k) exp(int r) + psi_k S_{k+1} / S_k.
ReplicationReport replicate(const HedgeStrategy& strategy, double initial_wealth,
                            const Payoff& payoff, const MarketModel& model,
                            const VolatilityControl& control, const ReplicationConfig& config);

struct HistogramBin {
    double lo;
    double hi;
    std::size_t count;
};

/// Equal-width bins over [min, max] of the values.
std::vector<HistogramBin> histogram(std::span<const double> values, int bins);

}  // namespace uvol::hedging
