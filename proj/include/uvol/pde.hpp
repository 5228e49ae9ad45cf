#pragma once

#include <optional>
#include <span>
#include <vector>

#include "uvol/model.hpp"
#include "uvol/payoff.hpp"

namespace uvol::pde {

using model::MarketModel;
using model::Payoff;
using model::VolatilityBand;

enum class XMode { log_price, arithmetic };
enum class Side { super, sub };

const char* to_string(XMode mode);
const char* to_string(Side side);

/// Space-time grid of the backward sweep.
///
/// Nodes are uniform in ln x (log_price) or in x (arithmetic); there are n_x interior
/// nodes plus one boundary node on each side. n_t == 0 selects the time step from the
/// monotonicity bound; retain_every == 0 keeps at most max_auto_slices time slices.
struct PdeGrid {
    XMode x_mode = XMode::log_price;
    double x_min = 0.0;
    double x_max = 0.0;
    int n_x = 400;
    int n_t = 0;
    double anchor_spot = 100.0;
    int retain_every = 0;

    static constexpr int max_auto_slices = 1024;

    void validate() const;
    int node_count() const { return n_x + 2; }
    std::vector<double> nodes() const;
};

/// Grid centred on `anchor` with half-width `half_width` (in ln x for log_price, in x
/// otherwise); the anchor is placed exactly on a node.
PdeGrid centered_grid(XMode mode, double anchor, double half_width, int n_x);

/// Default log-price grid covering anchor * exp(+-6 sigma_bar sqrt(T)).
PdeGrid default_grid(const MarketModel& model, const VolatilityBand& band, double anchor,
                     int n_x = 400);

/// Value surface u(t, x) on the retained time slices, ascending in t.
struct PdeSolution {
    PdeGrid grid;
    Side side = Side::super;
    MarketModel model;
    VolatilityBand band;
    std::vector<double> x;
    std::vector<double> times;
    std::vector<double> values;  // row-major, times.size() x x.size()
    int n_t = 0;
    double dt = 0.0;

    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * x.size(), x.size()};
    }
    std::size_t slice_count() const { return times.size(); }
};

/// Solves d_t u + G((sigma_t x)^2 u_xx) + r_t x u_x - r_t u = 0, u(T, x) = Phi(x) for
/// side == super; side == sub replaces G(a) by -G(-a).
///
/// Explicit monotone scheme: central differences wherever they keep every neighbour
/// weight non-negative, upwind first-order terms otherwise. The optimisation over the
/// two extreme variances is taken on fully assembled candidate updates.
PdeSolution solve_bsb(const Payoff& payoff, const MarketModel& model, const VolatilityBand& band,
                      const PdeGrid& grid, Side side = Side::super);

/// u(t, x) = E_G[phi(x + sqrt(t) X)] for G-normal X, returned with ascending t in [0, t_horizon]
/// (row 0 is phi itself).
PdeSolution solve_g_heat(const Payoff& phi, const VolatilityBand& band, double t_horizon,
                         const PdeGrid& grid);

/// Bilinear interpolation (linear in t and in x). Throws DomainError outside the surface.
double price_at(const PdeSolution& sol, double t, double x);

/// Space derivative: three-point central differences at nodes, interpolated linearly.
/// x must lie between the first and last interior nodes.
double delta_at(const PdeSolution& sol, double t, double x);

/// Node derivatives of one retained slice (one-sided at the boundary nodes).
std::vector<double> slice_delta(const PdeSolution& sol, std::size_t slice);

struct RefinementLevel {
    int n_x;
    double h;
    double price;
    double error;
};

struct RefinementStudy {
    std::vector<RefinementLevel> levels;
    /// log(e_l / e_{l+1}) / log(h_l / h_{l+1}) for consecutive levels with non-zero errors.
    std::vector<double> observed_orders;
    /// |price_{l+1} - price_l|
    std::vector<double> successive_diffs;
    bool reference_is_finest = true;
};

/// Prices at the anchor on grids with n_x doubled per level. Errors are measured against
/// `reference` when given, otherwise against the finest level.
RefinementStudy refinement_study(const Payoff& payoff, const MarketModel& model,
                                 const VolatilityBand& band, const PdeGrid& base_grid, int levels,
                                 std::optional<double> reference = std::nullopt,
                                 Side side = Side::super);

}  // namespace uvol::pde
