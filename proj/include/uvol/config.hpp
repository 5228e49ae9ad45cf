#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "uvol/model.hpp"
#include "uvol/payoff.hpp"
#include "uvol/pde.hpp"
#include "uvol/scenario.hpp"

namespace uvol::cli {

/// Config rejected at load time; the message starts with the offending field path.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct GridConfig {
    pde::XMode x_mode = pde::XMode::log_price;
    int n_x = 400;
    int n_t = 0;
    int retain_every = 0;
    std::optional<double> half_width;  // default: 6 sigma_bar sqrt(T) in ln x
};

struct McConfig {
    std::size_t n_paths = 100000;
    int n_steps = 512;
    std::string family = "default";  // default | constants
};

struct HedgeConfig {
    std::string control = "v_high";  // v_high | v_low
    std::string initial = "super";   // super | sub
    double margin = 0.0;             // subtracted from the initial wealth
    double epsilon = 0.01;           // mean |surplus| target, relative to the price
    int histogram_bins = 50;
};

struct ValidateConfig {
    double ord_tol = scenario::default_ord_tol;
    std::size_t comparison_paths = 1000;
    std::size_t girsanov_paths = 200;
    int n_steps = 256;
    int refinement_levels = 3;
    int refinement_base_nx = 200;
};

struct SurfaceConfig {
    pde::Side side = pde::Side::super;
};

struct ConvergenceConfig {
    int levels = 4;
    int base_nx = 100;
    pde::Side side = pde::Side::super;
};

struct RunConfig {
    model::MarketModel model;
    model::VolatilityBand band;
    model::Payoff payoff{model::Call{100.0}};
    double tau = 0.0;
    double spot = 100.0;
    GridConfig grid;
    McConfig mc;
    HedgeConfig hedge;
    ValidateConfig validate;
    SurfaceConfig surface;
    ConvergenceConfig convergence;
    std::uint64_t seed = 42;
    int threads = 1;
    std::string output_dir = "out";

    /// PDE grid around `spot` honouring the grid settings.
    pde::PdeGrid pde_grid() const;
    pde::PdeGrid pde_grid(int n_x) const;
    scenario::TimeGrid time_grid() const { return {0.0, model.T, mc.n_steps}; }
};

RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::string& path);

/// Re-checks every downstream invariant; throws ConfigError with a field path.
void validate_config(const RunConfig& cfg);

}  // namespace uvol::cli
