#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "uvol/commands.hpp"
#include "uvol/config.hpp"
#include "uvol/errors.hpp"

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("uvol");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("UVOL_LOG")) {
        const std::string level = env;
        if (level == "error") spdlog::set_level(spdlog::level::err);
        else if (level == "info") spdlog::set_level(spdlog::level::info);
        else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    }
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"uvol: hedging prices under volatility uncertainty"};
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads, grid_nx, mc_steps;
    std::optional<std::size_t> mc_paths;

    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "output directory (overrides output_dir)");
    app.add_option("--seed", seed, "base seed");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--grid-nx", grid_nx, "interior PDE nodes")->check(CLI::Range(16, 1 << 20));
    app.add_option("--mc-paths", mc_paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
    app.add_option("--mc-steps", mc_steps, "Monte Carlo time steps")->check(CLI::PositiveNumber);

    std::string command;
    const std::pair<const char*, const char*> commands[] = {
        {"price", "super- and subhedging prices at (tau, spot)"},
        {"mc-bound", "scenario Monte Carlo estimate against the PDE super price"},
        {"hedge-sim", "replicate the claim along simulated paths"},
        {"validate", "comparison, Girsanov, refinement and G-heat checks"},
        {"surface", "price and delta surfaces as CSV"},
        {"convergence", "grid refinement study"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        sub->callback([&command, name] { command = name; });
    }
    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return uvol::cli::exit_config;
    }

    uvol::cli::RunConfig cfg;
    try {
        cfg = uvol::cli::load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = *threads;
        if (grid_nx) cfg.grid.n_x = *grid_nx;
        if (mc_paths) cfg.mc.n_paths = *mc_paths;
        if (mc_steps) cfg.mc.n_steps = *mc_steps;
        uvol::cli::validate_config(cfg);
    } catch (const std::exception& e) {
        spdlog::error("config: {}", e.what());
        std::cerr << "config error: " << e.what() << '\n';
        return uvol::cli::exit_config;
    }

    try {
        const auto start = std::chrono::steady_clock::now();
        const auto result = uvol::cli::run_command(command, cfg);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        spdlog::info("{} finished in {:.3f} s", command, elapsed.count());
        std::cout << result.summary << '\n';
        return result.exit_code;
    } catch (const uvol::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return uvol::cli::exit_config;
    } catch (const uvol::InvalidInput& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return uvol::cli::exit_config;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return uvol::cli::exit_solver;
    }
}
