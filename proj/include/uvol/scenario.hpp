#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "uvol/model.hpp"

namespace uvol::scenario {

using model::MarketModel;
using model::VolatilityBand;

/// Uniform grid t_k = t0 + k (T - t0) / n_steps, with t_{n_steps} == T exactly.
struct TimeGrid {
    double t0 = 0.0;
    double T = 1.0;
    int n_steps = 512;

    void validate() const;
    double dt() const { return (T - t0) / n_steps; }
    double time(int k) const { return k == n_steps ? T : t0 + k * dt(); }
};

/// One admissible variance path, selecting one measure of the representing family.
///
/// A schedule fixes v_k per step; a threshold control is a bang-bang feedback that uses
/// v_below while the spot at the start of the step is below `level` and v_above otherwise.
class VolatilityControl {
public:
    static VolatilityControl schedule(std::vector<double> values, std::string id = "schedule");
    static VolatilityControl constant(double v, int n_steps, std::string id = "");
    static VolatilityControl threshold(double level, double v_below, double v_above,
                                       std::string id = "");

    /// Throws InvalidInput on a band violation or a schedule/grid length mismatch.
    void validate(const VolatilityBand& band, const TimeGrid& grid) const;

    double variance(int k, double spot) const {
        if (!is_threshold_) return values_[static_cast<std::size_t>(k)];
        return spot < level_ ? v_below_ : v_above_;
    }

    const std::string& id() const { return id_; }
    bool is_threshold() const { return is_threshold_; }
    const std::vector<double>& values() const { return values_; }
    double level() const { return level_; }
    double v_below() const { return v_below_; }
    double v_above() const { return v_above_; }

private:
    std::string id_;
    bool is_threshold_ = false;
    std::vector<double> values_;
    double level_ = 0.0, v_below_ = 0.0, v_above_ = 0.0;
};

/// Two constant extremes plus three threshold controls at spot * {0.9, 1, 1.1} that run
/// at v_high below the level and at v_low above it.
std::vector<VolatilityControl> default_family(const VolatilityBand& band, const TimeGrid& grid,
                                              double spot0);

/// One realisation on the extended space. Arrays indexed by grid point have n_steps + 1
/// entries; `v` holds the n_steps realised per-step variances.
struct ScenarioPath {
    TimeGrid grid;
    std::vector<double> t;
    std::vector<double> W;                // driver
    std::vector<double> B;                // dB = sqrt(v) dW
    std::vector<double> qv;               // <B> by construction, sum v dt
    std::vector<double> qv_empirical;     // sum dB^2
    std::vector<double> B_tilde;          // dB~ = dB / v
    std::vector<double> qv_tilde;         // <B~> by construction, sum dt / v
    std::vector<double> cross_variation;  // <B, B~> by construction, t - t0
    std::vector<double> S;
    std::vector<double> pi;               // filled by simulate_state_price
    std::vector<double> v;
};

/// Seed of path `index` under base seed `base_seed` (splitmix64 mixing).
std::uint64_t path_seed(std::uint64_t base_seed, std::uint64_t index);

/// n standard normal draws from mt19937_64 seeded with `seed`.
void draw_normals(std::uint64_t seed, std::span<double> out);

ScenarioPath simulate_scenario(const VolatilityControl& control, const MarketModel& model,
                               const TimeGrid& grid, std::uint64_t seed, double spot0);

/// Same as simulate_scenario with caller-supplied standard normals (one per step);
/// reuses the storage of `path`.
void simulate_scenario_into(ScenarioPath& path, const VolatilityControl& control,
                            const MarketModel& model, const TimeGrid& grid,
                            std::span<const double> normals, double spot0);

/// Closed-form state price along the path:
/// pi_t = exp(-int (r + b d) ds) exp(-int b dB~ - 1/2 int b^2 d<B~>) exp(-int d dB - 1/2 int d^2 d<B>).
void simulate_state_price(ScenarioPath& path, const MarketModel& model);

using PathFunctional = std::function<double(const ScenarioPath&)>;

struct EstimatorConfig {
    std::size_t n_paths = 10000;
    std::uint64_t seed = 42;
    double spot0 = 100.0;
    int threads = 1;
    bool state_price = false;  // fill pi before evaluating the functional
};

struct GExpectationEstimate {
    double value = 0.0;
    std::size_t argmax = 0;
    std::vector<std::string> control_ids;
    std::vector<double> means;
    std::vector<double> std_errors;
};

/// max over the family of Monte-Carlo means, with common random numbers across controls.
/// A lower-bound estimate of the sublinear expectation, up to Monte-Carlo error.
GExpectationEstimate estimate_g_expectation(const PathFunctional& functional,
                                            std::span<const VolatilityControl> family,
                                            const MarketModel& model, const TimeGrid& grid,
                                            const EstimatorConfig& config);

/// dX = b(t, X) dt + h(t, X) d<B> + sigma(t, X) dB + dV, X(t0) = initial.
struct SdeSpec {
    std::function<double(double, double)> b;
    std::function<double(double, double)> h;
    std::function<double(double, double)> sigma;
    double lipschitz_K = 1.0;
    double initial = 0.0;
    std::vector<double> forcing;  // V at the grid points; empty means V == 0

    /// Coefficients affine in x: b = b0 + b1 x, h = h0 + h1 x, sigma = s0 + s1 x.
    static SdeSpec affine(double b0, double b1, double h0, double h1, double s0, double s1,
                          double initial);
};

struct ComparisonReport {
    bool hypotheses_met = true;
    std::vector<std::string> unmet;
    std::size_t n_paths = 0;
    std::size_t checks = 0;
    std::size_t violations = 0;
    double max_violation = 0.0;
    double ord_tol = 0.0;
    bool certified() const { return hypotheses_met && violations == 0; }
};

inline constexpr double default_ord_tol = 1e-10;

/// Simulates both SDEs on the same driver per path (Euler-Maruyama with d<B> = v dt) and
/// counts grid points where X2 - X1 > ord_tol * max(1, |X1|, |X2|).
ComparisonReport compare_sdes(const SdeSpec& spec1, const SdeSpec& spec2,
                              const VolatilityControl& control, const TimeGrid& grid,
                              std::size_t n_paths, std::uint64_t seed,
                              double ord_tol = default_ord_tol, int threads = 1);

struct GirsanovReport {
    int n_steps = 0;
    /// max over paths of |sum (dB~_g)^2 - sum dB^2|, B~_g = B - int b ds - int d d<B>.
    double max_qv_gap = 0.0;
    /// max over paths of |<B, B~>_T - (T - t0)| for the constructed bracket.
    double max_cross_variation_gap = 0.0;
    /// max over paths of |sum dB dB~ - (T - t0)| (sampling error of the realised bracket).
    double max_empirical_cross_gap = 0.0;
    /// max over paths of |B~_g + int b ds + int d d<B> - B|.
    double max_drift_shift_residual = 0.0;
};

GirsanovReport girsanov_qv_check(const MarketModel& model, const VolatilityControl& control,
                                 const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                 int threads = 1);

struct GirsanovRefinement {
    GirsanovReport coarse;
    GirsanovReport fine;
    double qv_gap_ratio = 0.0;  // coarse / fine
};

/// Runs the check on `grid` and on the grid with halved step. Coarse driver increments are
/// sums of consecutive fine increments; `control` is stated on `grid` and the fine run
/// holds each scheduled variance for two half steps.
GirsanovRefinement girsanov_refinement(const MarketModel& model, const VolatilityControl& control,
                                       const TimeGrid& grid, std::size_t n_paths,
                                       std::uint64_t seed, int threads = 1);

}  // namespace uvol::scenario
