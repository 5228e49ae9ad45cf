#include "uvol/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "uvol/errors.hpp"

namespace uvol::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

// Typed access to one JSON object with field paths in every error.
class Fields {
public:
    Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return obj_.contains(key) && !obj_[key].is_null(); }
    const json& raw(const std::string& key) const {
        if (!has(key)) fail(at(key), "missing required field");
        return obj_[key];
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
        if (!has(key)) {
            if (fallback) return *fallback;
            fail(at(key), "missing required field");
        }
        const auto& v = obj_[key];
        if (!v.is_number()) fail(at(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(at(key), "must be finite");
        return d;
    }

    long long integer(const std::string& key, long long fallback) const {
        if (!has(key)) return fallback;
        const auto& v = obj_[key];
        if (!v.is_number_integer()) fail(at(key), "expected an integer");
        return v.get<long long>();
    }

    std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const auto& v = obj_[key];
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
        fail(at(key), "expected a non-negative integer");
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const auto& v = obj_[key];
        if (!v.is_string()) fail(at(key), "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) const {
        const auto& v = raw(key);
        if (!v.is_array()) fail(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) fail(at(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    Fields child(const std::string& key) const {
        static const json empty = json::object();
        return has(key) ? Fields(obj_[key], at(key)) : Fields(empty, at(key));
    }

    void reject_unknown(std::initializer_list<const char*> known) const {
        for (const auto& item : obj_.items()) {
            bool ok = false;
            for (const char* k : known) ok = ok || item.key() == k;
            if (!ok) fail(at(item.key()), "unknown field");
        }
    }

private:
    const json& obj_;
    std::string path_;
};

template <class F>
auto guarded(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
}

Curve read_curve(const Fields& f, const std::string& key, double fallback) {
    if (!f.has(key)) return Curve(fallback);
    const json& v = f.raw(key);
    if (v.is_number()) return guarded(f.at(key), [&] { return Curve(v.get<double>()); });
    Fields c(v, f.at(key));
    c.reject_unknown({"times", "values"});
    auto times = c.numbers("times");
    auto values = c.numbers("values");
    return guarded(f.at(key), [&] { return Curve(std::move(times), std::move(values)); });
}

json curve_to_json(const Curve& c) {
    if (c.times().size() == 1) return c.values().front();
    return json{{"times", c.times()}, {"values", c.values()}};
}

model::Payoff read_payoff(const Fields& f) {
    const std::string kind = f.text("kind", "");
    using namespace model;
    auto build = [&]() -> PayoffKind {
        if (kind == "call") {
            f.reject_unknown({"kind", "strike", "scale", "offset"});
            return Call{f.number("strike")};
        }
        if (kind == "put") {
            f.reject_unknown({"kind", "strike", "scale", "offset"});
            return Put{f.number("strike")};
        }
        if (kind == "call_spread") {
            f.reject_unknown({"kind", "k1", "k2", "scale", "offset"});
            return CallSpread{f.number("k1"), f.number("k2")};
        }
        if (kind == "butterfly") {
            f.reject_unknown({"kind", "k1", "k2", "k3", "scale", "offset"});
            return Butterfly{f.number("k1"), f.number("k2"), f.number("k3")};
        }
        if (kind == "smoothed_digital") {
            f.reject_unknown({"kind", "strike", "width", "scale", "offset"});
            return SmoothedDigital{f.number("strike"), f.number("width")};
        }
        if (kind == "tabulated") {
            f.reject_unknown({"kind", "x", "y", "scale", "offset"});
            return TabulatedCurve{f.numbers("x"), f.numbers("y")};
        }
        if (kind == "constant") {
            f.reject_unknown({"kind", "value", "scale", "offset"});
            return Constant{f.number("value")};
        }
        if (kind == "polynomial") {
            f.reject_unknown({"kind", "coeffs", "scale", "offset"});
            return Polynomial{f.numbers("coeffs")};
        }
        fail(f.at("kind"), "unknown payoff kind '" + kind + "'");
    };
    PayoffKind k = build();
    const double scale = f.number("scale", 1.0);
    const double offset = f.number("offset", 0.0);
    return guarded("payoff", [&] { return Payoff(std::move(k), scale, offset); });
}

json payoff_to_json(const model::Payoff& p) {
    using namespace model;
    json j = std::visit(
        [](const auto& k) -> json {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Call>) return {{"kind", "call"}, {"strike", k.strike}};
            else if constexpr (std::is_same_v<K, Put>) return {{"kind", "put"}, {"strike", k.strike}};
            else if constexpr (std::is_same_v<K, CallSpread>)
                return {{"kind", "call_spread"}, {"k1", k.k1}, {"k2", k.k2}};
            else if constexpr (std::is_same_v<K, Butterfly>)
                return {{"kind", "butterfly"}, {"k1", k.k1}, {"k2", k.k2}, {"k3", k.k3}};
            else if constexpr (std::is_same_v<K, SmoothedDigital>)
                return {{"kind", "smoothed_digital"}, {"strike", k.strike}, {"width", k.width}};
            else if constexpr (std::is_same_v<K, TabulatedCurve>)
                return {{"kind", "tabulated"}, {"x", k.x}, {"y", k.y}};
            else if constexpr (std::is_same_v<K, Constant>) return {{"kind", "constant"}, {"value", k.value}};
            else return {{"kind", "polynomial"}, {"coeffs", k.coeffs}};
        },
        p.kind());
    j["scale"] = p.scale();
    j["offset"] = p.offset();
    return j;
}

pde::Side read_side(const Fields& f, const std::string& key) {
    const std::string s = f.text(key, "super");
    if (s == "super") return pde::Side::super;
    if (s == "sub") return pde::Side::sub;
    fail(f.at(key), "expected 'super' or 'sub'");
}

int checked_int(const Fields& f, const std::string& key, long long fallback, long long lo, long long hi) {
    const long long v = f.integer(key, fallback);
    if (v < lo || v > hi) {
        std::ostringstream msg;
        msg << "must lie in [" << lo << ", " << hi << "], got " << v;
        fail(f.at(key), msg.str());
    }
    return static_cast<int>(v);
}

}  // namespace

RunConfig config_from_json(const json& doc) {
    Fields root(doc, "");
    root.reject_unknown({"model", "band", "payoff", "tau", "spot", "grid", "mc", "hedge", "validate",
                         "surface", "convergence", "seed", "threads", "output_dir"});
    RunConfig cfg;

    auto m = root.child("model");
    m.reject_unknown({"r", "eta", "mu", "sigma", "T"});
    cfg.model.r = read_curve(m, "r", 0.0);
    cfg.model.eta = read_curve(m, "eta", 0.0);
    cfg.model.mu = read_curve(m, "mu", 0.0);
    cfg.model.sigma = read_curve(m, "sigma", 1.0);
    cfg.model.T = m.number("T", 1.0);

    auto b = root.child("band");
    b.reject_unknown({"v_low", "v_high"});
    cfg.band.v_low = b.number("v_low");
    cfg.band.v_high = b.number("v_high");

    if (!root.has("payoff")) fail("payoff", "missing required field");
    cfg.payoff = read_payoff(root.child("payoff"));

    cfg.tau = root.number("tau", 0.0);
    cfg.spot = root.number("spot", 100.0);

    auto g = root.child("grid");
    g.reject_unknown({"x_mode", "n_x", "n_t", "retain_every", "half_width"});
    const std::string mode = g.text("x_mode", "log_price");
    if (mode == "log_price") cfg.grid.x_mode = pde::XMode::log_price;
    else if (mode == "arithmetic") cfg.grid.x_mode = pde::XMode::arithmetic;
    else fail(g.at("x_mode"), "expected 'log_price' or 'arithmetic'");
    cfg.grid.n_x = checked_int(g, "n_x", 400, 16, 1 << 20);
    cfg.grid.n_t = checked_int(g, "n_t", 0, 0, 1 << 30);
    cfg.grid.retain_every = checked_int(g, "retain_every", 0, 0, 1 << 30);
    if (g.has("half_width")) cfg.grid.half_width = g.number("half_width");

    auto mc = root.child("mc");
    mc.reject_unknown({"n_paths", "n_steps", "family"});
    cfg.mc.n_paths = static_cast<std::size_t>(checked_int(mc, "n_paths", 100000, 1, 1LL << 30));
    cfg.mc.n_steps = checked_int(mc, "n_steps", 512, 1, 1 << 24);
    cfg.mc.family = mc.text("family", "default");
    if (cfg.mc.family != "default" && cfg.mc.family != "constants")
        fail(mc.at("family"), "expected 'default' or 'constants'");

    auto h = root.child("hedge");
    h.reject_unknown({"control", "initial", "margin", "epsilon", "histogram_bins"});
    cfg.hedge.control = h.text("control", "v_high");
    if (cfg.hedge.control != "v_high" && cfg.hedge.control != "v_low")
        fail(h.at("control"), "expected 'v_high' or 'v_low'");
    cfg.hedge.initial = h.text("initial", "super");
    if (cfg.hedge.initial != "super" && cfg.hedge.initial != "sub")
        fail(h.at("initial"), "expected 'super' or 'sub'");
    cfg.hedge.margin = h.number("margin", 0.0);
    cfg.hedge.epsilon = h.number("epsilon", 0.01);
    cfg.hedge.histogram_bins = checked_int(h, "histogram_bins", 50, 1, 1 << 20);

    auto v = root.child("validate");
    v.reject_unknown({"ord_tol", "comparison_paths", "girsanov_paths", "n_steps", "refinement_levels",
                      "refinement_base_nx"});
    cfg.validate.ord_tol = v.number("ord_tol", scenario::default_ord_tol);
    cfg.validate.comparison_paths = static_cast<std::size_t>(checked_int(v, "comparison_paths", 1000, 1, 1LL << 30));
    cfg.validate.girsanov_paths = static_cast<std::size_t>(checked_int(v, "girsanov_paths", 200, 1, 1LL << 30));
    cfg.validate.n_steps = checked_int(v, "n_steps", 256, 1, 1 << 24);
    cfg.validate.refinement_levels = checked_int(v, "refinement_levels", 3, 3, 8);
    cfg.validate.refinement_base_nx = checked_int(v, "refinement_base_nx", 200, 16, 1 << 16);

    auto s = root.child("surface");
    s.reject_unknown({"side"});
    cfg.surface.side = read_side(s, "side");

    auto c = root.child("convergence");
    c.reject_unknown({"levels", "base_nx", "side"});
    cfg.convergence.levels = checked_int(c, "levels", 4, 3, 8);
    cfg.convergence.base_nx = checked_int(c, "base_nx", 100, 16, 1 << 16);
    cfg.convergence.side = read_side(c, "side");

    cfg.seed = root.u64("seed", 42);
    cfg.threads = checked_int(root, "threads", 1, 1, 1024);
    cfg.output_dir = root.text("output_dir", "out");

    validate_config(cfg);
    return cfg;
}

json config_to_json(const RunConfig& cfg) {
    json j;
    j["model"] = {{"r", curve_to_json(cfg.model.r)},
                  {"eta", curve_to_json(cfg.model.eta)},
                  {"mu", curve_to_json(cfg.model.mu)},
                  {"sigma", curve_to_json(cfg.model.sigma)},
                  {"T", cfg.model.T}};
    j["band"] = {{"v_low", cfg.band.v_low}, {"v_high", cfg.band.v_high}};
    j["payoff"] = payoff_to_json(cfg.payoff);
    j["tau"] = cfg.tau;
    j["spot"] = cfg.spot;
    j["grid"] = {{"x_mode", cfg.grid.x_mode == pde::XMode::log_price ? "log_price" : "arithmetic"},
                 {"n_x", cfg.grid.n_x},
                 {"n_t", cfg.grid.n_t},
                 {"retain_every", cfg.grid.retain_every}};
    if (cfg.grid.half_width) j["grid"]["half_width"] = *cfg.grid.half_width;
    j["mc"] = {{"n_paths", cfg.mc.n_paths}, {"n_steps", cfg.mc.n_steps}, {"family", cfg.mc.family}};
    j["hedge"] = {{"control", cfg.hedge.control},
                  {"initial", cfg.hedge.initial},
                  {"margin", cfg.hedge.margin},
                  {"epsilon", cfg.hedge.epsilon},
                  {"histogram_bins", cfg.hedge.histogram_bins}};
    j["validate"] = {{"ord_tol", cfg.validate.ord_tol},
                     {"comparison_paths", cfg.validate.comparison_paths},
                     {"girsanov_paths", cfg.validate.girsanov_paths},
                     {"n_steps", cfg.validate.n_steps},
                     {"refinement_levels", cfg.validate.refinement_levels},
                     {"refinement_base_nx", cfg.validate.refinement_base_nx}};
    j["surface"] = {{"side", pde::to_string(cfg.surface.side)}};
    j["convergence"] = {{"levels", cfg.convergence.levels},
                        {"base_nx", cfg.convergence.base_nx},
                        {"side", pde::to_string(cfg.convergence.side)}};
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["output_dir"] = cfg.output_dir;
    return j;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config_from_json(doc);
}

void validate_config(const RunConfig& cfg) {
    guarded("model", [&] { cfg.model.validate(); });
    guarded("band", [&] { cfg.band.validate(); });
    if (!(cfg.tau >= 0.0 && cfg.tau < cfg.model.T)) fail("tau", "must satisfy 0 <= tau < model.T");
    if (!(cfg.spot > 0.0)) fail("spot", "must be positive");
    if (cfg.grid.half_width && !(*cfg.grid.half_width > 0.0)) fail("grid.half_width", "must be positive");
    guarded("grid", [&] { cfg.pde_grid().validate(); });
    if (!(cfg.hedge.epsilon > 0.0)) fail("hedge.epsilon", "must be positive");
    if (!(cfg.validate.ord_tol >= 0.0)) fail("validate.ord_tol", "must be >= 0");
}

pde::PdeGrid RunConfig::pde_grid() const { return pde_grid(grid.n_x); }

pde::PdeGrid RunConfig::pde_grid(int n_x) const {
    pde::PdeGrid g;
    if (grid.half_width) {
        g = pde::centered_grid(grid.x_mode, spot, *grid.half_width, n_x);
    } else if (grid.x_mode == pde::XMode::log_price) {
        g = pde::default_grid(model, band, spot, n_x);
    } else {
        const double width = 6.0 * std::sqrt(band.v_high) * model.sigma.max_abs() * std::sqrt(model.T);
        g = pde::centered_grid(grid.x_mode, spot, spot * width, n_x);
    }
    g.n_t = grid.n_t;
    g.retain_every = grid.retain_every;
    return g;
}

}  // namespace uvol::cli
