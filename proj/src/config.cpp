#include "absorbmc/config.hpp"

#include <fstream>

#include "absorbmc/json_io.hpp"

namespace absorbmc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

const json& member(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing required field");
    return *it;
}

double get_number(const json& obj, const std::string& path, const std::string& key) {
    const json& v = member(obj, path, key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

double get_number_or(const json& obj, const std::string& path, const std::string& key,
                     double fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return get_number(obj, path, key);
}

std::int64_t get_integer(const json& obj, const std::string& path, const std::string& key) {
    const json& v = member(obj, path, key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<std::int64_t>();
}

std::int64_t get_integer_or(const json& obj, const std::string& path, const std::string& key,
                            std::int64_t fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return get_integer(obj, path, key);
}

std::string get_string_or(const json& obj, const std::string& path, const std::string& key,
                          const std::string& fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

bool get_bool_or(const json& obj, const std::string& path, const std::string& key, bool fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
    return v.get<bool>();
}

std::vector<double> get_number_list(const json& obj, const std::string& path,
                                    const std::string& key) {
    const json& v = member(obj, path, key);
    if (!v.is_array() || v.empty()) fail(path + "." + key, "expected a non-empty array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) fail(path + "." + key, "expected numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Site get_site(const json& obj, const std::string& path, const std::string& key, int dimension) {
    const json& v = member(obj, path, key);
    try {
        return site_from_json(v, dimension, path + "." + key);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void check_q_grid(const std::vector<double>& grid, const std::string& path) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) fail(path, "entries must lie in [0, 1]");
        if (i > 0 && grid[i] < grid[i - 1]) fail(path, "entries must be sorted ascending");
    }
}

WalkConfig parse_walk(const json& doc) {
    const json& w = member(doc, "config", "walk");
    WalkConfig cfg;
    cfg.dimension = static_cast<int>(get_integer(w, "walk", "dimension"));
    if (cfg.dimension < 1 || cfg.dimension > 3) fail("walk.dimension", "must be 1, 2 or 3");
    cfg.p = get_number_or(w, "walk", "p", 0.5);
    cfg.delta = get_number_or(w, "walk", "delta", 1.0);
    cfg.tau = get_number_or(w, "walk", "tau", 1.0);
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

FitWindowSpec parse_window(const json& parent, const std::string& path) {
    FitWindowSpec w;
    if (!parent.contains("window")) return w;
    const json& j = parent.at("window");
    w.tail_fraction = get_number_or(j, path + ".window", "tail_fraction", w.tail_fraction);
    w.cap_factor = static_cast<int>(get_integer_or(j, path + ".window", "cap_factor", w.cap_factor));
    w.leak_budget = get_number_or(j, path + ".window", "leak_budget", w.leak_budget);
    if (!(w.tail_fraction > 0.0 && w.tail_fraction < 1.0))
        fail(path + ".window.tail_fraction", "must lie in (0, 1)");
    if (w.cap_factor < 1) fail(path + ".window.cap_factor", "must be >= 1");
    if (!(w.leak_budget > 0.0)) fail(path + ".window.leak_budget", "must be positive");
    return w;
}

FitOptions parse_fit_options(const json& parent, const std::string& path, std::uint64_t seed) {
    FitOptions o;
    o.seed = seed;
    if (!parent.contains("options")) return o;
    const json& j = parent.at("options");
    o.restarts = static_cast<int>(get_integer_or(j, path + ".options", "restarts", o.restarts));
    o.max_iterations = static_cast<int>(
        get_integer_or(j, path + ".options", "max_iterations", o.max_iterations));
    if (o.restarts < 0) fail(path + ".options.restarts", "must be >= 0");
    if (o.max_iterations < 1) fail(path + ".options.max_iterations", "must be >= 1");
    return o;
}

WalkRun parse_walk_run(const json& doc, const WalkConfig& cfg) {
    const json& j = doc.at("walk_run");
    const std::string path = "walk_run";
    WalkRun run;
    run.x = get_site(j, path, "x", cfg.dimension);
    run.n_min = static_cast<int>(get_integer_or(j, path, "n_min", 0));
    run.n_max = static_cast<int>(get_integer(j, path, "n_max"));
    if (run.n_min < 0) fail(path + ".n_min", "must be >= 0");
    if (run.n_max < run.n_min) fail(path + ".n_max", "must be >= n_min");
    const json& ml = member(j, path, "m_list");
    if (!ml.is_array() || ml.empty()) fail(path + ".m_list", "expected a non-empty array");
    for (std::size_t i = 0; i < ml.size(); ++i)
        try {
            run.m_list.push_back(
                site_from_json(ml[i], cfg.dimension, path + ".m_list[" + std::to_string(i) + "]"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    run.q_grid = get_number_list(j, path, "q_grid");
    check_q_grid(run.q_grid, path + ".q_grid");
    run.convention = get_string_or(j, path, "convention", "auto");
    if (run.convention != "auto" && run.convention != "apply-on-entry" &&
        run.convention != "exempt-final-arrival")
        fail(path + ".convention", "must be auto, apply-on-entry or exempt-final-arrival");
    run.closed_form_overlay = get_bool_or(j, path, "closed_form_overlay", false);
    if (run.closed_form_overlay && cfg.dimension != 1)
        fail(path + ".closed_form_overlay", "only available in 1-D");
    if (j.contains("monte_carlo")) {
        const json& mc = j.at("monte_carlo");
        run.mc_enabled = get_bool_or(mc, path + ".monte_carlo", "enabled", false);
        run.mc_walkers = get_integer_or(mc, path + ".monte_carlo", "walkers", run.mc_walkers);
        run.mc_seed = static_cast<std::uint64_t>(
            get_integer_or(mc, path + ".monte_carlo", "seed", 1));
        if (run.mc_enabled && run.mc_walkers < 1)
            fail(path + ".monte_carlo.walkers", "must be >= 1");
    }
    return run;
}

FitRun parse_fit_run(const json& doc, const WalkConfig& cfg, std::uint64_t seed) {
    const json& j = doc.at("fit_run");
    const std::string path = "fit_run";
    FitRun run;
    const json& cases = member(j, path, "cases");
    if (!cases.is_array() || cases.empty()) fail(path + ".cases", "expected a non-empty array");
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string cpath = path + ".cases[" + std::to_string(i) + "]";
        const json& c = cases[i];
        FitCase fc;
        fc.label = get_string_or(c, cpath, "label", "case" + std::to_string(i));
        fc.x = get_site(c, cpath, "x", cfg.dimension);
        fc.m = get_site(c, cpath, "m", cfg.dimension);
        fc.q_grid = get_number_list(c, cpath, "q_grid");
        check_q_grid(fc.q_grid, cpath + ".q_grid");
        if (norm_l2(fc.x) <= 0.0) fail(cpath + ".x", "must not be the origin");
        run.cases.push_back(std::move(fc));
    }
    run.window = parse_window(j, path);
    run.options = parse_fit_options(j, path, seed);
    return run;
}

ConcRun parse_conc_run(const json& doc, const WalkConfig& cfg, std::uint64_t seed) {
    const json& j = doc.at("concentration_run");
    const std::string path = "concentration_run";
    ConcRun run;
    run.sweep = get_string_or(j, path, "sweep", "q");
    if (run.sweep != "q" && run.sweep != "x") fail(path + ".sweep", "must be \"q\" or \"x\"");
    run.m = get_site(j, path, "m", cfg.dimension);
    run.q_grid = get_number_list(j, path, "q_grid");
    check_q_grid(run.q_grid, path + ".q_grid");
    run.Q = get_number_or(j, path, "Q", 1.0);
    if (!(run.Q >= 0.0)) fail(path + ".Q", "must be nonnegative");
    if (run.sweep == "q") {
        run.x = get_site(j, path, "x", cfg.dimension);
        if (norm_l2(run.x) <= 0.0) fail(path + ".x", "must not be the origin");
    } else {
        if (cfg.dimension != 1) fail(path + ".sweep", "sweep \"x\" is 1-D only");
        const json& xs = member(j, path, "x_values");
        if (!xs.is_array() || xs.empty()) fail(path + ".x_values", "expected a non-empty array");
        for (const auto& e : xs) {
            if (!e.is_number_integer()) fail(path + ".x_values", "expected integers");
            const int xv = e.get<int>();
            if (xv == 0) fail(path + ".x_values", "destinations must not be the origin");
            run.x_values.push_back(xv);
        }
    }
    run.window = parse_window(j, path);
    run.options = parse_fit_options(j, path, seed);
    return run;
}

QueueRun parse_queue_run(const json& doc, const WalkConfig& cfg, std::uint64_t seed) {
    const json& j = doc.at("queue_run");
    const std::string path = "queue_run";
    QueueRun run;
    run.T_list = get_number_list(j, path, "T_trafficking");
    for (double T : run.T_list)
        if (!(T > 0.0)) fail(path + ".T_trafficking", "entries must be positive");
    run.kappa = get_number_or(j, path, "kappa", 1.0);
    if (!(run.kappa > 0.0)) fail(path + ".kappa", "must be positive");
    const json& sites = member(j, path, "sites");
    if (!sites.is_array() || sites.empty()) fail(path + ".sites", "expected a non-empty array");
    for (std::size_t i = 0; i < sites.size(); ++i) {
        try {
            run.sites.push_back(
                site_from_json(sites[i], cfg.dimension, path + ".sites[" + std::to_string(i) + "]"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (norm_l2(run.sites.back()) <= 0.0)
            fail(path + ".sites[" + std::to_string(i) + "]", "receptor must not sit on the source");
    }
    if (j.contains("table_files")) {
        const json& tf = j.at("table_files");
        if (!tf.is_array() || tf.size() != run.sites.size())
            fail(path + ".table_files", "must parallel the sites array");
        for (const auto& e : tf) {
            if (!e.is_string()) fail(path + ".table_files", "expected strings");
            run.table_files.push_back(e.get<std::string>());
        }
    }
    run.Q_grid = get_number_list(j, path, "Q_grid");
    for (double Q : run.Q_grid)
        if (!(Q >= 0.0)) fail(path + ".Q_grid", "entries must be nonnegative");
    run.q_grid = get_number_list(j, path, "q_grid");
    check_q_grid(run.q_grid, path + ".q_grid");
    if (run.q_grid.size() < 2) fail(path + ".q_grid", "need at least 2 entries to interpolate");
    run.tol = get_number_or(j, path, "tol", 1e-8);
    if (!(run.tol > 0.0)) fail(path + ".tol", "must be positive");
    run.max_iter = static_cast<int>(get_integer_or(j, path, "max_iter", 500));
    if (run.max_iter < 1) fail(path + ".max_iter", "must be >= 1");
    run.omega = get_number_or(j, path, "omega", 0.5);
    if (!(run.omega > 0.0 && run.omega <= 1.0)) fail(path + ".omega", "must lie in (0, 1]");
    run.window = parse_window(j, path);
    run.options = parse_fit_options(j, path, seed);
    return run;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& preset,
                              std::optional<std::uint64_t> seed_override) {
    nlohmann::json resolved = doc;
    if (!preset.empty()) {
        if (!doc.is_object() || !doc.contains("presets"))
            throw ConfigError("presets: document has no presets section");
        const nlohmann::json& presets = doc.at("presets");
        if (!presets.is_object() || !presets.contains(preset))
            throw ConfigError("presets." + preset + ": no such preset");
        resolved = presets.at(preset);
    }
    if (!resolved.is_object()) throw ConfigError("config: expected a JSON object");
    if (resolved.contains("schema_version") && resolved["schema_version"].get<int>() != 1)
        throw ConfigError("schema_version: unsupported value");

    ExperimentConfig cfg;
    cfg.resolved = resolved;
    cfg.preset_name = preset;
    cfg.walk = parse_walk(resolved);
    cfg.seed = seed_override
                   ? *seed_override
                   : static_cast<std::uint64_t>(get_integer_or(resolved, "config", "seed", 1));

    if (resolved.contains("walk_run")) cfg.walk_run = parse_walk_run(resolved, cfg.walk);
    if (resolved.contains("fit_run")) cfg.fit_run = parse_fit_run(resolved, cfg.walk, cfg.seed);
    if (resolved.contains("concentration_run"))
        cfg.conc_run = parse_conc_run(resolved, cfg.walk, cfg.seed);
    if (resolved.contains("queue_run"))
        cfg.queue_run = parse_queue_run(resolved, cfg.walk, cfg.seed);
    if (seed_override) {
        if (cfg.walk_run) cfg.walk_run->mc_seed = *seed_override;
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file, const std::string& preset,
                             std::optional<std::uint64_t> seed_override) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config: cannot open " + file.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
    return parse_config(doc, preset, seed_override);
}

}  // namespace absorbmc
