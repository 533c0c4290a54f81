#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "absorbmc/lattice_walk.hpp"
#include "absorbmc/model_fit.hpp"

namespace absorbmc {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Parameters of a location-probability sweep (one CSV row per step count
/// and absorber placement / absorption probability combination).
struct WalkRun {
    Site x{0, 0, 0};
    int n_min = 0;
    int n_max = 0;
    std::vector<Site> m_list;
    std::vector<double> q_grid;
    std::string convention = "auto";  // auto | apply-on-entry | exempt-final-arrival
    bool closed_form_overlay = false;
    bool mc_enabled = false;
    std::int64_t mc_walkers = 100000;
    std::uint64_t mc_seed = 1;
};

struct FitCase {
    std::string label;
    Site x{0, 0, 0};
    Site m{0, 0, 0};
    std::vector<double> q_grid;
};

struct FitRun {
    std::vector<FitCase> cases;
    FitWindowSpec window;
    FitOptions options;
};

struct ConcRun {
    std::string sweep;  // "q" or "x"
    Site x{0, 0, 0};
    Site m{0, 0, 0};
    std::vector<double> q_grid;
    std::vector<int> x_values;  // sweep == "x": 1-D destinations
    double Q = 1.0;
    FitWindowSpec window;
    FitOptions options;
};

struct QueueRun {
    std::vector<double> T_list;
    double kappa = 1.0;
    std::vector<Site> sites;
    std::vector<std::string> table_files;  // optional, parallel to sites; empty entry = build
    std::vector<double> Q_grid;
    std::vector<double> q_grid;
    double tol = 1e-8;
    int max_iter = 500;
    double omega = 0.5;
    FitWindowSpec window;
    FitOptions options;
};

struct ExperimentConfig {
    nlohmann::json resolved;  // post-preset document, echoed into run metadata
    std::string preset_name;
    std::uint64_t seed = 0;  // effective seed after any command-line override

    WalkConfig walk;
    std::optional<WalkRun> walk_run;
    std::optional<FitRun> fit_run;
    std::optional<ConcRun> conc_run;
    std::optional<QueueRun> queue_run;
};

/// Load and validate a configuration document, optionally selecting one of
/// its presets and overriding the seed. Every violated constraint is
/// reported with its JSON field path.
ExperimentConfig load_config(const std::filesystem::path& file, const std::string& preset,
                             std::optional<std::uint64_t> seed_override);

ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& preset,
                              std::optional<std::uint64_t> seed_override);

}  // namespace absorbmc
