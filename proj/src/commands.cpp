#include "absorbmc/commands.hpp"

#include <fstream>

#include "absorbmc/closed_form.hpp"
#include "absorbmc/concentration.hpp"
#include "absorbmc/csv.hpp"
#include "absorbmc/json_io.hpp"
#include "absorbmc/receptor_queue.hpp"

namespace absorbmc {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
}

void write_run_meta(const ExperimentConfig& cfg, const fs::path& dir, const std::string& command) {
    nlohmann::json meta;
    meta["schema_version"] = 1;
    meta["command"] = command;
    meta["preset"] = cfg.preset_name;
    meta["seed"] = cfg.seed;
    meta["units"] = {
        {"delta", cfg.walk.delta},
        {"tau", cfg.walk.tau},
        {"note", "all quantities in lattice units of the configured step length and time step"}};
    meta["config"] = cfg.resolved;
    auto out = open_out(dir, "run_meta.json");
    out << meta.dump(2) << '\n';
}

Convention resolve_convention(const std::string& name, const Site& m, const Site& x) {
    if (name == "apply-on-entry") return Convention::ApplyOnEntry;
    if (name == "exempt-final-arrival") return Convention::ExemptFinalArrival;
    return convention_for(m, x);
}

std::string site_label(const Site& s, int dimension) {
    std::string label = "m";
    for (int a = 0; a < dimension; ++a) label += (a ? "_" : "") + std::to_string(s[a]);
    return label;
}

// observation columns are named x, y, z; absorber/receptor columns m_x, ...
void append_site_columns(std::vector<std::string>& names, const std::string& prefix, int d) {
    static const char* axis[3] = {"x", "y", "z"};
    for (int a = 0; a < d; ++a) names.push_back(prefix + axis[a]);
}

// One fit for a single (x, m, q) triple, mapped to a CSV status. The fully
// blocked placements (no signal at all) are reported, not treated as errors.
struct ConcPoint {
    FitParams params;
    double concentration = 0.0;
    std::string status = "ok";
    bool fitted = false;
};

ConcPoint conc_point(const WalkConfig& walk, const Site& x, const Site& m, double q, double Q,
                     const FitWindowSpec& window, const FitOptions& options) {
    ConcPoint pt;
    try {
        const FitDataset data = make_fit_dataset(walk, AbsorberSpec{m, q}, x, window);
        pt.params = fit(data, std::nullopt, options);
        pt.fitted = true;
        pt.concentration =
            conc_steady(pt.params, Q, norm_l2(x) * walk.delta, walk.diffusion(), walk.dimension);
    } catch (const FitWindowError&) {
        pt.status = "zero-signal";
        pt.concentration = 0.0;
    } catch (const DivergentRegimeError&) {
        pt.status = "divergent";
        pt.concentration = std::numeric_limits<double>::quiet_NaN();
    }
    return pt;
}

}  // namespace

int cmd_walk(const ExperimentConfig& cfg, const fs::path& out_dir) {
    if (!cfg.walk_run) throw ConfigError("walk_run: section required by the walk command");
    const WalkRun& run = *cfg.walk_run;
    const WalkConfig& walk = cfg.walk;
    const int d = walk.dimension;

    write_run_meta(cfg, out_dir, "walk");
    auto out = open_out(out_dir, "walk.csv");
    CsvWriter csv(out);

    std::vector<std::string> names{"n", "t"};
    append_site_columns(names, "", d);
    append_site_columns(names, "m_", d);
    names.push_back("q");
    names.push_back("probability");
    if (run.closed_form_overlay) names.push_back("closed_form");
    if (run.mc_enabled) {
        names.push_back("mc_probability");
        names.push_back("mc_stderr");
    }
    names.push_back("leakage");
    csv.header(names);

    std::vector<int> ns;
    for (int n = run.n_min; n <= run.n_max; ++n) ns.push_back(n);

    for (const Site& m : run.m_list) {
        for (double q : run.q_grid) {
            const AbsorberSpec abs{m, q};
            const Convention conv = resolve_convention(run.convention, m, run.x);
            const int radius = choose_radius(walk, abs, run.x, run.n_max);
            const TruncatedChain chain = build_chain(walk, abs, radius, conv);
            const OccupancySeries series = occupancy_at(chain, run.x, ns, Site{0, 0, 0});
            OccupancySeries mc;
            if (run.mc_enabled)
                mc = monte_carlo(walk, abs, run.x, ns, run.mc_walkers, run.mc_seed, conv);
            for (std::size_t j = 0; j < ns.size(); ++j) {
                std::vector<CsvValue> row;
                row.emplace_back(static_cast<std::int64_t>(ns[j]));
                row.emplace_back(static_cast<double>(ns[j]) * walk.tau);
                for (int a = 0; a < d; ++a) row.emplace_back(static_cast<std::int64_t>(run.x[a]));
                for (int a = 0; a < d; ++a) row.emplace_back(static_cast<std::int64_t>(m[a]));
                row.emplace_back(q);
                row.emplace_back(series.probability[j]);
                if (run.closed_form_overlay)
                    row.emplace_back(closed_form::p_any(run.x[0], ns[j], walk.p, q, m[0]));
                if (run.mc_enabled) {
                    row.emplace_back(mc.probability[j]);
                    row.emplace_back(mc.std_error[j]);
                }
                row.emplace_back(series.leakage_bound);
                csv.row(row);
            }
        }
    }
    return kExitOk;
}

int cmd_fit(const ExperimentConfig& cfg, const fs::path& out_dir) {
    if (!cfg.fit_run) throw ConfigError("fit_run: section required by the fit command");
    const FitRun& run = *cfg.fit_run;
    const WalkConfig& walk = cfg.walk;

    write_run_meta(cfg, out_dir, "fit");
    auto curves = open_out(out_dir, "fit_curves.csv");
    CsvWriter csv(curves);
    csv.header({"label", "q", "n", "t", "target", "fitted"});

    bool all_converged = true;
    for (const FitCase& fc : run.cases) {
        const ParamTable table =
            build_param_table(walk, fc.x, fc.m, fc.q_grid, run.window, run.options);
        for (const std::string& note : table.diagnostics)
            if (note.find("unconverged") != std::string::npos) all_converged = false;

        auto jout = open_out(out_dir, "fit_params_" + fc.label + ".json");
        jout << param_table_to_json(table).dump(2) << '\n';

        for (std::size_t i = 0; i < table.size(); ++i) {
            const FitDataset data =
                make_fit_dataset(walk, AbsorberSpec{fc.m, table.q[i]}, fc.x, run.window);
            const FitParams params = table.row(i);
            for (std::size_t j = 0; j < data.t.size(); ++j) {
                csv.row({fc.label, table.q[i],
                         static_cast<std::int64_t>(std::llround(data.t[j] / walk.tau)), data.t[j],
                         data.y[j],
                         model_eval(params, data.r, data.t[j], data.diffusion, data.dimension)});
            }
        }
    }
    return all_converged ? kExitOk : kExitNonConvergence;
}

int cmd_concentration(const ExperimentConfig& cfg, const fs::path& out_dir) {
    if (!cfg.conc_run)
        throw ConfigError("concentration_run: section required by the concentration command");
    const ConcRun& run = *cfg.conc_run;
    const WalkConfig& walk = cfg.walk;
    const int d = walk.dimension;

    write_run_meta(cfg, out_dir, "concentration");
    auto out = open_out(out_dir, "concentration.csv");
    CsvWriter csv(out);

    std::vector<std::string> names;
    append_site_columns(names, "", d);
    append_site_columns(names, "m_", d);
    names.insert(names.end(), {"q", "r", "alpha", "beta", "gamma", "concentration", "status"});
    csv.header(names);

    bool all_converged = true;
    auto emit = [&](const Site& x, const Site& m, double q) {
        const ConcPoint pt = conc_point(walk, x, m, q, run.Q, run.window, run.options);
        if (pt.fitted && !pt.params.converged) all_converged = false;
        std::vector<CsvValue> row;
        for (int a = 0; a < d; ++a) row.emplace_back(static_cast<std::int64_t>(x[a]));
        for (int a = 0; a < d; ++a) row.emplace_back(static_cast<std::int64_t>(m[a]));
        row.emplace_back(q);
        row.emplace_back(norm_l2(x) * walk.delta);
        if (pt.fitted) {
            row.emplace_back(pt.params.alpha);
            row.emplace_back(pt.params.beta);
            row.emplace_back(pt.params.gamma);
        } else {
            row.emplace_back(std::numeric_limits<double>::quiet_NaN());
            row.emplace_back(std::numeric_limits<double>::quiet_NaN());
            row.emplace_back(std::numeric_limits<double>::quiet_NaN());
        }
        row.emplace_back(pt.concentration);
        row.emplace_back(pt.status);
        csv.row(row);
    };

    if (run.sweep == "q") {
        for (double q : run.q_grid) emit(run.x, run.m, q);
    } else {
        for (int xv : run.x_values)
            for (double q : run.q_grid) emit(Site{xv, 0, 0}, run.m, q);
    }
    return all_converged ? kExitOk : kExitNonConvergence;
}

int cmd_queue(const ExperimentConfig& cfg, const fs::path& out_dir) {
    if (!cfg.queue_run) throw ConfigError("queue_run: section required by the queue command");
    const QueueRun& run = *cfg.queue_run;
    const WalkConfig& walk = cfg.walk;
    const int d = walk.dimension;
    const double D = walk.diffusion();

    write_run_meta(cfg, out_dir, "queue");
    auto out = open_out(out_dir, "queue.csv");
    CsvWriter csv(out);
    std::vector<std::string> names;
    append_site_columns(names, "m_", d);
    names.insert(names.end(), {"T_trafficking", "Q", "q_star", "lambda_in", "lambda_a", "p_b",
                               "iterations", "residual", "converged"});
    csv.header(names);

    bool all_converged = true;
    for (std::size_t s = 0; s < run.sites.size(); ++s) {
        const Site& site = run.sites[s];
        ParamTable table;
        if (s < run.table_files.size() && !run.table_files[s].empty()) {
            std::ifstream in(run.table_files[s]);
            if (!in) throw ConfigError("queue_run.table_files: cannot open " + run.table_files[s]);
            nlohmann::json doc;
            in >> doc;
            table = param_table_from_json(doc);
        } else {
            table = build_param_table(walk, site, site, run.q_grid, run.window, run.options);
            for (const std::string& note : table.diagnostics)
                if (note.find("unconverged") != std::string::npos) all_converged = false;
            auto jout = open_out(out_dir, "queue_params_" + site_label(site, d) + ".json");
            jout << param_table_to_json(table).dump(2) << '\n';
        }

        std::vector<ReceptorSpec> specs;
        for (double T : run.T_list)
            specs.push_back(ReceptorSpec::make(T, site, walk.delta, run.kappa));
        const auto rows =
            sweep_queue(run.Q_grid, specs, table, D, d, run.tol, run.max_iter, run.omega);
        for (std::size_t sp = 0; sp < specs.size(); ++sp)
            for (std::size_t i = 0; i < run.Q_grid.size(); ++i) {
                const QueueSweepRow& row = rows[sp * run.Q_grid.size() + i];
                if (!row.solution.converged) all_converged = false;
                std::vector<CsvValue> cells;
                for (int a = 0; a < d; ++a) cells.emplace_back(static_cast<std::int64_t>(site[a]));
                cells.emplace_back(specs[sp].T_trafficking);
                cells.emplace_back(row.Q);
                cells.emplace_back(row.solution.q_star);
                cells.emplace_back(row.solution.lambda_in);
                cells.emplace_back(row.solution.lambda_a);
                cells.emplace_back(row.solution.p_b);
                cells.emplace_back(static_cast<std::int64_t>(row.solution.iterations));
                cells.emplace_back(row.solution.residual);
                cells.emplace_back(std::string(row.solution.converged ? "true" : "false"));
                csv.row(cells);
            }
    }
    return all_converged ? kExitOk : kExitNonConvergence;
}

}  // namespace absorbmc
