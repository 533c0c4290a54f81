#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "absorbmc/commands.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

int apply_thread_cap() {
    const char* env = std::getenv("ABSORBMC_THREADS");
    if (!env || !*env) return 0;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 0) {
        std::cerr << "ABSORBMC_THREADS: expected a nonnegative integer, got \"" << env << "\"\n";
        return -1;
    }
#ifdef _OPENMP
    if (v > 0) omp_set_num_threads(static_cast<int>(v));
#endif
    return 0;
}

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "configuration JSON document")->required();
    sub->add_option("--preset", args.preset, "preset name from the document's presets section");
    sub->add_option("--seed", [&args](const CLI::results_t& res) {
        args.seed = std::stoull(res[0]);
        return true;
    }, "override the configured seed");
    sub->add_option("--out", args.out_dir, "output directory (default: out)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffusive channel with a probabilistic absorber: walk, fit, "
                 "concentration and receptor-queue experiments"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* walk = app.add_subcommand("walk", "location-probability sweeps");
    CLI::App* fit = app.add_subcommand("fit", "channel-model parameter tables");
    CLI::App* conc = app.add_subcommand("concentration", "steady-state concentration sweeps");
    CLI::App* queue = app.add_subcommand("queue", "receptor loss-queue fixed points");
    for (CLI::App* sub : {walk, fit, conc, queue}) add_common(sub, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return absorbmc::kExitConfig;
    }

    if (apply_thread_cap() != 0) return absorbmc::kExitConfig;

    try {
        const absorbmc::ExperimentConfig cfg =
            absorbmc::load_config(args.config_path, args.preset, args.seed);
        if (walk->parsed()) return absorbmc::cmd_walk(cfg, args.out_dir);
        if (fit->parsed()) return absorbmc::cmd_fit(cfg, args.out_dir);
        if (conc->parsed()) return absorbmc::cmd_concentration(cfg, args.out_dir);
        return absorbmc::cmd_queue(cfg, args.out_dir);
    } catch (const absorbmc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return absorbmc::kExitConfig;
    } catch (const absorbmc::FitWindowError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return absorbmc::kExitDomain;
    } catch (const absorbmc::TruncationError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return absorbmc::kExitDomain;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return absorbmc::kExitDomain;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return absorbmc::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
