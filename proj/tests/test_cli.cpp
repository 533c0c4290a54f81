// End-to-end checks of the installed binary: exit codes, file outputs and
// byte-level determinism. The binary path arrives via ABSORBMC_BIN.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* env = std::getenv("ABSORBMC_BIN");
    return env ? env : "";
}

int run_cli(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("absorbmc_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_config(const fs::path& file, const std::string& body) {
    std::ofstream out(file);
    out << body;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("walk run: outputs, overlay equality at q=0, determinism") {
    REQUIRE_FALSE(cli_path().empty());
    const fs::path dir = fresh_dir("walk");
    const fs::path config = dir / "config.json";
    write_config(config, R"({
        "schema_version": 1,
        "walk": {"dimension": 1, "p": 0.5, "delta": 1.0, "tau": 1.0},
        "walk_run": {
            "x": [6], "n_min": 0, "n_max": 40,
            "m_list": [[3]], "q_grid": [0.0, 0.5],
            "closed_form_overlay": true,
            "monte_carlo": {"enabled": true, "walkers": 20000, "seed": 3}
        }
    })");
    const fs::path out1 = dir / "run1";
    const fs::path out2 = dir / "run2";
    CHECK(run_cli("walk --config " + config.string() + " --seed 9 --out " + out1.string()) == 0);
    CHECK(run_cli("walk --config " + config.string() + " --seed 9 --out " + out2.string()) == 0);
    REQUIRE(fs::exists(out1 / "walk.csv"));
    REQUIRE(fs::exists(out1 / "run_meta.json"));
    CHECK(slurp(out1 / "walk.csv") == slurp(out2 / "walk.csv"));
    CHECK(slurp(out1 / "run_meta.json") == slurp(out2 / "run_meta.json"));

    // q = 0 rows: markov and closed-form columns identical as printed
    std::ifstream in(out1 / "walk.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "n,t,x,m_x,q,probability,closed_form,mc_probability,mc_stderr,leakage");
    int rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 10);
        if (cells[4] == "0") CHECK(cells[5] == cells[6]);
        ++rows;
    }
    CHECK(rows == 2 * 41);
}

TEST_CASE("exit codes: config error, domain error, missing section") {
    REQUIRE_FALSE(cli_path().empty());
    const fs::path dir = fresh_dir("codes");
    const fs::path bad = dir / "bad.json";
    write_config(bad, R"({"schema_version": 1, "walk": {"dimension": 4}})");
    CHECK(run_cli("walk --config " + bad.string()) == 2);

    const fs::path missing = dir / "missing.json";
    write_config(missing, R"({
        "schema_version": 1,
        "walk": {"dimension": 1, "p": 0.5, "delta": 1.0, "tau": 1.0}
    })");
    CHECK(run_cli("queue --config " + missing.string()) == 2);
    CHECK(run_cli("walk --config " + (dir / "absent.json").string()) == 2);
    CHECK(run_cli("walk") == 2);  // usage error

    // thread cap: a bad value is a configuration error, a good one is honored
    {
        const std::string prefix = "ABSORBMC_THREADS=";
        const std::string good = prefix + "1 " + cli_path() + " walk --config " +
                                 missing.string() + " > /dev/null 2>&1";
        const std::string bad = prefix + "abc " + cli_path() + " walk --config " +
                                missing.string() + " > /dev/null 2>&1";
        CHECK(WEXITSTATUS(std::system(good.c_str())) == 2);  // still the missing section
        CHECK(WEXITSTATUS(std::system(bad.c_str())) == 2);
    }

    // 1-D steady state below the validity floor: every row divergent is still
    // a clean run; a domain error needs an actually invalid request
    const fs::path divergent = dir / "divergent.json";
    write_config(divergent, R"({
        "schema_version": 1,
        "walk": {"dimension": 1, "p": 0.5, "delta": 1.0, "tau": 1.0},
        "queue_run": {
            "T_trafficking": [1.0],
            "sites": [[6]],
            "q_grid": [0.0, 0.05, 0.1],
            "Q_grid": [0.01]
        }
    })");
    const int code = run_cli("queue --config " + divergent.string() + " --out " +
                             (dir / "divout").string());
    CHECK(code == 4);  // gamma stays below the 1-D threshold across that grid
}

TEST_CASE("starved optimizer reports non-convergence via exit code 3") {
    REQUIRE_FALSE(cli_path().empty());
    const fs::path dir = fresh_dir("nonconv");
    const fs::path config = dir / "config.json";
    write_config(config, R"({
        "schema_version": 1,
        "walk": {"dimension": 1, "p": 0.5, "delta": 1.0, "tau": 1.0},
        "fit_run": {
            "cases": [{"label": "starved", "x": [6], "m": [3], "q_grid": [0.5]}],
            "options": {"max_iterations": 1, "restarts": 0}
        }
    })");
    const fs::path out = dir / "out";
    CHECK(run_cli("fit --config " + config.string() + " --out " + out.string()) == 3);
    CHECK(fs::exists(out / "fit_params_starved.json"));  // outputs still written
}

TEST_CASE("queue consumes parameter tables from files") {
    REQUIRE_FALSE(cli_path().empty());
    const fs::path dir = fresh_dir("qtable");
    const std::string queue_body = R"("queue_run": {
            "T_trafficking": [1.0],
            "sites": [[8]],
            "q_grid": [0.25, 0.5, 0.75, 1.0],
            "Q_grid": [0.01, 0.05])";
    const fs::path build_cfg = dir / "build.json";
    write_config(build_cfg, R"({
        "schema_version": 1,
        "walk": {"dimension": 1, "p": 0.5, "delta": 1.0, "tau": 1.0},
        )" + queue_body + R"(}})");
    const fs::path out_build = dir / "built";
    CHECK(run_cli("queue --config " + build_cfg.string() + " --out " + out_build.string()) == 0);
    const fs::path table = out_build / "queue_params_m8.json";
    REQUIRE(fs::exists(table));

    const fs::path load_cfg = dir / "load.json";
    write_config(load_cfg, R"({
        "schema_version": 1,
        "walk": {"dimension": 1, "p": 0.5, "delta": 1.0, "tau": 1.0},
        )" + queue_body + R"(,
            "table_files": [")" + table.string() + R"("]}})");
    const fs::path out_load = dir / "loaded";
    CHECK(run_cli("queue --config " + load_cfg.string() + " --out " + out_load.string()) == 0);
    CHECK(slurp(out_build / "queue.csv") == slurp(out_load / "queue.csv"));
}

TEST_CASE("concentration sweep marks divergent and zero-signal rows") {
    REQUIRE_FALSE(cli_path().empty());
    const fs::path dir = fresh_dir("conc");
    const fs::path config = dir / "config.json";
    write_config(config, R"({
        "schema_version": 1,
        "walk": {"dimension": 1, "p": 0.5, "delta": 1.0, "tau": 1.0},
        "concentration_run": {
            "sweep": "x",
            "m": [4],
            "x_values": [2, 8],
            "q_grid": [0.05, 0.5, 1.0],
            "Q": 1.0
        }
    })");
    const fs::path out = dir / "out";
    CHECK(run_cli("concentration --config " + config.string() + " --out " + out.string()) == 0);
    std::ifstream in(out / "concentration.csv");
    std::string line;
    std::getline(in, line);
    int divergent = 0, zero_signal = 0, ok = 0;
    while (std::getline(in, line)) {
        if (line.find("divergent") != std::string::npos) ++divergent;
        if (line.find("zero-signal") != std::string::npos) ++zero_signal;
        if (line.rfind(",ok") != std::string::npos) ++ok;
    }
    CHECK(divergent > 0);    // weak absorption keeps gamma below 1/2
    CHECK(zero_signal > 0);  // x=8, m=4, q=1 blocks every path
    CHECK(ok > 0);
}

TEST_SUITE_END();
