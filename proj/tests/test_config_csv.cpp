#include <doctest.h>

#include <cmath>
#include <sstream>

#include "absorbmc/config.hpp"
#include "absorbmc/csv.hpp"
#include "absorbmc/rng.hpp"

using namespace absorbmc;

TEST_SUITE_BEGIN("config_csv");

namespace {

nlohmann::json minimal_walk_doc() {
    return nlohmann::json::parse(R"({
        "schema_version": 1,
        "walk": {"dimension": 1, "p": 0.5, "delta": 1.0, "tau": 1.0},
        "walk_run": {
            "x": [6], "n_min": 0, "n_max": 30,
            "m_list": [[3]], "q_grid": [0.0, 0.5],
            "closed_form_overlay": true
        }
    })");
}

}  // namespace

TEST_CASE("doubles round-trip through their CSV form") {
    SplitMix64 rng(2024);
    for (int i = 0; i < 2000; ++i) {
        double v;
        if (i % 3 == 0) {
            v = rng.u01();
        } else if (i % 3 == 1) {
            v = std::ldexp(rng.u01() - 0.5, static_cast<int>(rng.next() % 600) - 300);
        } else {
            v = -rng.u01() * 1e17;
        }
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
        CHECK(s.find(',') == std::string::npos);
    }
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(0.0703125) == "0.0703125");
}

TEST_CASE("csv writer layout") {
    std::ostringstream out;
    CsvWriter csv(out);
    csv.header({"n", "value", "label"});
    csv.row({static_cast<std::int64_t>(4), 0.5, std::string("ok")});
    CHECK(out.str() == "n,value,label\n4,0.5,ok\n");
}

TEST_CASE("valid config parses with defaults") {
    const auto cfg = parse_config(minimal_walk_doc(), "", std::nullopt);
    REQUIRE(cfg.walk_run.has_value());
    CHECK(cfg.walk.dimension == 1);
    CHECK(cfg.walk_run->x == Site{6, 0, 0});
    CHECK(cfg.walk_run->convention == "auto");
    CHECK_FALSE(cfg.walk_run->mc_enabled);
    CHECK(cfg.seed == 1);
    const auto seeded = parse_config(minimal_walk_doc(), "", 42);
    CHECK(seeded.seed == 42);
}

TEST_CASE("violations are reported with their field paths") {
    auto doc = minimal_walk_doc();
    doc["walk"]["p"] = 1.5;
    CHECK_THROWS_WITH_AS(parse_config(doc, "", std::nullopt),
                         doctest::Contains("walk.p"), ConfigError);

    doc = minimal_walk_doc();
    doc["walk_run"]["q_grid"] = {0.5, 0.2};
    CHECK_THROWS_WITH_AS(parse_config(doc, "", std::nullopt),
                         doctest::Contains("walk_run.q_grid"), ConfigError);

    doc = minimal_walk_doc();
    doc["walk_run"]["m_list"] = {{1, 2}};
    CHECK_THROWS_WITH_AS(parse_config(doc, "", std::nullopt),
                         doctest::Contains("walk_run.m_list[0]"), ConfigError);

    doc = minimal_walk_doc();
    doc["walk_run"].erase("n_max");
    CHECK_THROWS_WITH_AS(parse_config(doc, "", std::nullopt),
                         doctest::Contains("walk_run.n_max"), ConfigError);

    doc = minimal_walk_doc();
    doc["walk"]["dimension"] = 3;
    // overlay is 1-D only and m/x suddenly have too few components
    CHECK_THROWS_AS(parse_config(doc, "", std::nullopt), ConfigError);

    CHECK_THROWS_WITH_AS(parse_config(minimal_walk_doc(), "nope", std::nullopt),
                         doctest::Contains("presets"), ConfigError);
}

TEST_CASE("preset selection") {
    nlohmann::json doc;
    doc["presets"]["tiny"] = minimal_walk_doc();
    const auto cfg = parse_config(doc, "tiny", std::nullopt);
    CHECK(cfg.preset_name == "tiny");
    CHECK(cfg.walk_run.has_value());
}

TEST_CASE("queue section validation") {
    auto doc = nlohmann::json::parse(R"({
        "schema_version": 1,
        "walk": {"dimension": 1, "p": 0.5, "delta": 1.0, "tau": 1.0},
        "queue_run": {
            "T_trafficking": [1.0],
            "sites": [[10]],
            "q_grid": [0.25, 0.5, 1.0],
            "Q_grid": [0.01, 0.1]
        }
    })");
    const auto cfg = parse_config(doc, "", std::nullopt);
    REQUIRE(cfg.queue_run.has_value());
    CHECK(cfg.queue_run->omega == 0.5);
    CHECK(cfg.queue_run->tol == 1e-8);

    doc["queue_run"]["sites"] = {{0}};
    CHECK_THROWS_WITH_AS(parse_config(doc, "", std::nullopt),
                         doctest::Contains("queue_run.sites[0]"), ConfigError);

    doc["queue_run"]["sites"] = {{10}};
    doc["queue_run"]["q_grid"] = {0.5};
    CHECK_THROWS_WITH_AS(parse_config(doc, "", std::nullopt),
                         doctest::Contains("queue_run.q_grid"), ConfigError);
}

TEST_SUITE_END();
