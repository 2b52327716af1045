#include <filesystem>
#include <fstream>
#include <sstream>

#include "bcfl/cli/commands.hpp"
#include "bcfl/cli/config.hpp"
#include "doctest.h"

using namespace bcfl;
using namespace bcfl::cli;

namespace fs = std::filesystem;

TEST_CASE("seed alone gives the default config") {
    const auto cfg = build_config({}, {{"seed", "42"}});
    const sim::ScenarioConfig def;
    CHECK(cfg.scenario.seed == 42);
    CHECK(cfg.scenario.workers == def.workers);
    CHECK(cfg.scenario.miners == 4);
    CHECK(cfg.scenario.scenario == sim::Scenario::DefenseDecoupled);
    CHECK(cfg.scenario.monitor.threshold == 2.0);
    CHECK(cfg.scenario.monitor.window == 5);
    CHECK(cfg.scenario.rows == 246);
}

TEST_CASE("flags override the file") {
    std::istringstream file("# preset\nworkers = 6\nmode = attack\n");
    const auto cfg = build_config(parse_settings(file, "test.conf"), {{"workers", "9"}});
    CHECK(cfg.scenario.workers == 9);
    CHECK(cfg.scenario.scenario == sim::Scenario::Attack);
}

TEST_CASE("constraint errors name the constraint") {
    try {
        build_config({}, {{"attackers", "5"}, {"workers", "5"}});
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("attackers < workers") != std::string::npos);
    }
    CHECK_THROWS_AS(build_config({}, {{"fl_miners", "5"}}), ConfigError);
}

TEST_CASE("file syntax errors") {
    std::istringstream unknown("colour = red\n");
    CHECK_THROWS_AS(parse_settings(unknown, "x"), ConfigError);
    std::istringstream twice("seed = 1\nseed = 2\n");
    CHECK_THROWS_AS(parse_settings(twice, "x"), ConfigError);
    std::istringstream no_eq("seed 1\n");
    CHECK_THROWS_AS(parse_settings(no_eq, "x"), ConfigError);
    CHECK_THROWS_AS(build_config({}, {{"workers", "ten"}}), ConfigError);
    CHECK_THROWS_AS(build_config({}, {{"threshold", "2.0x"}}), ConfigError);
    CHECK_THROWS_AS(build_config({}, {{"mode", "defense"}}), ConfigError);
    CHECK_THROWS_AS(load_settings_file("/nonexistent/file.conf"), ConfigError);
}

TEST_CASE("to_text reloads to the same config") {
    const auto cfg = build_config({}, {{"seed", "7"}, {"threshold", "2.5"}, {"train_ms", "12.75"}, {"trace", "true"}});
    std::istringstream in(to_text(cfg));
    const auto back = build_config(parse_settings(in, "round-trip"), {});
    CHECK(to_text(back) == to_text(cfg));
    CHECK(back.scenario.monitor.threshold == 2.5);
    CHECK(back.scenario.latency.train_ms == 12.75);
}

TEST_CASE("every key is documented and reachable") {
    for (const auto& k : config_keys()) {
        CHECK(is_config_key(k.name));
        CHECK_FALSE(k.help.empty());
    }
}

TEST_CASE("id lists") {
    CHECK(parse_id_list("1-5") == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(parse_id_list("3,6,9") == std::vector<std::uint64_t>{3, 6, 9});
    CHECK(parse_id_list("1,4-6") == std::vector<std::uint64_t>{1, 4, 5, 6});
    CHECK_THROWS(parse_id_list("5-1"));
    CHECK_THROWS(parse_id_list("a"));
    CHECK_THROWS(parse_id_list(""));
}

TEST_CASE("plots depend only on CSV text") {
    const std::string csv =
        "round,sim_time_ms,e2e_delay_ms,loss,accuracy,reliable_set_size,protected\n"
        "1,100,100,0.6,0.7,10,0\n2,200,100,0.5,0.8,10,0\n";
    const auto a = render_svg("loss", {{"run", csv}});
    CHECK(a == render_svg("loss", {{"run", csv}}));
    CHECK(a.rfind("<svg", 0) == 0);
    CHECK(a != render_svg("loss", {{"run", csv + "3,300,100,0.4,0.8,10,1\n"}}));
    CHECK_THROWS_AS(render_svg("pie", {{"run", csv}}), ConfigError);
    CHECK_THROWS_AS(render_svg("scaling", {{"s", csv}}), ConfigError);
}

TEST_CASE("run writes outputs and plot reads them") {
    const auto dir = fs::temp_directory_path() / "bcfl_cli_test";
    fs::remove_all(dir);
    auto cfg = build_config({}, {{"rounds", "8"}, {"output_dir", dir.string()}});
    std::ostringstream log;
    cmd_run(cfg, log);
    for (const char* f : {"metrics.csv", "summary.json", "chain.jsonl", "models.jsonl", "audit.jsonl", "dataset.csv"})
        CHECK(fs::exists(dir / f));
    const auto svg = (dir / "loss.svg").string();
    cmd_plot({"loss", {(dir / "metrics.csv").string()}, svg}, log);
    CHECK(fs::file_size(svg) > 0);
    CHECK_THROWS_AS(cmd_plot({"loss", {(dir / "missing.csv").string()}, svg}, log), ConfigError);
    fs::remove_all(dir);
}
