// bcfl_sim: run, sweep and plot the blockchain FL simulation.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "bcfl/cli/commands.hpp"
#include "bcfl/cli/config.hpp"
#include "json.hpp"

namespace {

std::string flag_name(std::string key) {
    for (auto& c : key) {
        if (c == '_') c = '-';
    }
    return "--" + key;
}

// One string option per config key; only the ones given end up in `out`.
void add_config_flags(CLI::App* app, std::map<std::string, std::string>& values, std::string& config_file) {
    app->add_option("-c,--config", config_file, "config file (key = value lines)");
    for (const auto& k : bcfl::cli::config_keys()) app->add_option(flag_name(k.name), values[k.name], k.help);
}

bcfl::cli::RunConfig resolve(CLI::App* app, const std::map<std::string, std::string>& values,
                             const std::string& config_file) {
    bcfl::cli::Settings file, flags;
    if (!config_file.empty()) file = bcfl::cli::load_settings_file(config_file);
    for (const auto& [k, v] : values) {
        if (app->count(flag_name(k)) > 0) flags[k] = v;
    }
    return bcfl::cli::build_config(file, flags);
}

int fail(const std::string& kind, const std::string& message) {
    std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blockchain federated learning simulator"};
    app.require_subcommand(1);

    std::map<std::string, std::string> run_values, sweep_values;
    std::string run_file, sweep_file;

    auto* run = app.add_subcommand("run", "run one scenario and write its outputs");
    add_config_flags(run, run_values, run_file);

    auto* sweep = app.add_subcommand("sweep", "scaling and attacker-count sweeps over seeds");
    add_config_flags(sweep, sweep_values, sweep_file);
    bcfl::cli::SweepOptions sweep_opts;
    std::string seeds = "1-5", worker_counts = "3,6,9", attacker_counts = "1,2";
    sweep->add_option("--kind", sweep_opts.kind, "scaling | attackers | all")->capture_default_str();
    sweep->add_option("--seeds", seeds, "seed list, e.g. 1-5 or 1,3,7")->capture_default_str();
    sweep->add_option("--worker-counts", worker_counts, "worker counts for the scaling sweep")->capture_default_str();
    sweep->add_option("--attacker-counts", attacker_counts, "attacker counts")->capture_default_str();
    sweep->add_option("--threads", sweep_opts.threads, "parallel runs, 0 = hardware");

    auto* plot = app.add_subcommand("plot", "render an SVG from CSV outputs");
    bcfl::cli::PlotOptions plot_opts;
    plot->add_option("--kind", plot_opts.kind, "loss | scaling | attackers")->capture_default_str();
    plot->add_option("-o,--output", plot_opts.output, "SVG path")->required();
    plot->add_option("inputs", plot_opts.inputs, "CSV files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        if (*run) {
            bcfl::cli::cmd_run(resolve(run, run_values, run_file), std::cout);
        } else if (*sweep) {
            const auto cfg = resolve(sweep, sweep_values, sweep_file);
            sweep_opts.seeds = bcfl::cli::parse_id_list(seeds);
            sweep_opts.worker_counts.clear();
            for (auto v : bcfl::cli::parse_id_list(worker_counts)) sweep_opts.worker_counts.push_back(v);
            sweep_opts.attacker_counts.clear();
            for (auto v : bcfl::cli::parse_id_list(attacker_counts)) sweep_opts.attacker_counts.push_back(v);
            bcfl::cli::cmd_sweep(cfg, sweep_opts, std::cout);
        } else if (*plot) {
            bcfl::cli::cmd_plot(plot_opts, std::cout);
        }
    } catch (const bcfl::cli::ConfigError& e) {
        return fail("config", e.what());
    } catch (const std::exception& e) {
        return fail("runtime", e.what());
    }
    return 0;
}
