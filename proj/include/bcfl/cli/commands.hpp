#pragma once

// Subcommands behind the bcfl_sim executable.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bcfl/cli/config.hpp"

namespace bcfl::cli {

/// Runs one scenario and writes its outputs to cfg.output_dir. Prints a
/// one-line summary to `log`.
void cmd_run(const RunConfig& cfg, std::ostream& log);

struct SweepOptions {
    /// "scaling", "attackers" or "all".
    std::string kind = "all";
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<std::size_t> worker_counts{3, 6, 9};
    std::vector<std::size_t> attacker_counts{1, 2};
    unsigned threads = 0;
};

/// Writes scaling.csv and/or attackers.csv to cfg.output_dir.
void cmd_sweep(const RunConfig& cfg, const SweepOptions& options, std::ostream& log);

struct PlotOptions {
    /// "loss" (metrics CSVs), "scaling" (scaling.csv) or "attackers"
    /// (attackers.csv).
    std::string kind = "loss";
    std::vector<std::string> inputs;
    std::string output;
};

/// Renders an SVG from CSV files only.
void cmd_plot(const PlotOptions& options, std::ostream& log);

/// SVG for named CSV texts; pure function of its inputs.
std::string render_svg(const std::string& kind, const std::vector<std::pair<std::string, std::string>>& csvs);

/// "1-5" or "1,3,7" (ranges and lists may be mixed).
std::vector<std::uint64_t> parse_id_list(const std::string& text);

}  // namespace bcfl::cli
