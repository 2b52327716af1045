#pragma once

// Run configuration: flat `key = value` files, command-line overrides and
// defaults. Flags beat file values, file values beat defaults.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bcfl/sim/simulation.hpp"

namespace bcfl::cli {

class ConfigError : public Error {
public:
    using Error::Error;
};

struct RunConfig {
    sim::ScenarioConfig scenario;
    std::string output_dir;
};

struct KeyInfo {
    std::string name;
    std::string help;
};

/// Every accepted key, in documentation order. Flags use the same names
/// with `-` in place of `_`.
const std::vector<KeyInfo>& config_keys();
bool is_config_key(const std::string& key);

using Settings = std::map<std::string, std::string>;

/// Parses `key = value` lines. `#` starts a comment; blank lines are
/// ignored. Unknown or repeated keys and malformed lines are errors that
/// name `origin` and the line number.
Settings parse_settings(std::istream& in, const std::string& origin);
Settings load_settings_file(const std::string& path);

/// $BCFL_OUTPUT_DIR if set and non-empty, otherwise "out".
std::string default_output_dir();

/// Applies one key to `cfg`. Throws ConfigError for unknown keys and
/// unparsable values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Defaults, then `file`, then `flags`; then validate().
RunConfig build_config(const Settings& file, const Settings& flags);

/// Throws ConfigError naming the violated constraint.
void validate(const RunConfig& cfg);

/// Effective configuration in file syntax; reloading it gives the same
/// config. Without `include_output_dir` the text depends only on the run
/// parameters.
std::string to_text(const RunConfig& cfg, bool include_output_dir = true);

}  // namespace bcfl::cli
