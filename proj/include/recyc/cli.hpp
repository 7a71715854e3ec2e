#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "recyc/experiments.hpp"

namespace recyc::cli {

/// Parses `a..b[:step]`, a single integer, or a comma-separated list.
std::vector<int> parse_range(const std::string& text, const std::string& key);

/// Loads a YAML experiment description. Unknown keys are rejected.
ExperimentConfig parse_config_yaml(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Whitespace- or comma-separated square table of linear coupling ratios.
MatrixX<double> load_coupling_table(const std::string& path);

/// Runs one invocation (args exclude the program name). Returns 0 on success,
/// 2 on configuration errors, 1 on runtime failures.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err);

}  // namespace recyc::cli
