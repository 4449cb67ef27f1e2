#pragma once

// JSON experiment configs. The schema is versioned and strict: every object
// rejects keys it does not know.

#include <filesystem>
#include <string>
#include <vector>

#include "lagrange/experiments.hpp"

namespace lagrange {

inline constexpr int kConfigVersion = 1;

/// Throws ParseError (malformed JSON, with line and column) or InvalidArgument
/// (schema violations, with the offending key path).
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON for a config; parse_config(config_to_json(c)) reproduces c.
std::string config_to_json(const ExperimentConfig& config);

/// Comma-separated root list such as "-1,-1,-0.1+1i,-0.1-1i"; repeated values
/// become multiplicities.
RootSet parse_root_list(const std::string& text);

/// Comma-separated reals.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace lagrange
