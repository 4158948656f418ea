#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>

#include "clai/pipeline/pipeline.hpp"

namespace clai::service {

using TomlValue = std::variant<std::string, std::int64_t, double, bool>;
// table name ("" for the root, "a.b" for [a.b]) -> key -> value
using TomlDocument = std::map<std::string, std::map<std::string, TomlValue>>;

// The subset used by config files: [tables] (dotted names allowed), bare or
// quoted keys, basic and literal strings, integers, floats, booleans and '#'
// comments. Anything else is a ConfigError naming the line.
TomlDocument parse_toml(std::string_view text);

struct AppConfig {
  pipeline::PipelineConfig pipeline;
  std::map<std::string, double> quality_thresholds;
};

// Maps a parsed document onto AppConfig. Relative paths resolve against
// base_dir. Unknown tables or keys, wrong value types and inline secrets are
// ConfigErrors.
AppConfig config_from_toml(const TomlDocument& doc, const std::filesystem::path& base_dir = {});

AppConfig load_config(const std::filesystem::path& path);

}  // namespace clai::service
