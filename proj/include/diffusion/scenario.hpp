#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "diffusion/engine.hpp"

namespace diffusion {

inline constexpr std::string_view kScenarioSchema = "diffusion-scenario/1";

// A parsed scenario file: `key = value` lines, '#' comments. Values stay
// textual until build_scenario() so that sweeps can override any key with
// the same validation path as the file itself.
struct ScenarioFile {
  struct Entry {
    std::string value;
    std::size_t line;  // 0 for command-line overrides
  };

  std::string origin;
  std::filesystem::path base_dir;
  std::map<std::string, Entry> entries;
};

// Every key a scenario may set, in documentation order.
const std::vector<std::string_view>& scenario_keys();
bool is_scenario_key(std::string_view key);

// Throws ParseError (with the offending line) on syntax errors, unknown
// keys, duplicates or a missing/unsupported schema header.
ScenarioFile parse_scenario(std::string_view text, std::string origin, std::filesystem::path base_dir = {});
ScenarioFile load_scenario(const std::filesystem::path& path);

// Sets or replaces a key; throws ParseError for unknown keys.
void set_override(ScenarioFile& file, std::string_view key, std::string value);

// Interprets and validates every value, generates or loads the workload,
// and checks the result with Scenario::validate(). Value errors are
// reported as ParseError against the line that set the key.
Scenario build_scenario(const ScenarioFile& file);

}  // namespace diffusion
