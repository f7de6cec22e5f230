#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace diffusion::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2 };

// Environment variables consulted by the CLI.
inline constexpr const char* kOutputDirEnv = "DIFFUSION_OUTPUT_DIR";
inline constexpr const char* kPresetDirEnv = "DIFFUSION_PRESET_DIR";

// Runs one invocation. args excludes the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Directory holding the shipped presets (environment first, then the
// location baked in at build time).
std::filesystem::path preset_dir();

// A path to an existing file is used as-is; otherwise the argument is
// looked up as a preset name. Returns nullopt when neither exists.
std::optional<std::filesystem::path> resolve_scenario(const std::string& arg);

// Writes via a sibling temporary file and rename, so readers never see a
// partial file. Throws std::runtime_error on I/O failure.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace diffusion::cli
