#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowsplat/manifest.hpp"

namespace flowsplat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // numerical or runtime failure
inline constexpr int kExitUsage = 2;    // usage, parse or validation error

// Entry point of the flowsplat executable. Never throws; returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Defaults of every option of a command (generate, train, simulate, inject,
// render, eval).
nlohmann::json default_config(const std::string& command);

// Runs a command from a fully resolved config, writes its artifacts and
// manifest into out_dir, and returns the manifest. Throws flowsplat errors.
RunManifest execute(const std::string& command, const nlohmann::json& config,
                    const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace flowsplat::cli
