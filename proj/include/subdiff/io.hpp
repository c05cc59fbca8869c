#pragma once

#include "subdiff/config.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace subdiff {

/// Creates the directory tree; throws IoError.
std::filesystem::path prepare_output_dir(const std::filesystem::path& dir);

/// Single writer per file; throws IoError on open or write failure.
void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

using RunInfo = std::vector<std::pair<std::string, std::string>>;

/// manifest.json: the resolved configuration plus a "run" section. The file
/// is itself a valid config, so a rerun from it reproduces the outputs.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const std::string& command,
                                     const RunConfig& config, const RunInfo& info);

}  // namespace subdiff
