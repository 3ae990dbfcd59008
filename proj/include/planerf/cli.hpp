// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "planerf/annotate.hpp"

namespace planerf {

// Entry point behind the `planerf` binary: parses the subcommand line, runs
// it, and maps any failure to a nonzero exit status with a message on stderr.
// Artifact-producing subcommands stage their output and rename it into place
// at the end, so a failed run leaves no partial output directory.
int run_cli(int argc, const char* const* argv);

// Palette file format: JSON array of {"instance", "class", "color": [r,g,b]}.
nlohmann::json palette_to_json(const InstancePalette& palette);
InstancePalette palette_from_json(const nlohmann::json& j);
void save_palette(const InstancePalette& palette, const std::filesystem::path& path);
InstancePalette load_palette(const std::filesystem::path& path);

}  // namespace planerf
