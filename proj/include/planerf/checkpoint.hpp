// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "planerf/trainer.hpp"

namespace planerf {

// Versioned binary container holding every learnable value, the Adam
// moments, and the run metadata as little-endian float32 / JSON sections.
// Writing is atomic (temp file + rename); loading a truncated or
// version-mismatched file throws without touching any existing state.
// The exact layout is documented in docs/checkpoint-format.md.
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace planerf
