// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planerf/annotate.hpp"
#include "planerf/geometry.hpp"
#include "planerf/image.hpp"

namespace planerf {

// Ground-truth box in pixel coordinates, inclusive-exclusive.
struct GtBox {
  int class_id = 0;
  int instance_id = 0;
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
};

struct Frame {
  std::string image_path;  // relative to the dataset root
  CameraPose pose;
  double time = 0.0;
  std::vector<GtBox> boxes;
  std::string mask_path;  // optional binary dynamic mask, relative
};

struct SceneDataset {
  std::string name;
  SceneBounds bounds;
  std::vector<Frame> frames;
  std::vector<Image> images;      // aligned with frames; loaded eagerly
  std::vector<Image> dyn_masks;   // empty or aligned with frames (1 channel)
  std::filesystem::path root;     // directory holding scene.json
  int width = 0, height = 0;

  int frame_count() const { return static_cast<int>(frames.size()); }
  Trajectory trajectory() const;
};

// Pose <-> JSON object with a 16-number row-major camera-to-world "transform"
// and an "intrinsics" object. `context` names the entry in parse errors.
nlohmann::json pose_to_json(const CameraPose& pose);
CameraPose pose_from_json(const nlohmann::json& j, const std::string& context);

// Reads <dir>/scene.json plus every referenced image, enforcing the dataset
// invariants; violations raise std::runtime_error naming the frame and field.
SceneDataset load_scene(const std::filesystem::path& dir);

// Writes scene.json, images/, and masks/ under `dir` from in-memory data.
void save_scene(const SceneDataset& dataset, const std::filesystem::path& dir);

// Rewrites only <dir>/scene.json (atomically) without touching image files;
// used to update poses in place.
void save_scene_manifest(const SceneDataset& dataset, const std::filesystem::path& dir);

// Derived dataset for training the self-annotation field: each frame's image
// is black except the ground-truth boxes, filled with their instance's
// palette color (later palette entries paint over earlier ones).
SceneDataset build_mask_images(const SceneDataset& dataset, const InstancePalette& palette);

// ---- detection-dataset export ----

struct DetectionRecord {
  int class_id = 0;
  double cx = 0, cy = 0, w = 0, h = 0;  // normalized to [0,1]
};

struct DetectionEntry {
  std::string image_name;  // file name inside images/
  std::vector<DetectionRecord> records;
  std::string source;  // "real" or "synthetic"
};

struct DetectionExport {
  std::vector<DetectionEntry> entries;
  std::vector<int> classes;  // sorted distinct class ids present
};

DetectionRecord to_detection_record(const BBoxAnnotation& box, int image_width,
                                    int image_height);

// Writes images/, labels/ (one `class cx cy w h` line per box, 6 fractional
// digits), and manifest.json. Zero-area boxes are skipped with a warning.
// `images` must align with `entries`.
void export_detection(const std::vector<DetectionEntry>& entries,
                      const std::vector<Image>& images, const std::filesystem::path& out_dir);

DetectionExport load_detection(const std::filesystem::path& dir);

// Union of two on-disk exports; file-name collisions are renamed, source
// tags preserved, and class lists must agree when both sides are non-empty.
void assemble_hybrid(const std::filesystem::path& real_dir,
                     const std::filesystem::path& synthetic_dir,
                     const std::filesystem::path& out_dir);

}  // namespace planerf
