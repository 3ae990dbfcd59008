// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace planerf {

namespace fs = std::filesystem;
using nlohmann::json;

Trajectory SceneDataset::trajectory() const {
  std::vector<CameraPose> poses;
  poses.reserve(frames.size());
  for (const Frame& f : frames) poses.push_back(f.pose);
  return Trajectory(std::move(poses));
}

namespace {

std::string frame_err(std::size_t i, const std::string& what) {
  return "frame " + std::to_string(i) + ": " + what;
}

}  // namespace

json pose_to_json(const CameraPose& pose) {
  std::vector<double> transform(16, 0.0);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) transform[r * 4 + c] = pose.rotation(r, c);
    transform[r * 4 + 3] = pose.translation[r];
  }
  transform[15] = 1.0;
  return json{{"transform", transform},
              {"intrinsics",
               {{"fx", pose.intrinsics.fx},
                {"fy", pose.intrinsics.fy},
                {"cx", pose.intrinsics.cx},
                {"cy", pose.intrinsics.cy},
                {"width", pose.intrinsics.width},
                {"height", pose.intrinsics.height}}}};
}

CameraPose pose_from_json(const json& j, const std::string& context) {
  const auto t = j.at("transform").get<std::vector<double>>();
  if (t.size() != 16)
    throw std::runtime_error(context + ": transform must hold 16 numbers");
  CameraPose pose;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pose.rotation(r, c) = t[r * 4 + c];
    pose.translation[r] = t[r * 4 + 3];
  }
  const auto& in = j.at("intrinsics");
  pose.intrinsics.fx = in.at("fx").get<double>();
  pose.intrinsics.fy = in.at("fy").get<double>();
  pose.intrinsics.cx = in.at("cx").get<double>();
  pose.intrinsics.cy = in.at("cy").get<double>();
  pose.intrinsics.width = in.at("width").get<int>();
  pose.intrinsics.height = in.at("height").get<int>();
  return pose;
}

SceneDataset load_scene(const fs::path& dir) {
  fs::path manifest = dir;
  if (fs::is_directory(dir)) manifest /= "scene.json";
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("cannot open scene manifest: " + manifest.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed scene manifest " + manifest.string() + ": " + e.what());
  }

  SceneDataset ds;
  ds.root = manifest.parent_path();
  ds.name = j.at("name").get<std::string>();
  const auto bmin = j.at("bounds").at("min").get<std::vector<double>>();
  const auto bmax = j.at("bounds").at("max").get<std::vector<double>>();
  if (bmin.size() != 3 || bmax.size() != 3)
    throw std::runtime_error("bounds min/max must hold 3 numbers each");
  ds.bounds.min = Eigen::Vector3d(bmin[0], bmin[1], bmin[2]);
  ds.bounds.max = Eigen::Vector3d(bmax[0], bmax[1], bmax[2]);
  ds.bounds.validate();

  double prev_time = -1.0;
  bool any_mask = false;
  for (std::size_t i = 0; i < j.at("frames").size(); ++i) {
    const json& fj = j["frames"][i];
    Frame f;
    f.image_path = fj.at("image").get<std::string>();
    f.pose = pose_from_json(fj, "frame " + std::to_string(i));
    f.time = fj.at("time").get<double>();
    if (!(f.time >= 0.0 && f.time <= 1.0))
      throw std::runtime_error(frame_err(i, "time outside [0,1]"));
    if (f.time < prev_time) throw std::runtime_error(frame_err(i, "timestamps not sorted"));
    prev_time = f.time;
    f.pose.timestamp = f.time;
    try {
      f.pose.validate();
    } catch (const std::exception& e) {
      throw std::runtime_error(frame_err(i, std::string("pose: ") + e.what()));
    }
    if (fj.contains("boxes")) {
      for (const json& bj : fj["boxes"]) {
        GtBox b;
        b.class_id = bj.at("class").get<int>();
        b.instance_id = bj.at("instance").get<int>();
        b.x_min = bj.at("x_min").get<double>();
        b.y_min = bj.at("y_min").get<double>();
        b.x_max = bj.at("x_max").get<double>();
        b.y_max = bj.at("y_max").get<double>();
        if (!(b.x_min < b.x_max && b.y_min < b.y_max))
          throw std::runtime_error(frame_err(i, "degenerate box"));
        f.boxes.push_back(b);
      }
    }
    if (fj.contains("mask")) {
      f.mask_path = fj["mask"].get<std::string>();
      any_mask = true;
    }
    ds.frames.push_back(std::move(f));
  }
  if (ds.frames.empty()) throw std::runtime_error("scene has no frames");

  ds.width = ds.frames[0].pose.intrinsics.width;
  ds.height = ds.frames[0].pose.intrinsics.height;
  ds.images.reserve(ds.frames.size());
  if (any_mask) ds.dyn_masks.resize(ds.frames.size());
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    const Frame& f = ds.frames[i];
    if (f.pose.intrinsics.width != ds.width || f.pose.intrinsics.height != ds.height)
      throw std::runtime_error(frame_err(i, "intrinsics size differs from the first frame"));
    const fs::path img_path = ds.root / f.image_path;
    if (!fs::exists(img_path))
      throw std::runtime_error(frame_err(i, "missing image file " + img_path.string()));
    Image img = read_png(img_path.string());
    if (img.width != ds.width || img.height != ds.height)
      throw std::runtime_error(frame_err(i, "image size differs from intrinsics"));
    ds.images.push_back(std::move(img));
    if (!f.mask_path.empty()) {
      const fs::path mask_path = ds.root / f.mask_path;
      if (!fs::exists(mask_path))
        throw std::runtime_error(frame_err(i, "missing mask file " + mask_path.string()));
      Image m = read_png(mask_path.string());
      if (m.width != ds.width || m.height != ds.height)
        throw std::runtime_error(frame_err(i, "mask size differs from images"));
      ds.dyn_masks[i] = std::move(m);
    }
  }
  return ds;
}

void save_scene_manifest(const SceneDataset& dataset, const fs::path& dir) {
  json frames = json::array();
  for (const Frame& f : dataset.frames) {
    json fj = pose_to_json(f.pose);
    fj["image"] = f.image_path;
    fj["time"] = f.time;
    if (!f.boxes.empty()) {
      json boxes = json::array();
      for (const GtBox& b : f.boxes)
        boxes.push_back(json{{"class", b.class_id},
                             {"instance", b.instance_id},
                             {"x_min", b.x_min},
                             {"y_min", b.y_min},
                             {"x_max", b.x_max},
                             {"y_max", b.y_max}});
      fj["boxes"] = boxes;
    }
    if (!f.mask_path.empty()) fj["mask"] = f.mask_path;
    frames.push_back(std::move(fj));
  }
  const json j{{"name", dataset.name},
               {"bounds",
                {{"min", {dataset.bounds.min[0], dataset.bounds.min[1], dataset.bounds.min[2]}},
                 {"max", {dataset.bounds.max[0], dataset.bounds.max[1], dataset.bounds.max[2]}}}},
               {"frames", frames}};
  const fs::path final_path = dir / "scene.json";
  const fs::path tmp_path = dir / "scene.json.tmp";
  {
    std::ofstream out(tmp_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write scene.json under " + dir.string());
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing scene.json under " + dir.string());
  }
  fs::rename(tmp_path, final_path);
}

void save_scene(const SceneDataset& dataset, const fs::path& dir) {
  if (dataset.images.size() != dataset.frames.size())
    throw std::invalid_argument("save_scene needs in-memory images for every frame");
  fs::create_directories(dir);
  for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
    const Frame& f = dataset.frames[i];
    const fs::path img_path = dir / f.image_path;
    fs::create_directories(img_path.parent_path());
    write_png8(img_path.string(), dataset.images[i]);
    if (!f.mask_path.empty()) {
      if (dataset.dyn_masks.size() <= i || dataset.dyn_masks[i].width == 0)
        throw std::invalid_argument("frame " + std::to_string(i) +
                                    " names a mask but none is loaded");
      const fs::path mask_path = dir / f.mask_path;
      fs::create_directories(mask_path.parent_path());
      write_png8(mask_path.string(), dataset.dyn_masks[i]);
    }
  }
  save_scene_manifest(dataset, dir);
}

SceneDataset build_mask_images(const SceneDataset& dataset, const InstancePalette& palette) {
  palette.validate();
  for (std::size_t i = 0; i < dataset.frames.size(); ++i)
    for (const GtBox& b : dataset.frames[i].boxes)
      if (!palette.find(b.instance_id))
        throw std::invalid_argument(frame_err(i, "box instance " +
                                                     std::to_string(b.instance_id) +
                                                     " missing from palette"));
  SceneDataset out;
  out.name = dataset.name + "-boxmasks";
  out.bounds = dataset.bounds;
  out.width = dataset.width;
  out.height = dataset.height;
  out.frames = dataset.frames;
  out.images.reserve(dataset.frames.size());
  char buf[64];
  for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
    Image img(dataset.width, dataset.height, 3, 0.f);
    // palette order wins on overlap: later entries paint over earlier ones
    for (const PaletteEntry& e : palette.entries) {
      for (const GtBox& b : dataset.frames[i].boxes) {
        if (b.instance_id != e.instance_id) continue;
        const int r0 = std::max(0, static_cast<int>(std::floor(b.y_min)));
        const int r1 = std::min(dataset.height, static_cast<int>(std::ceil(b.y_max)));
        const int c0 = std::max(0, static_cast<int>(std::floor(b.x_min)));
        const int c1 = std::min(dataset.width, static_cast<int>(std::ceil(b.x_max)));
        for (int r = r0; r < r1; ++r)
          for (int c = c0; c < c1; ++c)
            for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = e.color[ch] / 255.f;
      }
    }
    out.images.push_back(std::move(img));
    std::snprintf(buf, sizeof(buf), "images/frame_%04zu.png", i);
    out.frames[i].image_path = buf;
    out.frames[i].mask_path.clear();
  }
  return out;
}

DetectionRecord to_detection_record(const BBoxAnnotation& box, int image_width,
                                    int image_height) {
  DetectionRecord r;
  r.class_id = box.class_id;
  r.cx = 0.5 * (box.x_min + box.x_max) / image_width;
  r.cy = 0.5 * (box.y_min + box.y_max) / image_height;
  r.w = static_cast<double>(box.x_max - box.x_min) / image_width;
  r.h = static_cast<double>(box.y_max - box.y_min) / image_height;
  return r;
}

namespace {

std::string label_name(const std::string& image_name) {
  const auto dot = image_name.find_last_of('.');
  return (dot == std::string::npos ? image_name : image_name.substr(0, dot)) + ".txt";
}

void write_labels(const fs::path& path, const std::vector<DetectionRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write label file: " + path.string());
  char line[160];
  for (const DetectionRecord& r : records) {
    if (!(r.w > 0.0 && r.h > 0.0)) {
      std::cerr << "warning: skipping zero-area box in " << path.filename().string() << "\n";
      continue;
    }
    std::snprintf(line, sizeof(line), "%d %.6f %.6f %.6f %.6f\n", r.class_id, r.cx, r.cy, r.w,
                  r.h);
    out << line;
  }
}

json manifest_json(const std::vector<DetectionEntry>& entries) {
  std::set<int> classes;
  json images = json::object();
  for (const DetectionEntry& e : entries) {
    images[e.image_name] = e.source;
    for (const DetectionRecord& r : e.records) classes.insert(r.class_id);
  }
  return json{{"classes", std::vector<int>(classes.begin(), classes.end())},
              {"images", images}};
}

}  // namespace

void export_detection(const std::vector<DetectionEntry>& entries,
                      const std::vector<Image>& images, const fs::path& out_dir) {
  if (entries.size() != images.size())
    throw std::invalid_argument("export_detection: entries/images size mismatch");
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "labels");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const DetectionEntry& e = entries[i];
    if (e.source != "real" && e.source != "synthetic")
      throw std::invalid_argument("detection source must be 'real' or 'synthetic'");
    for (const DetectionRecord& r : e.records)
      if (r.cx < 0 || r.cx > 1 || r.cy < 0 || r.cy > 1 || r.w < 0 || r.w > 1 || r.h < 0 ||
          r.h > 1)
        throw std::invalid_argument("detection record outside [0,1] in " + e.image_name);
    write_png8((out_dir / "images" / e.image_name).string(), images[i]);
    write_labels(out_dir / "labels" / label_name(e.image_name), e.records);
  }
  std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest under " + out_dir.string());
  out << manifest_json(entries).dump(2) << "\n";
}

DetectionExport load_detection(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("cannot open manifest: " + (dir / "manifest.json").string());
  json j;
  in >> j;
  DetectionExport ex;
  ex.classes = j.at("classes").get<std::vector<int>>();
  for (const auto& [name, source] : j.at("images").items()) {
    DetectionEntry e;
    e.image_name = name;
    e.source = source.get<std::string>();
    std::ifstream lf(dir / "labels" / label_name(name));
    if (!lf)
      throw std::runtime_error("missing label file for " + name + " under " + dir.string());
    DetectionRecord r;
    while (lf >> r.class_id >> r.cx >> r.cy >> r.w >> r.h) e.records.push_back(r);
    ex.entries.push_back(std::move(e));
  }
  return ex;
}

void assemble_hybrid(const fs::path& real_dir, const fs::path& synthetic_dir,
                     const fs::path& out_dir) {
  const DetectionExport real = load_detection(real_dir);
  const DetectionExport syn = load_detection(synthetic_dir);
  if (!real.entries.empty() && !syn.entries.empty() && !real.classes.empty() &&
      !syn.classes.empty() && real.classes != syn.classes)
    throw std::invalid_argument("class lists differ between real and synthetic sets");

  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "labels");
  std::set<std::string> used;
  std::vector<DetectionEntry> merged;
  auto copy_set = [&](const DetectionExport& ex, const fs::path& src_dir) {
    for (const DetectionEntry& e : ex.entries) {
      std::string name = e.image_name;
      int k = 1;
      while (used.count(name)) {  // collision: rename, never overwrite
        const auto dot = e.image_name.find_last_of('.');
        const std::string stem =
            dot == std::string::npos ? e.image_name : e.image_name.substr(0, dot);
        const std::string ext = dot == std::string::npos ? "" : e.image_name.substr(dot);
        name = stem + "_s" + std::to_string(k++) + ext;
      }
      used.insert(name);
      fs::copy_file(src_dir / "images" / e.image_name, out_dir / "images" / name,
                    fs::copy_options::overwrite_existing);
      fs::copy_file(src_dir / "labels" / label_name(e.image_name),
                    out_dir / "labels" / label_name(name),
                    fs::copy_options::overwrite_existing);
      DetectionEntry copy = e;
      copy.image_name = name;
      merged.push_back(std::move(copy));
    }
  };
  copy_set(real, real_dir);
  copy_set(syn, synthetic_dir);
  std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest under " + out_dir.string());
  out << manifest_json(merged).dump(2) << "\n";
}

}  // namespace planerf
