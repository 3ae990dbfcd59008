// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "planerf/checkpoint.hpp"
#include "planerf/dataset.hpp"
#include "planerf/pose_sampling.hpp"
#include "planerf/renderer.hpp"
#include "planerf/rng.hpp"
#include "planerf/synth.hpp"
#include "planerf/trainer.hpp"

namespace planerf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Output directory staging: work in `<target>.staging`, rename into place on
// commit. A failure before commit removes the staging tree, leaving whatever
// was at the target untouched.
class StagedDir {
 public:
  explicit StagedDir(const fs::path& target)
      : final_(fs::absolute(target)),
        tmp_(final_.parent_path() / (final_.filename().string() + ".staging")) {
    std::error_code ec;
    fs::remove_all(tmp_, ec);
    fs::create_directories(tmp_);
  }
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(tmp_, ec);
    }
  }

  const fs::path& path() const { return tmp_; }
  void commit() {
    fs::remove_all(final_);
    fs::rename(tmp_, final_);
    committed_ = true;
  }

 private:
  fs::path final_, tmp_;
  bool committed_ = false;
};

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_run_json(const fs::path& dir, const std::string& command, const json& flags) {
  write_json_file(dir / "run.json", json{{"command", command}, {"flags", flags}});
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
    if (!out) throw std::runtime_error("failed writing " + path.string());
  }
  fs::rename(tmp, path);
}

SceneSpec named_scene_spec(const std::string& name) {
  if (name == "toy-dyn-1") return toy_dyn_1();
  throw std::invalid_argument("unknown scene spec \"" + name + "\" (available: toy-dyn-1)");
}

// One palette entry per moving primitive, in instance-id order, using the
// built-in well-separated colors.
InstancePalette palette_for_spec(const SceneSpec& spec) {
  std::vector<const Primitive*> movers;
  for (const Primitive& p : spec.primitives)
    if (p.moving()) movers.push_back(&p);
  std::sort(movers.begin(), movers.end(),
            [](const Primitive* a, const Primitive* b) { return a->instance_id < b->instance_id; });
  const InstancePalette base = InstancePalette::standard(static_cast<int>(movers.size()));
  InstancePalette out;
  for (std::size_t i = 0; i < movers.size(); ++i)
    out.entries.push_back({movers[i]->instance_id, movers[i]->class_id, base.entries[i].color});
  out.validate();
  return out;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw std::invalid_argument("unknown config key \"" + key + "\" in " + where);
}

// ---- train configuration -------------------------------------------------

struct TrainCliOptions {
  std::string scene, mode = "extended", config, out;
  int threads = 1;
  int iterations = -1;      // -1 = take from config / default
  std::int64_t seed = -1;   // -1 = take from config / default
};

void cmd_train(const TrainCliOptions& opt) {
  json cfg = opt.config.empty() ? json::object() : read_json_file(opt.config);
  reject_unknown_keys(
      cfg,
      {"feature_dim", "multipliers", "res_x", "res_y", "res_z", "res_t", "init_lo", "init_hi",
       "hidden", "density_bias", "weights", "iterations", "batch_size", "samples_per_ray",
       "eval_samples_per_ray", "stratified", "lr", "lr_final_factor", "eval_interval",
       "checkpoint_interval", "routing", "background", "eval_frames", "seed", "log"},
      "train config");
  if (cfg.contains("weights"))
    reject_unknown_keys(cfg["weights"],
                        {"photometric", "cosine_sep", "mask_bce", "tv_spatial", "tv_temporal"},
                        "train config weights");

  const FieldMode mode = field_mode_from_string(opt.mode);
  SceneDataset ds = load_scene(opt.scene);

  TrainSchedule sch;
  sch.iterations = opt.iterations >= 0 ? opt.iterations : cfg.value("iterations", 2000);
  sch.batch_size = cfg.value("batch_size", 1024);
  sch.samples_per_ray = cfg.value("samples_per_ray", 128);
  sch.eval_samples_per_ray = cfg.value("eval_samples_per_ray", 192);
  sch.stratified = cfg.value("stratified", true);
  sch.lr = cfg.value("lr", 1e-3);
  sch.lr_final_factor = cfg.value("lr_final_factor", 0.1);
  sch.eval_interval = cfg.value("eval_interval", 500);
  sch.checkpoint_interval = cfg.value("checkpoint_interval", 0);
  sch.routing = cfg.value("routing", true);
  sch.threads = opt.threads;
  if (cfg.contains("background")) sch.background = cfg["background"].get<std::array<double, 3>>();
  if (cfg.contains("eval_frames")) sch.eval_frames = cfg["eval_frames"].get<std::vector<int>>();
  sch.log_path = cfg.value("log", opt.out + ".log.jsonl");
  if (sch.checkpoint_interval > 0) sch.checkpoint_path = opt.out;

  const int f_train = ds.frame_count() - static_cast<int>(sch.eval_frames.size());
  if (f_train < 2) throw std::invalid_argument("fewer than 2 training frames after holdout");

  PlaneStackConfig pc;
  pc.mode = mode;
  pc.feature_dim = cfg.value("feature_dim", 32);
  pc.multipliers = cfg.value("multipliers", std::vector<int>{1, 2, 4});
  pc.res_x = cfg.value("res_x", 128);
  pc.res_y = cfg.value("res_y", pc.res_x);
  pc.res_z = cfg.value("res_z", (pc.res_x + 1) / 2);  // default: half of x/y
  pc.res_t = cfg.value("res_t", (f_train + 1) / 2);   // default: half the training frames
  pc.init_lo = cfg.value("init_lo", 0.9);
  pc.init_hi = cfg.value("init_hi", 1.1);

  DecoderConfig dc;
  dc.hidden = cfg.value("hidden", 64);
  dc.density_bias = cfg.value("density_bias", -8.0);

  const std::uint64_t seed =
      opt.seed >= 0 ? static_cast<std::uint64_t>(opt.seed) : cfg.value("seed", std::uint64_t{0});
  pc.seed = mix_seed(seed, 1);
  dc.seed = mix_seed(seed, 2);

  LossWeights w;
  if (mode != FieldMode::Extended) {  // the extra terms only exist in extended mode
    w.cosine_sep = 0.0;
    w.mask_bce = 0.0;
  }
  if (cfg.contains("weights")) {
    const json& wj = cfg["weights"];
    w.photometric = wj.value("photometric", w.photometric);
    w.cosine_sep = wj.value("cosine_sep", w.cosine_sep);
    w.mask_bce = wj.value("mask_bce", w.mask_bce);
    w.tv_spatial = wj.value("tv_spatial", w.tv_spatial);
    w.tv_temporal = wj.value("tv_temporal", w.tv_temporal);
  }

  TrainState state = TrainState::create(pc, dc, seed);
  const TrainResult result = train(state, ds, w, sch);
  save_checkpoint(state, opt.out);

  json echo{{"command", "train"},
            {"scene", opt.scene},
            {"mode", to_string(mode)},
            {"out", opt.out},
            {"threads", opt.threads},
            {"seed", seed},
            {"planes",
             {{"feature_dim", pc.feature_dim},
              {"multipliers", pc.multipliers},
              {"res_x", pc.res_x},
              {"res_y", pc.res_y},
              {"res_z", pc.res_z},
              {"res_t", pc.res_t},
              {"init_lo", pc.init_lo},
              {"init_hi", pc.init_hi}}},
            {"decoder", {{"hidden", dc.hidden}, {"density_bias", dc.density_bias}}},
            {"weights",
             {{"photometric", w.photometric},
              {"cosine_sep", w.cosine_sep},
              {"mask_bce", w.mask_bce},
              {"tv_spatial", w.tv_spatial},
              {"tv_temporal", w.tv_temporal}}},
            {"schedule",
             {{"iterations", sch.iterations},
              {"batch_size", sch.batch_size},
              {"samples_per_ray", sch.samples_per_ray},
              {"eval_samples_per_ray", sch.eval_samples_per_ray},
              {"stratified", sch.stratified},
              {"lr", sch.lr},
              {"lr_final_factor", sch.lr_final_factor},
              {"eval_interval", sch.eval_interval},
              {"checkpoint_interval", sch.checkpoint_interval},
              {"routing", sch.routing},
              {"background", sch.background},
              {"eval_frames", sch.eval_frames}}}};
  write_json_file(opt.out + ".run.json", echo);

  if (!result.psnr_curve.empty())
    std::cout << "final eval psnr: " << result.psnr_curve.back().psnr << " dB\n";
  std::cout << "checkpoint written: " << opt.out << "\n";
}

// ---- other subcommands ----------------------------------------------------

struct GenSceneOptions {
  std::string spec = "toy-dyn-1", out;
  int width = 64, height = 64, threads = 1;
};

void cmd_gen_scene(const GenSceneOptions& opt) {
  const SceneSpec spec = named_scene_spec(opt.spec);
  const SceneDataset ds = generate_scene(spec, opt.width, opt.height, opt.threads);
  const InstancePalette palette = palette_for_spec(spec);
  StagedDir stage(opt.out);
  save_scene(ds, stage.path());
  save_palette(palette, stage.path() / "palette.json");
  write_run_json(stage.path(), "gen-scene",
                 json{{"spec", opt.spec}, {"width", opt.width}, {"height", opt.height}});
  stage.commit();
  std::cout << "scene written: " << opt.out << " (" << ds.frame_count() << " frames)\n";
}

struct PerturbOptions {
  std::string in, out;
  double rot_sigma = 0.0, trans_sigma = 0.0;
  std::uint64_t seed = 0;
};

void cmd_perturb_poses(const PerturbOptions& opt) {
  const SceneDataset ds = load_scene(opt.in);
  const SceneDataset noisy = perturb_poses(ds, {opt.rot_sigma, opt.trans_sigma, opt.seed});
  if (opt.out.empty()) {
    save_scene_manifest(noisy, opt.in);
    std::cout << "poses perturbed in place: " << opt.in << "\n";
  } else {
    StagedDir stage(opt.out);
    save_scene(noisy, stage.path());
    write_run_json(stage.path(), "perturb-poses",
                   json{{"in", opt.in},
                        {"rot_sigma_deg", opt.rot_sigma},
                        {"trans_sigma_frac", opt.trans_sigma},
                        {"seed", opt.seed}});
    stage.commit();
    std::cout << "perturbed scene written: " << opt.out << "\n";
  }
}

struct RenderOptions {
  std::string ckpt, requests, out;
  int samples = 192, threads = 1;
};

void cmd_render(const RenderOptions& opt) {
  const TrainState state = load_checkpoint(opt.ckpt);
  const auto requests = load_requests(opt.requests);
  if (requests.empty()) throw std::invalid_argument("request list is empty");

  RenderSettings rs;
  rs.n_samples = opt.samples;
  rs.background = state.background;
  rs.threads = opt.threads;

  StagedDir stage(opt.out);
  json manifest = json::array();
  char name[64];
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const NovelViewRequest& r = requests[i];
    const ImageSet set =
        render_image(state.stack, state.decoder, state.bounds, r.pose, r.timestamp, rs);
    json entry{{"tag", r.tag}, {"time", r.timestamp}};

    std::snprintf(name, sizeof(name), "%04zu_rgb.png", i);
    write_png8((stage.path() / name).string(), set.rgb);
    entry["rgb"] = name;

    double depth_max = 0.0;
    for (float v : set.depth.data) depth_max = std::max(depth_max, static_cast<double>(v));
    Image depth_vis = set.depth;
    if (depth_max > 0.0)
      for (float& v : depth_vis.data) v = static_cast<float>(v / depth_max);
    std::snprintf(name, sizeof(name), "%04zu_depth.png", i);
    write_png16((stage.path() / name).string(), depth_vis);
    entry["depth"] = name;
    entry["depth_max"] = depth_max;

    std::snprintf(name, sizeof(name), "%04zu_acc.png", i);
    write_png16((stage.path() / name).string(), set.acc);
    entry["acc"] = name;

    if (set.mask.width > 0) {
      std::snprintf(name, sizeof(name), "%04zu_mask.png", i);
      write_png8((stage.path() / name).string(), set.mask);
      entry["mask"] = name;
    }
    manifest.push_back(std::move(entry));
  }
  write_json_file(stage.path() / "render_manifest.json", manifest);
  write_run_json(stage.path(), "render",
                 json{{"ckpt", opt.ckpt}, {"requests", opt.requests}, {"samples", opt.samples}});
  stage.commit();
  std::cout << requests.size() << " views rendered: " << opt.out << "\n";
}

struct SamplePosesOptions {
  std::string scene, out;
  bool orbit = false;
  int dynamic_n = 0;
  std::uint64_t seed = 0;
  int count = 8, interp = 0;
  std::vector<double> alt{10.0, 10.0}, radius{10.0, 10.0}, angle{45.0, 45.0}, center;
};

void cmd_sample_poses(const SamplePosesOptions& opt) {
  if (opt.orbit == (opt.dynamic_n > 0))
    throw std::invalid_argument("pass exactly one of --orbit or --dynamic N");
  const SceneDataset ds = load_scene(opt.scene);

  std::vector<NovelViewRequest> requests;
  if (opt.orbit) {
    OrbitSpec spec;
    spec.center = opt.center.size() == 3 ? Eigen::Vector3d(opt.center[0], opt.center[1], opt.center[2])
                                         : ds.bounds.center();
    spec.altitude_lo = opt.alt[0];
    spec.altitude_hi = opt.alt[1];
    spec.radius_lo = opt.radius[0];
    spec.radius_hi = opt.radius[1];
    spec.angle_lo_deg = opt.angle[0];
    spec.angle_hi_deg = opt.angle[1];
    spec.count = opt.count;
    spec.seed = opt.seed;
    spec.interp_density = opt.interp;
    spec.intrinsics = ds.frames.front().pose.intrinsics;
    requests = static_requests(sample_static_poses(spec));
  } else {
    requests = sample_dynamic_requests(ds.trajectory(), opt.dynamic_n, opt.seed);
  }
  write_file_atomic(opt.out, requests_to_json(requests).dump(2) + "\n");
  std::cout << requests.size() << " requests written: " << opt.out << "\n";
}

struct AnnotateOptions {
  std::string masks, palette, out;
  double theta = 0.3;
  int tolerance = 80, min_area = 4;
};

json boxes_to_json(const std::vector<BBoxAnnotation>& boxes) {
  json arr = json::array();
  for (const BBoxAnnotation& b : boxes)
    arr.push_back(json{{"class", b.class_id},
                       {"instance", b.instance_id},
                       {"x_min", b.x_min},
                       {"y_min", b.y_min},
                       {"x_max", b.x_max},
                       {"y_max", b.y_max},
                       {"area", b.area}});
  return arr;
}

void cmd_annotate(const AnnotateOptions& opt) {
  const InstancePalette palette = load_palette(opt.palette);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(opt.masks))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::invalid_argument("no .png files under " + opt.masks);

  StagedDir stage(opt.out);
  json all = json::object();
  for (const fs::path& f : files) {
    const Image img = read_png(f.string());
    const LabelImage labels = quantize_mask(img, palette, opt.theta, opt.tolerance);
    const auto boxes = blobs_to_boxes(connected_components(labels), palette, opt.min_area);
    all[f.filename().string()] = boxes_to_json(boxes);
  }
  write_json_file(stage.path() / "boxes.json", all);
  write_run_json(stage.path(), "annotate",
                 json{{"masks", opt.masks},
                      {"palette", opt.palette},
                      {"theta", opt.theta},
                      {"tolerance", opt.tolerance},
                      {"min_area", opt.min_area}});
  stage.commit();
  std::cout << files.size() << " mask images annotated: " << opt.out << "\n";
}

struct AugmentOptions {
  std::string scene, ckpt_im, ckpt_bbox, requests, out, palette;
  double theta = 0.3;
  int tolerance = 80, min_area = 4, samples = 192, threads = 1;
};

void cmd_augment(const AugmentOptions& opt) {
  const TrainState st_im = load_checkpoint(opt.ckpt_im);
  const TrainState st_bb = load_checkpoint(opt.ckpt_bbox);
  const auto requests = load_requests(opt.requests);
  if (requests.empty()) throw std::invalid_argument("request list is empty");
  const fs::path palette_path =
      opt.palette.empty() ? fs::path(opt.scene) / "palette.json" : fs::path(opt.palette);
  const InstancePalette palette = load_palette(palette_path);

  RenderSettings rs_im, rs_bb;
  rs_im.n_samples = rs_bb.n_samples = opt.samples;
  rs_im.threads = rs_bb.threads = opt.threads;
  rs_im.background = st_im.background;
  rs_bb.background = st_bb.background;

  std::vector<DetectionEntry> entries;
  std::vector<Image> images;
  char name[64];
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const NovelViewRequest& r = requests[i];
    const ImageSet view =
        render_image(st_im.stack, st_im.decoder, st_im.bounds, r.pose, r.timestamp, rs_im);
    const ImageSet boxes_view =
        render_image(st_bb.stack, st_bb.decoder, st_bb.bounds, r.pose, r.timestamp, rs_bb);
    const LabelImage labels = quantize_mask(boxes_view.rgb, palette, opt.theta, opt.tolerance);
    const auto boxes = blobs_to_boxes(connected_components(labels), palette, opt.min_area);

    DetectionEntry entry;
    std::snprintf(name, sizeof(name), "img_%04zu.png", i);
    entry.image_name = name;
    entry.source = "synthetic";
    for (const BBoxAnnotation& b : boxes)
      entry.records.push_back(to_detection_record(b, view.rgb.width, view.rgb.height));
    entries.push_back(std::move(entry));
    images.push_back(view.rgb);
  }

  StagedDir stage(opt.out);
  export_detection(entries, images, stage.path());
  write_run_json(stage.path(), "augment",
                 json{{"scene", opt.scene},
                      {"ckpt_im", opt.ckpt_im},
                      {"ckpt_bbox", opt.ckpt_bbox},
                      {"requests", opt.requests},
                      {"palette", palette_path.string()},
                      {"theta", opt.theta},
                      {"tolerance", opt.tolerance},
                      {"min_area", opt.min_area},
                      {"samples", opt.samples}});
  stage.commit();
  std::cout << entries.size() << " synthetic detection images written: " << opt.out << "\n";
}

struct EvalPsnrOptions {
  std::string ckpt, scene;
  std::vector<int> frames;
  int samples = 192, threads = 1;
};

void cmd_eval_psnr(const EvalPsnrOptions& opt) {
  const TrainState state = load_checkpoint(opt.ckpt);
  const SceneDataset ds = load_scene(opt.scene);
  std::vector<int> frames = opt.frames;
  if (frames.empty())
    for (int i = 0; i < ds.frame_count(); ++i) frames.push_back(i);
  for (int i : frames)
    if (i < 0 || i >= ds.frame_count())
      throw std::invalid_argument("frame index out of range: " + std::to_string(i));

  RenderSettings rs;
  rs.n_samples = opt.samples;
  rs.background = state.background;
  rs.threads = opt.threads;

  std::printf("%-8s %s\n", "frame", "psnr_db");
  double sum = 0.0;
  for (int i : frames) {
    const ImageSet set = render_image(state.stack, state.decoder, state.bounds,
                                      ds.frames[i].pose, ds.frames[i].time, rs);
    const double value = psnr(set.rgb, ds.images[i]);
    sum += value;
    std::printf("%-8d %.4f\n", i, value);
  }
  std::printf("%-8s %.4f\n", "mean", sum / frames.size());
}

struct MergeOptions {
  std::string real, synthetic, out;
};

void cmd_merge(const MergeOptions& opt) {
  StagedDir stage(opt.out);
  assemble_hybrid(opt.real, opt.synthetic, stage.path());
  write_run_json(stage.path(), "merge", json{{"real", opt.real}, {"synthetic", opt.synthetic}});
  stage.commit();
  std::cout << "hybrid detection set written: " << opt.out << "\n";
}

struct BuildMasksOptions {
  std::string scene, palette, out;
};

void cmd_build_masks(const BuildMasksOptions& opt) {
  const SceneDataset ds = load_scene(opt.scene);
  const fs::path palette_path =
      opt.palette.empty() ? fs::path(opt.scene) / "palette.json" : fs::path(opt.palette);
  const InstancePalette palette = load_palette(palette_path);
  const SceneDataset masks = build_mask_images(ds, palette);
  StagedDir stage(opt.out);
  save_scene(masks, stage.path());
  save_palette(palette, stage.path() / "palette.json");
  write_run_json(stage.path(), "build-masks",
                 json{{"scene", opt.scene}, {"palette", palette_path.string()}});
  stage.commit();
  std::cout << "box-mask scene written: " << opt.out << "\n";
}

}  // namespace

json palette_to_json(const InstancePalette& palette) {
  json arr = json::array();
  for (const PaletteEntry& e : palette.entries)
    arr.push_back(json{{"instance", e.instance_id},
                       {"class", e.class_id},
                       {"color", {e.color[0], e.color[1], e.color[2]}}});
  return arr;
}

InstancePalette palette_from_json(const json& j) {
  if (!j.is_array()) throw std::runtime_error("palette must be a JSON array");
  InstancePalette palette;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& ej = j[i];
    PaletteEntry e;
    e.instance_id = ej.at("instance").get<int>();
    e.class_id = ej.at("class").get<int>();
    const auto color = ej.at("color").get<std::vector<int>>();
    if (color.size() != 3)
      throw std::runtime_error("palette entry " + std::to_string(i) + ": color needs 3 values");
    for (int c = 0; c < 3; ++c) {
      if (color[c] < 0 || color[c] > 255)
        throw std::runtime_error("palette entry " + std::to_string(i) + ": color out of range");
      e.color[c] = static_cast<uint8_t>(color[c]);
    }
    palette.entries.push_back(e);
  }
  palette.validate();
  return palette;
}

void save_palette(const InstancePalette& palette, const fs::path& path) {
  write_json_file(path, palette_to_json(palette));
}

InstancePalette load_palette(const fs::path& path) {
  try {
    return palette_from_json(read_json_file(path));
  } catch (const std::exception& e) {
    throw std::runtime_error("palette " + path.string() + ": " + e.what());
  }
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"planerf: multi-plane radiance fields for UAV-style scenes — training, novel-view "
               "rendering, self-annotation, and detection-dataset synthesis"};
  app.require_subcommand(1);

  GenSceneOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-scene", "Generate a synthetic posed scene dataset");
  gen_cmd->add_option("--spec", gen.spec, "Built-in scene spec name")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output scene directory")->required();
  gen_cmd->add_option("--width", gen.width, "Image width")->capture_default_str();
  gen_cmd->add_option("--height", gen.height, "Image height")->capture_default_str();
  gen_cmd->add_option("--threads", gen.threads, "Worker threads")->capture_default_str();
  gen_cmd->callback([&] { cmd_gen_scene(gen); });

  PerturbOptions perturb;
  auto* perturb_cmd =
      app.add_subcommand("perturb-poses", "Add seeded noise to every camera pose of a scene");
  perturb_cmd->add_option("--in", perturb.in, "Scene directory to perturb")->required();
  perturb_cmd->add_option("--rot-sigma", perturb.rot_sigma, "Rotation noise sigma (degrees)")
      ->capture_default_str();
  perturb_cmd
      ->add_option("--trans-sigma", perturb.trans_sigma,
                   "Translation noise sigma (fraction of the scene diagonal)")
      ->capture_default_str();
  perturb_cmd->add_option("--seed", perturb.seed, "Noise seed")->capture_default_str();
  perturb_cmd->add_option("--out", perturb.out,
                          "Write a perturbed copy here instead of rewriting in place");
  perturb_cmd->callback([&] { cmd_perturb_poses(perturb); });

  TrainCliOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a plane field on a scene");
  train_cmd->add_option("--scene", train.scene, "Scene directory")->required();
  train_cmd->add_option("--mode", train.mode, "Field mode: stock | extended | spatial-only")
      ->capture_default_str();
  train_cmd->add_option("--config", train.config, "Run config JSON (defaults applied per key)");
  train_cmd->add_option("--out", train.out, "Checkpoint output path")->required();
  train_cmd->add_option("--iterations", train.iterations, "Override config iterations");
  train_cmd->add_option("--seed", train.seed, "Override config seed");
  train_cmd->add_option("--threads", train.threads, "Worker threads")->capture_default_str();
  train_cmd->callback([&] { cmd_train(train); });

  RenderOptions render;
  auto* render_cmd =
      app.add_subcommand("render", "Render novel-view requests from a checkpoint");
  render_cmd->add_option("--ckpt", render.ckpt, "Checkpoint path")->required();
  render_cmd->add_option("--requests", render.requests, "Request list JSON")->required();
  render_cmd->add_option("--out", render.out, "Output directory")->required();
  render_cmd->add_option("--samples", render.samples, "Quadrature samples per ray")
      ->capture_default_str();
  render_cmd->add_option("--threads", render.threads, "Worker threads")->capture_default_str();
  render_cmd->callback([&] { cmd_render(render); });

  SamplePosesOptions sample;
  auto* sample_cmd = app.add_subcommand("sample-poses", "Sample novel-view requests for a scene");
  sample_cmd->add_option("--scene", sample.scene, "Scene directory")->required();
  sample_cmd->add_option("--out", sample.out, "Request list output path")->required();
  sample_cmd->add_flag("--orbit", sample.orbit, "Sample a randomized static orbit");
  sample_cmd->add_option("--dynamic", sample.dynamic_n,
                         "Sample N trajectory locations, 3 requests each");
  sample_cmd->add_option("--seed", sample.seed, "Sampling seed")->capture_default_str();
  sample_cmd->add_option("--count", sample.count, "Orbit: number of poses")->capture_default_str();
  sample_cmd->add_option("--interp", sample.interp, "Orbit: interpolated poses between waypoints")
      ->capture_default_str();
  sample_cmd->add_option("--alt", sample.alt, "Orbit: altitude range lo hi (meters)")
      ->expected(2)
      ->capture_default_str();
  sample_cmd->add_option("--radius", sample.radius, "Orbit: radius range lo hi (meters)")
      ->expected(2)
      ->capture_default_str();
  sample_cmd->add_option("--angle", sample.angle, "Orbit: view angle range lo hi (degrees)")
      ->expected(2)
      ->capture_default_str();
  sample_cmd->add_option("--center", sample.center,
                         "Orbit: look-at center x y z (default: bounds center)")
      ->expected(3);
  sample_cmd->callback([&] { cmd_sample_poses(sample); });

  AnnotateOptions annotate;
  auto* annotate_cmd =
      app.add_subcommand("annotate", "Extract instance boxes from rendered mask images");
  annotate_cmd->add_option("--masks", annotate.masks, "Directory of mask PNGs")->required();
  annotate_cmd->add_option("--palette", annotate.palette, "Palette JSON path")->required();
  annotate_cmd->add_option("--out", annotate.out, "Output directory")->required();
  annotate_cmd->add_option("--theta", annotate.theta, "Foreground intensity threshold")
      ->capture_default_str();
  annotate_cmd->add_option("--tolerance", annotate.tolerance, "Color match tolerance (8-bit)")
      ->capture_default_str();
  annotate_cmd->add_option("--min-area", annotate.min_area, "Minimum blob area (pixels)")
      ->capture_default_str();
  annotate_cmd->callback([&] { cmd_annotate(annotate); });

  AugmentOptions augment;
  auto* augment_cmd = app.add_subcommand(
      "augment", "Render novel views from both fields and export a synthetic detection set");
  augment_cmd->add_option("--scene", augment.scene, "Scene directory (palette source)")
      ->required();
  augment_cmd->add_option("--ckpt-im", augment.ckpt_im, "Image-field checkpoint")->required();
  augment_cmd->add_option("--ckpt-bbox", augment.ckpt_bbox, "Box-mask-field checkpoint")
      ->required();
  augment_cmd->add_option("--requests", augment.requests, "Request list JSON")->required();
  augment_cmd->add_option("--out", augment.out, "Output detection directory")->required();
  augment_cmd->add_option("--palette", augment.palette, "Palette JSON (default: scene palette)");
  augment_cmd->add_option("--theta", augment.theta, "Foreground intensity threshold")
      ->capture_default_str();
  augment_cmd->add_option("--tolerance", augment.tolerance, "Color match tolerance (8-bit)")
      ->capture_default_str();
  augment_cmd->add_option("--min-area", augment.min_area, "Minimum blob area (pixels)")
      ->capture_default_str();
  augment_cmd->add_option("--samples", augment.samples, "Quadrature samples per ray")
      ->capture_default_str();
  augment_cmd->add_option("--threads", augment.threads, "Worker threads")->capture_default_str();
  augment_cmd->callback([&] { cmd_augment(augment); });

  EvalPsnrOptions eval;
  auto* eval_cmd =
      app.add_subcommand("eval-psnr", "Per-frame PSNR of checkpoint renders against a scene");
  eval_cmd->add_option("--ckpt", eval.ckpt, "Checkpoint path")->required();
  eval_cmd->add_option("--scene", eval.scene, "Scene directory")->required();
  eval_cmd->add_option("--frames", eval.frames, "Frame indices (default: all)");
  eval_cmd->add_option("--samples", eval.samples, "Quadrature samples per ray")
      ->capture_default_str();
  eval_cmd->add_option("--threads", eval.threads, "Worker threads")->capture_default_str();
  eval_cmd->callback([&] { cmd_eval_psnr(eval); });

  MergeOptions merge;
  auto* merge_cmd =
      app.add_subcommand("merge", "Merge real and synthetic detection sets into a hybrid set");
  merge_cmd->add_option("--real", merge.real, "Real detection directory")->required();
  merge_cmd->add_option("--synthetic", merge.synthetic, "Synthetic detection directory")
      ->required();
  merge_cmd->add_option("--out", merge.out, "Output directory")->required();
  merge_cmd->callback([&] { cmd_merge(merge); });

  BuildMasksOptions masks;
  auto* masks_cmd = app.add_subcommand(
      "build-masks", "Derive the box-mask training scene (colored boxes on black)");
  masks_cmd->add_option("--scene", masks.scene, "Scene directory")->required();
  masks_cmd->add_option("--palette", masks.palette, "Palette JSON (default: scene palette)");
  masks_cmd->add_option("--out", masks.out, "Output scene directory")->required();
  masks_cmd->callback([&] { cmd_build_masks(masks); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace planerf
