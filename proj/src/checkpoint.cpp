// Copyright (c) 2026 planerf contributors
// SPDX-License-Identifier: Apache-2.0
#include "planerf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace planerf {

// The container stores raw float32 sections; this code assumes (and the
// format mandates) little-endian byte order.
static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization requires a little-endian host");

namespace {

constexpr char kMagic[8] = {'P', 'L', 'N', 'R', 'F', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

void append_u32(std::string& out, uint32_t v) { out.append(reinterpret_cast<char*>(&v), 4); }
void append_u64(std::string& out, uint64_t v) { out.append(reinterpret_cast<char*>(&v), 8); }

void append_section(std::string& out, const std::string& name, const void* data,
                    std::size_t bytes) {
  append_u32(out, static_cast<uint32_t>(name.size()));
  out.append(name);
  append_u64(out, bytes);
  out.append(static_cast<const char*>(data), bytes);
}

std::string collect_floats(const std::vector<ParamSpan>& spans, const char* prefix) {
  std::string out;
  for (const ParamSpan& s : spans) {
    if (s.name.rfind(prefix, 0) != 0) continue;
    out.append(reinterpret_cast<const char*>(s.data), s.size * sizeof(float));
  }
  return out;
}

void restore_floats(const std::vector<ParamSpan>& spans, const char* prefix,
                    const std::string& bytes, const std::string& section) {
  std::size_t need = 0;
  for (const ParamSpan& s : spans)
    if (s.name.rfind(prefix, 0) == 0) need += s.size * sizeof(float);
  if (bytes.size() != need)
    throw std::runtime_error("checkpoint section '" + section + "' size mismatch: expected " +
                             std::to_string(need) + " bytes, found " +
                             std::to_string(bytes.size()));
  std::size_t off = 0;
  for (const ParamSpan& s : spans) {
    if (s.name.rfind(prefix, 0) != 0) continue;
    std::memcpy(s.data, bytes.data() + off, s.size * sizeof(float));
    off += s.size * sizeof(float);
  }
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  auto& mut = const_cast<TrainState&>(state);  // spans need mutable views; values untouched
  const auto spans = param_spans(mut.stack, mut.decoder);

  const PlaneStackConfig& pc = state.stack.config;
  const DecoderConfig& dc = state.decoder.config;
  nlohmann::json meta{
      {"mode", to_string(pc.mode)},
      {"planes",
       {{"res_x", pc.res_x},
        {"res_y", pc.res_y},
        {"res_z", pc.res_z},
        {"res_t", pc.res_t},
        {"multipliers", pc.multipliers},
        {"feature_dim", pc.feature_dim},
        {"seed", pc.seed},
        {"init_lo", pc.init_lo},
        {"init_hi", pc.init_hi}}},
      {"decoder",
       {{"hidden", dc.hidden}, {"seed", dc.seed}, {"density_bias", dc.density_bias}}},
      {"bounds",
       {{"min", {state.bounds.min[0], state.bounds.min[1], state.bounds.min[2]}},
        {"max", {state.bounds.max[0], state.bounds.max[1], state.bounds.max[2]}}}},
      {"background", state.background},
      {"step", state.step},
      {"train_seed", state.seed}};
  const std::string meta_str = meta.dump();

  std::string body;
  body.append(kMagic, sizeof(kMagic));
  append_u32(body, kVersion);
  append_u32(body, 5);  // section count
  append_section(body, "meta", meta_str.data(), meta_str.size());
  const std::string planes = collect_floats(spans, "planes.");
  append_section(body, "planes", planes.data(), planes.size());
  const std::string decoder = collect_floats(spans, "decoder.");
  append_section(body, "decoder", decoder.data(), decoder.size());
  append_section(body, "adam_m", state.adam_m.data(), state.adam_m.size() * sizeof(float));
  append_section(body, "adam_v", state.adam_v.data(), state.adam_v.size() * sizeof(float));

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + tmp.string());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw std::runtime_error("checkpoint write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());

  auto read_exact = [&](void* dst, std::size_t n, const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw std::runtime_error("truncated checkpoint (while reading " + std::string(what) +
                               "): " + path.string());
  };

  char magic[8];
  read_exact(magic, 8, "magic");
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  uint32_t version = 0, n_sections = 0;
  read_exact(&version, 4, "version");
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                             " (expected " + std::to_string(kVersion) + "): " + path.string());
  read_exact(&n_sections, 4, "section count");
  if (n_sections > 64) throw std::runtime_error("implausible section count: " + path.string());

  std::map<std::string, std::string> sections;
  for (uint32_t i = 0; i < n_sections; ++i) {
    uint32_t name_len = 0;
    read_exact(&name_len, 4, "section name length");
    if (name_len > 256) throw std::runtime_error("implausible section name: " + path.string());
    std::string name(name_len, '\0');
    read_exact(name.data(), name_len, "section name");
    uint64_t payload = 0;
    read_exact(&payload, 8, "section size");
    if (payload > (1ULL << 40)) throw std::runtime_error("implausible section: " + path.string());
    std::string bytes(static_cast<std::size_t>(payload), '\0');
    read_exact(bytes.data(), bytes.size(), name.c_str());
    sections.emplace(std::move(name), std::move(bytes));
  }
  for (const char* need : {"meta", "planes", "decoder", "adam_m", "adam_v"})
    if (!sections.count(need))
      throw std::runtime_error("checkpoint missing section '" + std::string(need) +
                               "': " + path.string());

  const nlohmann::json meta = nlohmann::json::parse(sections["meta"]);
  PlaneStackConfig pc;
  pc.mode = field_mode_from_string(meta.at("mode").get<std::string>());
  const auto& pj = meta.at("planes");
  pc.res_x = pj.at("res_x").get<int>();
  pc.res_y = pj.at("res_y").get<int>();
  pc.res_z = pj.at("res_z").get<int>();
  pc.res_t = pj.at("res_t").get<int>();
  pc.multipliers = pj.at("multipliers").get<std::vector<int>>();
  pc.feature_dim = pj.at("feature_dim").get<int>();
  pc.seed = pj.at("seed").get<uint64_t>();
  pc.init_lo = pj.at("init_lo").get<double>();
  pc.init_hi = pj.at("init_hi").get<double>();
  DecoderConfig dc;
  const auto& dj = meta.at("decoder");
  dc.hidden = dj.at("hidden").get<int>();
  dc.seed = dj.at("seed").get<uint64_t>();
  dc.density_bias = dj.at("density_bias").get<double>();

  TrainState state = TrainState::create(pc, dc, meta.at("train_seed").get<uint64_t>());
  state.step = meta.at("step").get<int64_t>();
  const auto bmin = meta.at("bounds").at("min").get<std::vector<double>>();
  const auto bmax = meta.at("bounds").at("max").get<std::vector<double>>();
  if (bmin.size() != 3 || bmax.size() != 3)
    throw std::runtime_error("checkpoint bounds must hold 3 numbers each: " + path.string());
  state.bounds.min = Eigen::Vector3d(bmin[0], bmin[1], bmin[2]);
  state.bounds.max = Eigen::Vector3d(bmax[0], bmax[1], bmax[2]);
  state.background = meta.at("background").get<std::array<double, 3>>();

  const auto spans = param_spans(state.stack, state.decoder);
  restore_floats(spans, "planes.", sections["planes"], "planes");
  restore_floats(spans, "decoder.", sections["decoder"], "decoder");
  const std::string& am = sections["adam_m"];
  const std::string& av = sections["adam_v"];
  if (am.size() != state.adam_m.size() * sizeof(float) ||
      av.size() != state.adam_v.size() * sizeof(float))
    throw std::runtime_error("checkpoint moment sections size mismatch: " + path.string());
  std::memcpy(state.adam_m.data(), am.data(), am.size());
  std::memcpy(state.adam_v.data(), av.data(), av.size());
  return state;
}

}  // namespace planerf
