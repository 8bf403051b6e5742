#include "xirl/demo/demo_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "xirl/common/bytes.hpp"
#include "xirl/common/crc32.hpp"
#include "xirl/common/errors.hpp"

namespace xirl::demo {
namespace {

namespace fs = std::filesystem;
constexpr char kMagic[] = "XMDM";
constexpr int kMaxGrid = 1024;

}  // namespace

std::vector<std::uint8_t> encode_demo(const Demonstration& demo) {
  demo.validate();
  ByteWriter w;
  w.text(kMagic);
  w.u16(kDemoFormatVersion);
  w.u8(static_cast<std::uint8_t>(demo.embodiment));
  w.u32(static_cast<std::uint32_t>(demo.length()));
  w.u16(static_cast<std::uint16_t>(demo.grid_size));
  w.u8(static_cast<std::uint8_t>(env::kChannels));
  for (int k = 0; k < demo.length(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    w.raw(demo.grid(k));
    for (float v : demo.states[i]) w.f32(v);
    for (float v : demo.actions[i]) w.f32(v);
    w.f32(demo.rewards[i]);
  }
  const std::uint32_t crc = crc32(w.bytes());
  w.u32(crc);
  return w.take();
}

Demonstration decode_demo(std::span<const std::uint8_t> bytes, const std::string& source) {
  ByteReader r(bytes, source);
  if (r.text(4) != kMagic) r.fail("bad magic");
  const auto version = r.u16();
  if (version != kDemoFormatVersion) r.fail("unsupported version " + std::to_string(version));
  Demonstration d;
  const auto emb = r.u8();
  if (emb > static_cast<std::uint8_t>(env::Embodiment::kGripper)) r.fail("unknown embodiment id");
  d.embodiment = static_cast<env::Embodiment>(emb);
  const auto length = r.u32();
  d.grid_size = r.u16();
  const auto channels = r.u8();
  if (d.grid_size < 16 || d.grid_size > kMaxGrid) r.fail("grid size out of range");
  if (channels != env::kChannels) r.fail("unexpected channel count");
  if (length < 2) r.fail("demo shorter than 2 frames");
  const std::size_t record = d.frame_bytes() + 4 * (env::kStateDim + kActionSlots + 1);
  // Check the declared length against the payload before allocating.
  if (record * length + 4 > r.remaining()) r.fail("truncated: declared length " + std::to_string(length));
  if (record * length + 4 < r.remaining()) r.fail("trailing bytes after frames");
  const std::uint32_t expected = crc32(bytes.first(bytes.size() - 4));

  d.grids.reserve(d.frame_bytes() * length);
  d.states.resize(length);
  d.actions.resize(length);
  d.rewards.resize(length);
  for (std::uint32_t k = 0; k < length; ++k) {
    auto g = r.raw(d.frame_bytes());
    d.grids.insert(d.grids.end(), g.begin(), g.end());
    for (auto& v : d.states[k]) v = r.f32();
    for (auto& v : d.actions[k]) v = r.f32();
    d.rewards[k] = r.f32();
  }
  if (r.u32() != expected) throw FormatError(source + ": checksum mismatch");
  return d;
}

void save_demo(const Demonstration& demo, const std::string& path) { write_file_bytes(path, encode_demo(demo)); }

Demonstration load_demo(const std::string& path) { return decode_demo(read_file_bytes(path), path); }

std::string manifest_to_json(const Manifest& m) {
  nlohmann::json j;
  j["task"] = m.task;
  j["format_version"] = m.format_version;
  j["grid_size"] = m.grid_size;
  j["embodiments"] = nlohmann::json::array();
  for (const auto& e : m.entries) {
    j["embodiments"].push_back({{"embodiment", std::string(env::name(e.embodiment))},
                                {"count", e.count},
                                {"seed", e.seed},
                                {"attempts", e.attempts},
                                {"episode_seeds", e.episode_seeds}});
  }
  return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text, const std::string& source) {
  Manifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.task = j.at("task").get<std::string>();
    m.format_version = j.at("format_version").get<int>();
    m.grid_size = j.at("grid_size").get<int>();
    for (const auto& e : j.at("embodiments")) {
      EmbodimentEntry entry;
      const auto emb = env::parse_embodiment(e.at("embodiment").get<std::string>());
      if (!emb) throw FormatError(source + ": unknown embodiment " + e.at("embodiment").dump());
      entry.embodiment = *emb;
      entry.count = e.at("count").get<int>();
      entry.seed = e.at("seed").get<std::uint64_t>();
      entry.attempts = e.at("attempts").get<int>();
      entry.episode_seeds = e.at("episode_seeds").get<std::vector<std::uint64_t>>();
      m.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(source + ": " + ex.what());
  }
  if (m.format_version != kDemoFormatVersion) {
    throw FormatError(source + ": unsupported format version " + std::to_string(m.format_version));
  }
  for (const auto& e : m.entries) {
    if (e.count < 0 || static_cast<std::size_t>(e.count) != e.episode_seeds.size()) {
      throw ConsistencyError(source + ": count does not match episode seeds for " + std::string(env::name(e.embodiment)));
    }
  }
  return m;
}

std::string demo_path(const std::string& root, env::Embodiment embodiment, int index) {
  char file[32];
  std::snprintf(file, sizeof(file), "%06d.xmdm", index);
  return (fs::path(root) / std::string(env::name(embodiment)) / file).string();
}

void save_demo_set(const DemoSet& set, const std::string& root) {
  Manifest merged = set.manifest;
  const fs::path manifest_path = fs::path(root) / "manifest.json";
  if (fs::exists(manifest_path)) {
    const auto bytes = read_file_bytes(manifest_path.string());
    const Manifest existing = manifest_from_json(std::string(bytes.begin(), bytes.end()), manifest_path.string());
    if (existing.grid_size != merged.grid_size) {
      throw ConsistencyError(manifest_path.string() + ": grid size differs from the set being saved");
    }
    for (const auto& e : existing.entries) {
      const bool replaced = std::any_of(merged.entries.begin(), merged.entries.end(),
                                        [&](const EmbodimentEntry& n) { return n.embodiment == e.embodiment; });
      if (!replaced) merged.entries.push_back(e);
    }
  }
  std::sort(merged.entries.begin(), merged.entries.end(),
            [](const auto& a, const auto& b) { return a.embodiment < b.embodiment; });

  for (const auto& entry : set.manifest.entries) {
    const fs::path dir = fs::path(root) / std::string(env::name(entry.embodiment));
    fs::remove_all(dir);
    fs::create_directories(dir);
    int index = 0;
    for (const auto& d : set.demos) {
      if (d.embodiment != entry.embodiment) continue;
      save_demo(d, demo_path(root, entry.embodiment, index++));
    }
    if (index != entry.count) {
      throw ConsistencyError("save_demo_set: manifest count for " + std::string(env::name(entry.embodiment)) +
                             " does not match the demos supplied");
    }
  }
  const std::string text = manifest_to_json(merged);
  write_file_bytes(manifest_path.string(), {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

DemoSet load_demo_set(const std::string& root) {
  const fs::path manifest_path = fs::path(root) / "manifest.json";
  if (!fs::exists(manifest_path)) throw ConsistencyError(manifest_path.string() + ": missing manifest");
  const auto bytes = read_file_bytes(manifest_path.string());
  DemoSet set;
  set.manifest = manifest_from_json(std::string(bytes.begin(), bytes.end()), manifest_path.string());
  for (const auto& entry : set.manifest.entries) {
    const fs::path dir = fs::path(root) / std::string(env::name(entry.embodiment));
    int on_disk = 0;
    if (fs::is_directory(dir)) {
      for (const auto& f : fs::directory_iterator(dir)) on_disk += f.path().extension() == ".xmdm" ? 1 : 0;
    }
    if (on_disk != entry.count) {
      throw ConsistencyError(dir.string() + ": manifest lists " + std::to_string(entry.count) + " demos, found " +
                             std::to_string(on_disk));
    }
    for (int i = 0; i < entry.count; ++i) {
      const std::string path = demo_path(root, entry.embodiment, i);
      if (!fs::exists(path)) throw ConsistencyError(path + ": listed in manifest but missing");
      Demonstration d = load_demo(path);
      if (d.embodiment != entry.embodiment) throw ConsistencyError(path + ": embodiment differs from its directory");
      if (d.grid_size != set.manifest.grid_size) throw ConsistencyError(path + ": grid size differs from manifest");
      if (!d.success()) throw ConsistencyError(path + ": stored demo is not successful");
      set.demos.push_back(std::move(d));
    }
  }
  return set;
}

}  // namespace xirl::demo
