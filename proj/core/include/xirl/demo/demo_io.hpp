#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xirl/demo/demo.hpp"

namespace xirl::demo {

std::vector<std::uint8_t> encode_demo(const Demonstration& demo);
/// `source` names the file in error messages.
Demonstration decode_demo(std::span<const std::uint8_t> bytes, const std::string& source);

void save_demo(const Demonstration& demo, const std::string& path);
Demonstration load_demo(const std::string& path);

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text, const std::string& source);

/// Writes `<root>/manifest.json` and `<root>/<embodiment>/<index>.xmdm`.
/// Embodiments already present under `root` but absent from `set` are kept and
/// merged into the manifest.
void save_demo_set(const DemoSet& set, const std::string& root);

/// Loads every embodiment listed in the manifest. Throws ConsistencyError when
/// the files on disk disagree with the manifest.
DemoSet load_demo_set(const std::string& root);

/// Path of demo `index` of `embodiment` under `root`.
std::string demo_path(const std::string& root, env::Embodiment embodiment, int index);

}  // namespace xirl::demo
