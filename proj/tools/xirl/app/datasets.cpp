#include "app/datasets.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "xirl/common/errors.hpp"
#include "xirl/demo/demo_io.hpp"

namespace xirl::app {

namespace fs = std::filesystem;

std::vector<env::Embodiment> VideoCollection::embodiments() const {
  std::set<env::Embodiment> s;
  for (const auto& d : demos) s.insert(d.embodiment);
  return {s.begin(), s.end()};
}

std::vector<env::Embodiment> VideoCollection::labels() const {
  std::vector<env::Embodiment> out;
  out.reserve(demos.size());
  for (const auto& d : demos) out.push_back(d.embodiment);
  return out;
}

std::vector<env::Embodiment> parse_embodiment_list(const std::vector<std::string>& names) {
  std::vector<env::Embodiment> out;
  for (const auto& n : names) {
    if (n == "all") {
      out.assign(env::kAllEmbodiments.begin(), env::kAllEmbodiments.end());
      continue;
    }
    const auto e = env::parse_embodiment(n);
    if (!e) throw ConfigError("unknown embodiment '" + n + "'");
    if (std::find(out.begin(), out.end(), *e) == out.end()) out.push_back(*e);
  }
  return out;
}

VideoCollection load_videos(const std::vector<std::string>& args, const std::vector<env::Embodiment>& only) {
  // root -> embodiments requested from it (empty = all)
  std::map<std::string, std::set<env::Embodiment>> wanted;
  std::vector<std::string> order;
  for (const auto& arg : args) {
    fs::path p(arg);
    std::optional<env::Embodiment> emb;
    if (!fs::exists(p / "manifest.json")) {
      const auto parent = p.lexically_normal().parent_path();
      emb = env::parse_embodiment(p.lexically_normal().filename().string());
      if (!emb || !fs::exists(parent / "manifest.json")) {
        throw ConfigError("'" + arg + "' is neither a dataset root nor <root>/<embodiment>");
      }
      p = parent;
    }
    const std::string root = p.string();
    if (!wanted.contains(root)) order.push_back(root);
    auto& set = wanted[root];
    if (emb) {
      set.insert(*emb);
    } else {
      set.insert(env::kAllEmbodiments.begin(), env::kAllEmbodiments.end());
    }
  }

  VideoCollection out;
  for (const auto& root : order) {
    const demo::DemoSet ds = demo::load_demo_set(root);
    out.roots.push_back(root);
    for (const auto& entry : ds.manifest.entries) {
      if (!wanted[root].contains(entry.embodiment)) continue;
      if (!only.empty() && std::find(only.begin(), only.end(), entry.embodiment) == only.end()) continue;
      auto demos = ds.of(entry.embodiment);
      for (std::size_t i = 0; i < demos.size(); ++i) {
        out.demos.push_back(std::move(demos[i]));
        out.episode_seeds.push_back(entry.episode_seeds.at(i));
        out.indices.push_back(static_cast<int>(i));
      }
    }
  }
  if (out.demos.empty()) throw ConfigError("no demonstrations selected");
  return out;
}

}  // namespace xirl::app
