#include "xirl/demo/demo.hpp"

#include "xirl/common/errors.hpp"

namespace xirl::demo {

void Demonstration::validate() const {
  const auto n = rewards.size();
  if (states.size() != n || actions.size() != n || grids.size() != n * frame_bytes()) {
    throw ConsistencyError("demonstration: per-frame arrays disagree in length");
  }
}

std::vector<VideoView> views(std::span<const Demonstration> demos) {
  std::vector<VideoView> out;
  out.reserve(demos.size());
  for (const auto& d : demos) out.emplace_back(d);
  return out;
}

std::vector<Demonstration> DemoSet::of(env::Embodiment e) const {
  std::vector<Demonstration> out;
  for (const auto& d : demos) {
    if (d.embodiment == e) out.push_back(d);
  }
  return out;
}

}  // namespace xirl::demo
