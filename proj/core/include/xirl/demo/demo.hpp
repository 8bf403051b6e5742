#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xirl/env/embodiment.hpp"
#include "xirl/env/render.hpp"
#include "xirl/env/sweep_env.hpp"

namespace xirl::demo {

inline constexpr std::uint16_t kDemoFormatVersion = 1;
inline constexpr int kActionSlots = 3;

/// One recorded episode. Frame k is the observation before action k; the last
/// frame carries a zero action. rewards[k] is the in-zone fraction at frame k.
struct Demonstration {
  env::Embodiment embodiment = env::Embodiment::kLongstick;
  int grid_size = env::kDefaultGrid;
  std::vector<std::uint8_t> grids;  // length * G * G * 3
  std::vector<std::array<float, env::kStateDim>> states;
  std::vector<std::array<float, kActionSlots>> actions;
  std::vector<float> rewards;

  [[nodiscard]] int length() const { return static_cast<int>(rewards.size()); }
  [[nodiscard]] std::size_t frame_bytes() const {
    return static_cast<std::size_t>(grid_size) * static_cast<std::size_t>(grid_size) * env::kChannels;
  }
  [[nodiscard]] std::span<const std::uint8_t> grid(int k) const {
    return {grids.data() + static_cast<std::size_t>(k) * frame_bytes(), frame_bytes()};
  }
  [[nodiscard]] bool success() const { return !rewards.empty() && rewards.back() == 1.0f; }
  /// Throws ConsistencyError when the per-frame arrays disagree in length.
  void validate() const;

  bool operator==(const Demonstration&) const = default;
};

/// Frames of a demonstration without its actions. Representation learning
/// only ever receives this view.
class VideoView {
 public:
  explicit VideoView(const Demonstration& demo) : demo_(&demo) {}

  [[nodiscard]] env::Embodiment embodiment() const { return demo_->embodiment; }
  [[nodiscard]] int length() const { return demo_->length(); }
  [[nodiscard]] int grid_size() const { return demo_->grid_size; }
  [[nodiscard]] std::span<const std::uint8_t> frame(int k) const { return demo_->grid(k); }
  /// Environment reward per frame, used only for evaluation plots.
  [[nodiscard]] float env_reward(int k) const { return demo_->rewards[static_cast<std::size_t>(k)]; }

 private:
  const Demonstration* demo_;
};

std::vector<VideoView> views(std::span<const Demonstration> demos);

struct EmbodimentEntry {
  env::Embodiment embodiment = env::Embodiment::kLongstick;
  int count = 0;
  std::uint64_t seed = 0;
  int attempts = 0;
  std::vector<std::uint64_t> episode_seeds;

  bool operator==(const EmbodimentEntry&) const = default;
};

struct Manifest {
  std::string task = "sweep_to_top";
  int format_version = kDemoFormatVersion;
  int grid_size = env::kDefaultGrid;
  std::vector<EmbodimentEntry> entries;  // sorted by embodiment id

  bool operator==(const Manifest&) const = default;
};

struct DemoSet {
  Manifest manifest;
  std::vector<Demonstration> demos;  // grouped in manifest entry order

  /// Demos of one embodiment, in index order.
  [[nodiscard]] std::vector<Demonstration> of(env::Embodiment e) const;
};

}  // namespace xirl::demo
