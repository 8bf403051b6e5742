#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "xirl/diffcore/mlp.hpp"
#include "xirl/diffcore/tensor.hpp"

namespace xirl::diff {

/// Named tensors plus a JSON metadata document.
///
/// On disk (little-endian):
///   "XCKP" | u16 version | u32 tensor count
///   per tensor: u16 name length | UTF-8 name | u32 rank | rank x u32 dims | f32 payload
///   u32 metadata length | UTF-8 JSON metadata
///
/// Payloads are stored as 32-bit floats; loading widens them back to double.
struct Checkpoint {
  std::vector<std::pair<std::string, Tensor>> tensors;
  nlohmann::json metadata = nlohmann::json::object();

  [[nodiscard]] const Tensor& tensor(const std::string& name) const;
  [[nodiscard]] bool has_tensor(const std::string& name) const;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& source = "checkpoint");

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Stores an MLP as tensors "<prefix>.<i>.weight" / "<prefix>.<i>.bias" and
/// records its activations under metadata["networks"][prefix].
void store_mlp(Checkpoint& ckpt, const std::string& prefix, const MlpParams& params);
MlpParams load_mlp(const Checkpoint& ckpt, const std::string& prefix);

}  // namespace xirl::diff
