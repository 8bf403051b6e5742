#include "xirl/diffcore/checkpoint.hpp"

#include <algorithm>
#include <array>

#include "xirl/common/bytes.hpp"
#include "xirl/common/errors.hpp"

namespace xirl::diff {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'X', 'C', 'K', 'P'};

}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw FormatError("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return true;
  }
  return false;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.raw(kMagic);
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.size() > 0xFFFF) throw ContractError("checkpoint tensor name too long");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.text(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.values()) w.f32(static_cast<float>(v));
  }
  const std::string meta = ckpt.metadata.dump();
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.text(meta);
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& source) {
  ByteReader r(bytes, source);
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) r.fail("bad magic, expected XCKP");
  const auto version = r.u16();
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.text(r.u16());
    const auto rank = r.u32();
    if (rank == 0 || rank > 8) r.fail("tensor '" + name + "' has invalid rank " + std::to_string(rank));
    std::vector<std::size_t> shape;
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = r.u32();
      if (d == 0) r.fail("tensor '" + name + "' has a zero dimension");
      shape.push_back(d);
      n *= d;
    }
    if (n * 4 > r.remaining()) r.fail("tensor '" + name + "' payload truncated");
    std::vector<double> values(n);
    for (auto& v : values) v = static_cast<double>(r.f32());
    ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  const auto meta_len = r.u32();
  const std::string meta = r.text(meta_len);
  if (r.remaining() != 0) r.fail("trailing bytes after metadata");
  try {
    ckpt.metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(source + ": metadata is not valid JSON: " + e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  write_file_bytes(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file_bytes(path), path); }

void store_mlp(Checkpoint& ckpt, const std::string& prefix, const MlpParams& params) {
  params.validate();
  nlohmann::json acts = nlohmann::json::array();
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    ckpt.tensors.emplace_back(prefix + "." + std::to_string(i) + ".weight", l.weight);
    ckpt.tensors.emplace_back(prefix + "." + std::to_string(i) + ".bias", l.bias);
    acts.push_back(to_string(l.activation));
  }
  ckpt.metadata["networks"][prefix] = acts;
}

MlpParams load_mlp(const Checkpoint& ckpt, const std::string& prefix) {
  const auto& nets = ckpt.metadata.value("networks", nlohmann::json::object());
  if (!nets.contains(prefix)) throw FormatError("checkpoint has no network '" + prefix + "'");
  MlpParams p;
  const auto& acts = nets.at(prefix);
  for (std::size_t i = 0; i < acts.size(); ++i) {
    DenseLayer l;
    l.weight = ckpt.tensor(prefix + "." + std::to_string(i) + ".weight");
    l.bias = ckpt.tensor(prefix + "." + std::to_string(i) + ".bias");
    l.activation = activation_from_string(acts.at(i).get<std::string>());
    p.layers.push_back(std::move(l));
  }
  p.validate();
  return p;
}

}  // namespace xirl::diff
