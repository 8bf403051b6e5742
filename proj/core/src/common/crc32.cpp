#include "xirl/common/crc32.hpp"

#include <algorithm>

#include <zlib.h>

namespace xirl {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const Bytef* data = bytes.data();
  std::size_t remaining = bytes.size();
  // zlib takes a uInt length; feed in chunks for very large buffers.
  while (remaining > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(remaining, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    remaining -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace xirl
