#pragma once

#include <cstdint>
#include <vector>

#include "xirl/env/sweep_env.hpp"

namespace xirl::env {

inline constexpr int kDefaultGrid = 64;
inline constexpr int kChannels = 3;  // agent, debris, goal zone

/// Binary top-down raster, row-major G x G x 3 with row 0 at the top edge.
struct Grid {
  int size = 0;
  std::vector<std::uint8_t> cells;

  [[nodiscard]] std::uint8_t at(int row, int col, int channel) const {
    return cells[(static_cast<std::size_t>(row) * static_cast<std::size_t>(size) + static_cast<std::size_t>(col)) *
                     kChannels +
                 static_cast<std::size_t>(channel)];
  }
  bool operator==(const Grid&) const = default;
};

/// Rasterises by testing each cell centre. Throws ContractError when G < 16.
Grid render(const EnvState& state, int grid_size = kDefaultGrid);

/// Same as `render`, writing into an existing buffer of G*G*3 bytes.
void render_into(const EnvState& state, int grid_size, std::uint8_t* out);

}  // namespace xirl::env
