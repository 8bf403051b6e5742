#include "xirl/env/render.hpp"

#include <algorithm>
#include <cmath>

#include "xirl/common/errors.hpp"

namespace xirl::env {

void render_into(const EnvState& state, int grid_size, std::uint8_t* out) {
  if (grid_size < 16) throw ContractError("render: grid size must be at least 16");
  const auto& sp = spec(state.embodiment);
  const double c = std::cos(state.heading);
  const double s = std::sin(state.heading);
  const double r2 = kDebrisRadius * kDebrisRadius;
  const double g = static_cast<double>(grid_size);
  for (int row = 0; row < grid_size; ++row) {
    const double y = 1.0 - (row + 0.5) / g;
    for (int col = 0; col < grid_size; ++col) {
      const double x = (col + 0.5) / g;
      std::uint8_t* cell = out + (static_cast<std::size_t>(row) * static_cast<std::size_t>(grid_size) +
                                  static_cast<std::size_t>(col)) *
                                     kChannels;
      const double dx = x - state.agent.x;
      const double dy = y - state.agent.y;
      bool agent = false;
      if (sp.shape == BodyShape::kDisk) {
        agent = dx * dx + dy * dy <= sp.radius * sp.radius;
      } else {
        const double u = dx * c + dy * s;
        const double w = -dx * s + dy * c;
        agent = std::abs(u) <= sp.depth / 2.0 && std::abs(w) <= sp.width / 2.0;
      }
      bool debris = false;
      for (const auto& d : state.debris) {
        const double ex = x - d.x;
        const double ey = y - d.y;
        debris = debris || ex * ex + ey * ey <= r2;
      }
      cell[0] = agent ? 1 : 0;
      cell[1] = debris ? 1 : 0;
      cell[2] = y >= kZoneY ? 1 : 0;
    }
  }
}

Grid render(const EnvState& state, int grid_size) {
  if (grid_size < 16) throw ContractError("render: grid size must be at least 16");
  Grid grid;
  grid.size = grid_size;
  grid.cells.resize(static_cast<std::size_t>(grid_size) * static_cast<std::size_t>(grid_size) * kChannels);
  render_into(state, grid_size, grid.cells.data());
  return grid;
}

}  // namespace xirl::env
