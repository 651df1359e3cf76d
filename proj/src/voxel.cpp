#include "bricks/voxel.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>

#include "bricks/errors.hpp"

namespace bricks {

VoxelGrid::VoxelGrid(int nx, int ny, int nz) : nx_(nx), ny_(ny), nz_(nz) {
  if (nx < 0 || ny < 0 || nz < 0) {
    throw ContractViolation("VoxelGrid: negative dimension");
  }
  bits_.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
                   static_cast<std::size_t>(nz),
               0);
}

std::size_t VoxelGrid::volume() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

Footprint grid_footprint(const BrickPose& pose, const Bounds& bounds) {
  Footprint cells = footprint(pose);
  for (Vec3i& c : cells) {
    c = to_grid(c, bounds);
  }
  return cells;
}

VoxelGrid voxelize(const AssemblyGraph& graph, const Bounds& bounds) {
  VoxelGrid grid(bounds.dims());
  for (const BrickPose& p : graph.nodes()) {
    if (!bounds.contains(p)) {
      throw ContractViolation("voxelize: brick outside the bounds");
    }
    for (const Vec3i& c : grid_footprint(p, bounds)) {
      grid.set(c);
    }
  }
  return grid;
}

Vec3i bottom_center_shift(const VoxelGrid& grid) {
  const Vec3i d = grid.dims();
  Vec3i lo{d.x, d.y, d.z};
  Vec3i hi{-1, -1, -1};
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        if (grid.get({x, y, z})) {
          lo = {std::min(lo.x, x), std::min(lo.y, y), std::min(lo.z, z)};
          hi = {std::max(hi.x, x), std::max(hi.y, y), std::max(hi.z, z)};
        }
      }
    }
  }
  if (hi.x < 0) {
    return {};
  }
  return {d.x / 2 - (lo.x + hi.x + 1) / 2, d.y / 2 - (lo.y + hi.y + 1) / 2, -lo.z};
}

VoxelGrid translate(const VoxelGrid& grid, const Vec3i& shift) {
  VoxelGrid out(grid.dims());
  const Vec3i d = grid.dims();
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        const Vec3i c{x, y, z};
        if (grid.get(c) && out.in_range(c + shift)) {
          out.set(c + shift);
        }
      }
    }
  }
  return out;
}

VoxelGrid normalize_bottom_center(const VoxelGrid& grid) {
  return translate(grid, bottom_center_shift(grid));
}

void write_voxel(std::ostream& out, const VoxelGrid& grid) {
  const Vec3i d = grid.dims();
  out << "BBVOX1 " << d.x << ' ' << d.y << ' ' << d.z << '\n';
  std::string body(grid.cell_count(), '0');
  const auto bits = grid.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) {
      body[i] = '1';
    }
  }
  out << body;
}

VoxelGrid read_voxel(std::istream& in) {
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string magic = "BBVOX1 ";
  if (data.compare(0, magic.size(), magic) != 0) {
    throw ParseError("BBVOX1: missing magic", 0);
  }
  std::size_t pos = magic.size();
  int dims[3] = {0, 0, 0};
  for (int a = 0; a < 3; ++a) {
    if (a > 0) {
      if (pos >= data.size() || data[pos] != ' ') {
        throw ParseError("BBVOX1: expected space between dimensions", pos);
      }
      ++pos;
    }
    const char* first = data.data() + pos;
    const char* last = data.data() + data.size();
    const auto [ptr, ec] = std::from_chars(first, last, dims[a]);
    if (ec != std::errc() || ptr == first || dims[a] < 0) {
      throw ParseError("BBVOX1: bad dimension", pos);
    }
    pos += static_cast<std::size_t>(ptr - first);
  }
  if (pos >= data.size() || data[pos] != '\n') {
    throw ParseError("BBVOX1: header must end with a newline", pos);
  }
  ++pos;
  VoxelGrid grid(dims[0], dims[1], dims[2]);
  const std::size_t n = grid.cell_count();
  if (data.size() - pos < n) {
    throw ParseError("BBVOX1: truncated body, expected " + std::to_string(n) + " cells",
                     data.size());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const char ch = data[pos + i];
    if (ch != '0' && ch != '1') {
      throw ParseError("BBVOX1: cell must be '0' or '1'", pos + i);
    }
  }
  const Vec3i d = grid.dims();
  std::size_t i = pos;
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        if (data[i++] == '1') {
          grid.set({x, y, z});
        }
      }
    }
  }
  for (std::size_t k = pos + n; k < data.size(); ++k) {
    if (data[k] != '\n' && data[k] != '\r' && data[k] != ' ') {
      throw ParseError("BBVOX1: trailing data after body", k);
    }
  }
  return grid;
}

void write_voxel(const std::filesystem::path& path, const VoxelGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  write_voxel(out, grid);
}

VoxelGrid read_voxel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read " + path.string());
  }
  return read_voxel(in);
}

}  // namespace bricks
