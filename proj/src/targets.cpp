#include "bricks/targets.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "bricks/action_space.hpp"
#include "bricks/errors.hpp"

namespace bricks {

namespace {

struct AxisWindow {
  int start = 0;
  bool clipped = false;
};

AxisWindow crop_window(int n, int lo, int hi) {
  AxisWindow w;
  if (hi < lo) {
    w.start = n >= kViewSize ? (n - kViewSize) / 2 : -(kViewSize - n) / 2;
    return w;
  }
  w.clipped = hi - lo + 1 > kViewSize;
  if (n <= kViewSize) {
    w.start = -(kViewSize - n) / 2;
    return w;
  }
  const int center = (lo + hi + 1) / 2;
  w.start = std::clamp(center - kViewSize / 2, 0, n - kViewSize);
  return w;
}

std::uint32_t read_be32(std::istream& in, std::size_t& offset) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw ParseError("IDX: truncated header", offset);
  }
  offset += 4;
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

std::size_t BinaryImage::count() const {
  return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), 1));
}

std::string_view to_string(TaskMode mode) {
  switch (mode) {
    case TaskMode::Mnist:
      return "mnist";
    case TaskMode::RandomAssembly:
      return "random-assembly";
    case TaskMode::ModelNet:
      return "modelnet";
  }
  return "unknown";
}

TaskMode parse_task_mode(std::string_view name) {
  for (TaskMode m : {TaskMode::Mnist, TaskMode::RandomAssembly, TaskMode::ModelNet}) {
    if (to_string(m) == name) {
      return m;
    }
  }
  throw ConfigError("unknown task mode '" + std::string(name) +
                    "' (expected mnist, random-assembly or modelnet)");
}

ViewSet project_views(const VoxelGrid& grid) {
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
  const AxisWindow wx = crop_window(d.x, lo.x, hi.x);
  const AxisWindow wy = crop_window(d.y, lo.y, hi.y);
  const AxisWindow wz = crop_window(d.z, lo.z, hi.z);

  ViewSet out;
  out.clipped = wx.clipped || wy.clipped || wz.clipped;
  out.crop_start = {wx.start, wy.start, wz.start};
  BinaryImage& front = out.views[0];
  BinaryImage& right = out.views[1];
  BinaryImage& top = out.views[2];
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        if (!grid.get({x, y, z})) {
          continue;
        }
        const int cx = x - wx.start;
        const int cy = y - wy.start;
        const int rz = kViewSize - 1 - (z - wz.start);
        const int ry = kViewSize - 1 - cy;
        const auto inside = [](int v) { return v >= 0 && v < kViewSize; };
        if (inside(cx) && inside(rz)) {
          front.set(rz, cx);
        }
        if (inside(cy) && inside(rz)) {
          right.set(rz, cy);
        }
        if (inside(cx) && inside(ry)) {
          top.set(ry, cx);
        }
      }
    }
  }
  return out;
}

BinaryImage downsample_mnist(std::span<const std::uint8_t> image28) {
  if (image28.size() != 28 * 28) {
    throw ContractViolation("downsample_mnist: expected 784 pixels, got " +
                            std::to_string(image28.size()));
  }
  BinaryImage out(kViewSize, kViewSize);
  for (int r = 0; r < 28; ++r) {
    for (int c = 0; c < 28; ++c) {
      if (image28[static_cast<std::size_t>(r * 28 + c)] >= 128) {
        out.set(r / 2, c / 2);
      }
    }
  }
  return out;
}

int mnist_budget(std::size_t on_pixels) {
  return static_cast<int>((11 * on_pixels + 9) / 10);
}

BinaryImage mnist_view(const VoxelGrid& grid) {
  const Vec3i d = grid.dims();
  BinaryImage view(d.z, d.y);
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        if (grid.get({x, y, z})) {
          view.set(d.z - 1 - z, y);
          break;
        }
      }
    }
  }
  return view;
}

TargetInfo mnist_to_target(std::span<const std::uint8_t> image28, std::string id) {
  const BinaryImage pooled = downsample_mnist(image28);
  const std::size_t on = pooled.count();
  if (on == 0) {
    throw EmptyTarget("MNIST image has no pixel >= 128");
  }
  const Bounds bounds = Bounds::mnist();
  VoxelGrid grid(bounds.dims());
  const Vec3i d = grid.dims();
  for (int r = 0; r < kViewSize; ++r) {
    for (int c = 0; c < kViewSize; ++c) {
      if (pooled.get(r, c)) {
        for (int x = 0; x < d.x; ++x) {
          grid.set({x, c, d.z - 1 - r});
        }
      }
    }
  }
  TargetInfo t;
  t.id = std::move(id);
  t.mode = TaskMode::Mnist;
  t.exact_volume = normalize_bottom_center(grid);
  t.views = {mnist_view(*t.exact_volume)};
  t.budget = mnist_budget(on);
  return t;
}

TargetInfo volume_target(const VoxelGrid& grid, TaskMode mode,
                         std::optional<int> configured_budget, std::string id) {
  if (grid.volume() == 0) {
    throw EmptyTarget("target volume '" + id + "' is empty");
  }
  TargetInfo t;
  t.id = std::move(id);
  t.mode = mode;
  t.exact_volume = normalize_bottom_center(grid);
  if (mode == TaskMode::Mnist) {
    t.views = {mnist_view(*t.exact_volume)};
  } else {
    ViewSet vs = project_views(*t.exact_volume);
    t.views.assign(vs.views.begin(), vs.views.end());
    t.clipped = vs.clipped;
  }
  t.configured_budget = configured_budget;
  t.budget = configured_budget.value_or(1);
  t.budget = brick_budget(t);
  return t;
}

int brick_budget(const TargetInfo& target) {
  switch (target.mode) {
    case TaskMode::Mnist:
      if (target.views.size() != 1) {
        throw ContractViolation("MNIST target must carry exactly one view");
      }
      return mnist_budget(target.views.front().count());
    case TaskMode::RandomAssembly:
      return target.budget;
    case TaskMode::ModelNet:
      if (!target.configured_budget) {
        throw ConfigError("ModelNet target '" + target.id + "' has no configured brick budget");
      }
      if (*target.configured_budget < 1 || *target.configured_budget > 60) {
        throw ConfigError("ModelNet brick budget must be in [1, 60], got " +
                          std::to_string(*target.configured_budget));
      }
      return *target.configured_budget;
  }
  return target.budget;
}

RandomConstruction random_construction(std::mt19937_64& rng, int bricks, const OffsetSet& offsets,
                                       const Bounds& bounds, GeneratorStats* stats) {
  if (bricks < 1) {
    throw ConfigError("random_construction: brick count must be >= 1");
  }
  for (;;) {
    RandomConstruction rc;
    rc.graph = AssemblyGraph::single(BrickPose{});
    bool dead_end = false;
    while (static_cast<int>(rc.graph.size()) < bricks) {
      const ActionMasks masks = compute_masks(rc.graph, offsets, bounds, MaskMode::Accelerated);
      if (!masks.any_valid()) {
        dead_end = true;
        break;
      }
      const BrickAction a = sample_uniform_valid(masks, rng);
      rc.graph = rc.graph.with_brick(action_pose(rc.graph, a, offsets));
      rc.actions.push_back(a);
    }
    if (!dead_end) {
      if (stats) {
        ++stats->generated;
      }
      return rc;
    }
    if (stats) {
      ++stats->dead_ends;
    }
  }
}

GeneratedAssembly gen_random_assembly(std::mt19937_64& rng, int min_bricks, int max_bricks,
                                      const OffsetSet& offsets, const Bounds& bounds,
                                      GeneratorStats* stats, std::string id) {
  if (min_bricks < 1 || max_bricks < min_bricks) {
    throw ConfigError("brick count range must satisfy 1 <= min <= max");
  }
  std::uniform_int_distribution<int> count(min_bricks, max_bricks);
  const int n = count(rng);
  RandomConstruction rc = random_construction(rng, n, offsets, bounds, stats);
  GeneratedAssembly out;
  out.target = volume_target(voxelize(rc.graph, bounds), TaskMode::RandomAssembly, std::nullopt,
                             std::move(id));
  out.target.budget = n;
  out.graph = std::move(rc.graph);
  out.actions = std::move(rc.actions);
  return out;
}

void write_pgm(std::ostream& out, const BinaryImage& image) {
  out << "P1\n" << image.cols << ' ' << image.rows << '\n';
  for (int r = 0; r < image.rows; ++r) {
    for (int c = 0; c < image.cols; ++c) {
      out << (image.get(r, c) ? '1' : '0') << (c + 1 < image.cols ? ' ' : '\n');
    }
  }
}

BinaryImage read_pgm(std::istream& in) {
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  const auto skip_ws = [&] {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') {
          ++pos;
        }
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  const auto read_int = [&]() {
    skip_ws();
    const std::size_t start = pos;
    int v = 0;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
      v = v * 10 + (data[pos] - '0');
      ++pos;
    }
    if (pos == start) {
      throw ParseError("P1: expected an integer", start);
    }
    return v;
  };
  if (data.compare(0, 2, "P1") != 0) {
    throw ParseError("P1: missing magic", 0);
  }
  pos = 2;
  const int cols = read_int();
  const int rows = read_int();
  BinaryImage img(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      skip_ws();
      if (pos >= data.size()) {
        throw ParseError("P1: truncated pixel data", pos);
      }
      if (data[pos] != '0' && data[pos] != '1') {
        throw ParseError("P1: pixel must be 0 or 1", pos);
      }
      img.set(r, c, data[pos] == '1');
      ++pos;
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const BinaryImage& image) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  write_pgm(out, image);
}

BinaryImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read " + path.string());
  }
  return read_pgm(in);
}

IdxImages read_idx_images(std::istream& in) {
  std::size_t offset = 0;
  const std::uint32_t magic = read_be32(in, offset);
  if (magic != 0x00000803u) {
    throw ParseError("IDX: expected image magic 0x00000803", 0);
  }
  IdxImages out;
  out.count = static_cast<int>(read_be32(in, offset));
  out.rows = static_cast<int>(read_be32(in, offset));
  out.cols = static_cast<int>(read_be32(in, offset));
  const std::size_t n = static_cast<std::size_t>(out.count) * static_cast<std::size_t>(out.rows) *
                        static_cast<std::size_t>(out.cols);
  out.pixels.resize(n);
  in.read(reinterpret_cast<char*>(out.pixels.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw ParseError("IDX: truncated image data", offset + static_cast<std::size_t>(in.gcount()));
  }
  return out;
}

IdxImages read_idx_images(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read " + path.string());
  }
  return read_idx_images(in);
}

std::vector<std::uint8_t> read_idx_labels(std::istream& in) {
  std::size_t offset = 0;
  const std::uint32_t magic = read_be32(in, offset);
  if (magic != 0x00000801u) {
    throw ParseError("IDX: expected label magic 0x00000801", 0);
  }
  const std::uint32_t count = read_be32(in, offset);
  std::vector<std::uint8_t> labels(count);
  in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::uint32_t>(in.gcount()) != count) {
    throw ParseError("IDX: truncated label data", offset + static_cast<std::size_t>(in.gcount()));
  }
  return labels;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read " + path.string());
  }
  return read_idx_labels(in);
}

}  // namespace bricks
