#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pointcloud.hpp"
#include "tensor.hpp"

namespace spikeyolo {

struct VoxelIndex {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

// Quantization of an ROI into a regular grid. The default reproduces the
// 768 x 1024 x 21 grid over [0,60) x [-40,40) x [-2.73,1.27) m.
struct GridSpec {
  Roi roi{};
  Shape dims{768, 1024, 21};

  double cell_x() const noexcept { return roi.x.extent() / dims.len; }
  double cell_y() const noexcept { return roi.y.extent() / dims.wid; }
  double cell_z() const noexcept { return roi.z.extent() / dims.ch; }

  // A grid with the default voxel footprint (0.078125 m) and height slab, but
  // `len` x `wid` cells, starting at x = 0 and centred on y = 0.
  static GridSpec with_cells(int len, int wid, int hgt = 21);

  void validate() const;
};

enum class EmptyMode {
  PaperLiteral,  // empty voxels hold t = 0
  Sentinel,      // empty voxels hold NO_SPIKE
};

struct VoxelizeOptions {
  std::uint64_t seed = 0;
  EmptyMode empty_mode = EmptyMode::PaperLiteral;
  bool normalize = true;
};

// Throws OutOfRoi when p lies outside the half-open ROI.
VoxelIndex voxel_index(const Point& p, const GridSpec& grid);

// Longest round-trip time inside the ROI (its farthest corner).
double max_round_trip_time(const Roi& roi) noexcept;

// Per-voxel selection key. Lower key wins, so the chosen point depends only on
// (seed, voxel, point) and never on input order.
std::uint64_t selection_key(std::uint64_t seed, std::size_t voxel, const Point& p) noexcept;

// Points outside the ROI are ignored.
SpikeTensor voxelize(const PointCloud& cloud, const GridSpec& grid, const VoxelizeOptions& options = {});

// Tensor file: "SPKT", u32 version, u16 dims[3], 2 pad bytes, then float32
// values in (x, y, c) row-major order; +inf is NO_SPIKE.
inline constexpr std::uint32_t kTensorFormatVersion = 1;
std::vector<std::uint8_t> serialize_tensor(const SpikeTensor& tensor);
SpikeTensor parse_tensor(std::span<const std::uint8_t> bytes);
void write_tensor_file(const SpikeTensor& tensor, const std::string& path);
SpikeTensor read_tensor_file(const std::string& path);

}  // namespace spikeyolo
