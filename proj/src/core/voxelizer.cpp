#include "voxelizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <tuple>

#include "binary_io.hpp"
#include "errors.hpp"
#include "random.hpp"

namespace spikeyolo {

GridSpec GridSpec::with_cells(int len, int wid, int hgt) {
  constexpr double kCell = 60.0 / 768.0;
  GridSpec g;
  g.dims = Shape{len, wid, hgt};
  g.roi.x = Range{0.0, len * kCell};
  g.roi.y = Range{-0.5 * wid * kCell, 0.5 * wid * kCell};
  return g;
}

void GridSpec::validate() const {
  roi.validate();
  if (dims.len <= 0 || dims.wid <= 0 || dims.ch <= 0) fail(ErrorCode::InvalidArgument, "grid dims must be positive");
}

namespace {

int cell_of(double v, const Range& r, int n, double cell) {
  const int i = static_cast<int>(std::floor((v - r.min) / cell));
  // floor((max - eps - min) / cell) can round up to n in floating point.
  return std::clamp(i, 0, n - 1);
}

}  // namespace

VoxelIndex voxel_index(const Point& p, const GridSpec& grid) {
  if (!grid.roi.contains(p))
    fail(ErrorCode::OutOfRoi, "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ", " +
                                  std::to_string(p.z) + ") is outside the region of interest");
  return VoxelIndex{cell_of(p.x, grid.roi.x, grid.dims.len, grid.cell_x()),
                    cell_of(p.y, grid.roi.y, grid.dims.wid, grid.cell_y()),
                    cell_of(p.z, grid.roi.z, grid.dims.ch, grid.cell_z())};
}

double max_round_trip_time(const Roi& roi) noexcept {
  double best = 0.0;
  for (double x : {roi.x.min, roi.x.max})
    for (double y : {roi.y.min, roi.y.max})
      for (double z : {roi.z.min, roi.z.max}) best = std::max(best, std::sqrt(x * x + y * y + z * z));
  return round_trip_time(best);
}

std::uint64_t selection_key(std::uint64_t seed, std::size_t voxel, const Point& p) noexcept {
  const std::uint64_t xy = (std::uint64_t{std::bit_cast<std::uint32_t>(p.x)} << 32) | std::bit_cast<std::uint32_t>(p.y);
  const std::uint64_t zr =
      (std::uint64_t{std::bit_cast<std::uint32_t>(p.z)} << 32) | std::bit_cast<std::uint32_t>(p.reflectance);
  return hash_combine(hash_combine(hash_combine(seed, voxel), xy), zr);
}

SpikeTensor voxelize(const PointCloud& cloud, const GridSpec& grid, const VoxelizeOptions& options) {
  grid.validate();
  const double empty = options.empty_mode == EmptyMode::PaperLiteral ? 0.0 : kNoSpike;
  SpikeTensor out(grid.dims, empty);

  struct Candidate {
    std::size_t voxel;
    std::uint64_t key;
    double time;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(cloud.points.size());
  for (const Point& p : cloud.points) {
    if (!grid.roi.contains(p)) continue;
    const VoxelIndex v = voxel_index(p, grid);
    const std::size_t flat = out.index(v.x, v.y, v.z);
    candidates.push_back({flat, selection_key(options.seed, flat, p), round_trip_time(p)});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.voxel, a.key, a.time) < std::tie(b.voxel, b.key, b.time);
  });

  const double scale = options.normalize ? 1.0 / max_round_trip_time(grid.roi) : 1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i > 0 && candidates[i].voxel == candidates[i - 1].voxel) continue;
    out.values()[candidates[i].voxel] = candidates[i].time * scale;
  }
  return out;
}

std::vector<std::uint8_t> serialize_tensor(const SpikeTensor& tensor) {
  const Shape& s = tensor.shape();
  for (int d : {s.len, s.wid, s.ch})
    if (d < 0 || d > 0xffff) fail(ErrorCode::TensorFormat, "dimension " + std::to_string(d) + " does not fit in u16");
  std::vector<std::uint8_t> out;
  out.reserve(16 + 4 * tensor.size());
  for (char c : {'S', 'P', 'K', 'T'}) out.push_back(static_cast<std::uint8_t>(c));
  binio::put_u32(out, kTensorFormatVersion);
  binio::put_u16(out, static_cast<std::uint16_t>(s.len));
  binio::put_u16(out, static_cast<std::uint16_t>(s.wid));
  binio::put_u16(out, static_cast<std::uint16_t>(s.ch));
  binio::put_u16(out, 0);
  for (double v : tensor.values()) binio::put_f32(out, static_cast<float>(v));
  return out;
}

SpikeTensor parse_tensor(std::span<const std::uint8_t> bytes) {
  binio::Reader in(bytes, ErrorCode::TensorFormat);
  in.magic("SPKT");
  const std::uint32_t version = in.u32();
  if (version != kTensorFormatVersion) fail(ErrorCode::TensorFormat, "unsupported version " + std::to_string(version));
  Shape s;
  s.len = in.u16();
  s.wid = in.u16();
  s.ch = in.u16();
  in.skip(2);
  if (in.remaining() != 4 * s.size())
    fail(ErrorCode::TensorFormat, "payload holds " + std::to_string(in.remaining()) + " bytes, header implies " +
                                      std::to_string(4 * s.size()));
  SpikeTensor t(s);
  for (double& v : t.values()) {
    v = in.f32();
    if (std::isnan(v) || v < 0.0) fail(ErrorCode::TensorFormat, "spike times must be >= 0 or +inf");
  }
  return t;
}

void write_tensor_file(const SpikeTensor& tensor, const std::string& path) {
  binio::write_file(path, serialize_tensor(tensor));
}

SpikeTensor read_tensor_file(const std::string& path) { return parse_tensor(binio::read_file(path)); }

}  // namespace spikeyolo
