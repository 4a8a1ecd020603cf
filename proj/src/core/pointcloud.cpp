#include "pointcloud.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "errors.hpp"

namespace spikeyolo {

void Roi::validate() const {
  if (!(x.min < x.max) || !(y.min < y.max) || !(z.min < z.max))
    fail(ErrorCode::InvalidArgument, "ROI requires min < max on every axis");
}

PointCloud parse_cloud(std::span<const std::uint8_t> bytes, std::string frame_id) {
  if (bytes.size() % kPointRecordBytes != 0)
    fail(ErrorCode::MalformedCloud,
         "length " + std::to_string(bytes.size()) + " is not a multiple of " + std::to_string(kPointRecordBytes));
  PointCloud cloud;
  cloud.frame_id = std::move(frame_id);
  const std::size_t n = bytes.size() / kPointRecordBytes;
  cloud.points.reserve(n);
  binio::Reader in(bytes, ErrorCode::MalformedCloud);
  for (std::size_t i = 0; i < n; ++i) {
    Point p;
    p.x = in.f32();
    p.y = in.f32();
    p.z = in.f32();
    p.reflectance = in.f32();
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) || !std::isfinite(p.reflectance))
      fail(ErrorCode::MalformedCloud, "non-finite value in point " + std::to_string(i));
    cloud.points.push_back(p);
  }
  return cloud;
}

std::vector<std::uint8_t> serialize_cloud(const PointCloud& cloud) {
  std::vector<std::uint8_t> out;
  out.reserve(cloud.points.size() * kPointRecordBytes);
  for (const Point& p : cloud.points) {
    binio::put_f32(out, p.x);
    binio::put_f32(out, p.y);
    binio::put_f32(out, p.z);
    binio::put_f32(out, p.reflectance);
  }
  return out;
}

PointCloud read_cloud_file(const std::string& path) {
  auto bytes = binio::read_file(path);
  return parse_cloud(bytes, path);
}

void write_cloud_file(const PointCloud& cloud, const std::string& path) {
  binio::write_file(path, serialize_cloud(cloud));
}

double distance(const Point& p) noexcept {
  const double x = p.x, y = p.y, z = p.z;
  return std::sqrt(x * x + y * y + z * z);
}

double round_trip_time(double distance_m) noexcept { return 2.0 * distance_m / kSpeedOfLight; }

double round_trip_time(const Point& p) noexcept { return round_trip_time(distance(p)); }

PointCloud filter_roi(const PointCloud& cloud, const Roi& roi) {
  PointCloud out;
  out.frame_id = cloud.frame_id;
  for (const Point& p : cloud.points)
    if (roi.contains(p)) out.points.push_back(p);
  return out;
}

}  // namespace spikeyolo
