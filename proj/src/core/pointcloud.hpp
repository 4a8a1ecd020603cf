#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spikeyolo {

// One LiDAR return in sensor coordinates. Reflectance is carried through
// parsing but nothing downstream reads it: the encoding is purely temporal.
struct Point {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float reflectance = 0.f;
  friend bool operator==(const Point&, const Point&) = default;
};

struct PointCloud {
  std::vector<Point> points;
  std::string frame_id;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool contains(double v) const noexcept { return v >= min && v < max; }
  double extent() const noexcept { return max - min; }
};

// Region of interest. Membership is half-open [min, max) on every axis.
struct Roi {
  Range x{0.0, 60.0};
  Range y{-40.0, 40.0};
  Range z{-2.73, 1.27};

  bool contains(const Point& p) const noexcept { return x.contains(p.x) && y.contains(p.y) && z.contains(p.z); }
  void validate() const;
};

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr std::size_t kPointRecordBytes = 16;

// Decodes little-endian float32 (x, y, z, reflectance) records.
// Throws MalformedCloud on a truncated record or a non-finite value.
PointCloud parse_cloud(std::span<const std::uint8_t> bytes, std::string frame_id = {});
std::vector<std::uint8_t> serialize_cloud(const PointCloud& cloud);

PointCloud read_cloud_file(const std::string& path);
void write_cloud_file(const PointCloud& cloud, const std::string& path);

double distance(const Point& p) noexcept;
double round_trip_time(const Point& p) noexcept;
double round_trip_time(double distance_m) noexcept;

PointCloud filter_roi(const PointCloud& cloud, const Roi& roi = {});

}  // namespace spikeyolo
