#include "scene.hpp"

#include <cmath>
#include <numbers>

#include "random.hpp"

namespace spikeyolo {

SceneOptions SceneOptions::toy() {
  SceneOptions o;
  o.objects = 1;
  o.min_width = 0.8;
  o.max_width = 1.6;
  o.min_length = 1.2;
  o.max_length = 2.8;
  o.min_height = 1.0;
  o.max_height = 1.6;
  o.ground_density = 1.0;
  o.margin = 1.2;
  return o;
}

namespace {

void add_point(PointCloud& cloud, const Roi& roi, double x, double y, double z, double r) {
  Point p{static_cast<float>(x), static_cast<float>(y), static_cast<float>(z), static_cast<float>(r)};
  if (roi.contains(p)) cloud.points.push_back(p);
}

}  // namespace

Scene synth_scene(const Roi& roi, std::uint64_t seed, const SceneOptions& o) {
  Scene scene;
  auto rng = make_rng(seed, 0x5ce7e);

  const double ground_area = roi.x.extent() * roi.y.extent();
  const auto ground_points = static_cast<std::size_t>(ground_area * o.ground_density);
  for (std::size_t i = 0; i < ground_points; ++i)
    add_point(scene.cloud, roi, uniform(rng, roi.x.min, roi.x.max), uniform(rng, roi.y.min, roi.y.max), o.ground_z,
              uniform(rng, 0.0, 0.3));

  for (int n = 0, attempts = 0; n < o.objects && attempts < 100 * std::max(o.objects, 1); ++attempts) {
    GroundTruthBox b;
    b.class_id = o.class_id;
    b.width = uniform(rng, o.min_width, o.max_width);
    b.length = uniform(rng, o.min_length, o.max_length);
    b.yaw = uniform(rng, -std::numbers::pi, std::numbers::pi);
    const double reach = 0.5 * std::hypot(b.width, b.length) + o.margin;
    if (roi.x.extent() <= 2 * reach || roi.y.extent() <= 2 * reach) break;
    b.cx = uniform(rng, roi.x.min + reach, roi.x.max - reach);
    b.cy = uniform(rng, roi.y.min + reach, roi.y.max - reach);
    bool clash = false;
    for (const GroundTruthBox& other : scene.objects) clash = clash || rotated_iou(b.box(), other.box()) > 0.0;
    if (clash) continue;
    scene.objects.push_back(b);
    ++n;

    const double h = uniform(rng, o.min_height, o.max_height);
    const double c = std::cos(b.yaw), s = std::sin(b.yaw);
    auto emit = [&](double u, double v, double z) {
      add_point(scene.cloud, roi, b.cx + c * u - s * v, b.cy + s * u + c * v, z, uniform(rng, 0.2, 1.0));
    };
    const auto top = static_cast<int>(b.width * b.length * o.surface_density);
    for (int i = 0; i < top; ++i)
      emit(uniform(rng, -0.5, 0.5) * b.length, uniform(rng, -0.5, 0.5) * b.width, o.ground_z + h);
    const auto side_l = static_cast<int>(b.length * h * o.surface_density);
    const auto side_w = static_cast<int>(b.width * h * o.surface_density);
    for (double sign : {-0.5, 0.5}) {
      for (int i = 0; i < side_l; ++i)
        emit(uniform(rng, -0.5, 0.5) * b.length, sign * b.width, o.ground_z + uniform(rng, 0.0, h));
      for (int i = 0; i < side_w; ++i)
        emit(sign * b.length, uniform(rng, -0.5, 0.5) * b.width, o.ground_z + uniform(rng, 0.0, h));
    }
  }
  return scene;
}

}  // namespace spikeyolo
