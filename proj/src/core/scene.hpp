#pragma once

#include <cstdint>
#include <vector>

#include "detection.hpp"
#include "pointcloud.hpp"

namespace spikeyolo {

// Synthetic LiDAR scenes: a sparse ground plane plus box-shaped objects whose
// surfaces are sampled with points. Used for tests, demos and toy training.
struct SceneOptions {
  int objects = 3;
  int class_id = 0;
  double min_width = 1.5, max_width = 1.9;
  double min_length = 3.5, max_length = 4.6;
  double min_height = 1.4, max_height = 1.6;
  double ground_z = -1.73;
  double ground_density = 2.0;  // points per square metre
  double surface_density = 40.0;
  double margin = 1.0;  // keep objects this far inside the ROI

  static SceneOptions cars() { return {}; }
  // Small single objects for the reduced training grid.
  static SceneOptions toy();
};

struct Scene {
  PointCloud cloud;
  std::vector<GroundTruthBox> objects;
};

Scene synth_scene(const Roi& roi, std::uint64_t seed, const SceneOptions& options = {});

}  // namespace spikeyolo
