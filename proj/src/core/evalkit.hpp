#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace spikeyolo {

// Bird's-eye-view rectangle. `length` runs along the heading `yaw`, `width`
// across it.
struct OrientedBox {
  double cx = 0.0;
  double cy = 0.0;
  double width = 1.0;
  double length = 1.0;
  double yaw = 0.0;

  std::array<std::array<double, 2>, 4> corners() const;  // counter-clockwise
  double area() const noexcept { return width * length; }
};

// Intersection over union of two oriented boxes: the first box's rectangle is
// clipped against the second's four half-planes.
double rotated_iou(const OrientedBox& a, const OrientedBox& b);

struct ScoredBox {
  OrientedBox box;
  int class_id = 0;
  double score = 0.0;
};

struct EvalFrame {
  std::string frame_id;
  std::vector<ScoredBox> detections;
  std::vector<ScoredBox> ground_truth;  // score unused
};

struct EvalConfig {
  std::map<int, double> iou_threshold;  // class id -> threshold; only these classes are scored
  static EvalConfig kitti();            // Car 0.7, Pedestrian 0.5, Cyclist 0.5
};

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
};

struct ClassAp {
  int class_id = 0;
  double ap = 0.0;
  std::size_t gt_count = 0;
  std::size_t det_count = 0;
  std::vector<PrPoint> curve;  // one point per detection, in score order
};

// Mean over recall r in {0, 0.1, ..., 1} of the best precision at recall >= r.
double interpolated_ap_11(std::span<const PrPoint> curve);

// Detections are matched greedily by descending score (ties: frame id, then
// position) to the unmatched same-class ground truth of highest IoU in their
// frame; a match needs IoU >= threshold. Classes without ground truth are skipped.
std::vector<ClassAp> average_precision(std::span<const EvalFrame> frames, const EvalConfig& cfg);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::array<std::uint8_t, 3> pixel(int x, int y) const;
  void set(int x, int y, std::array<std::uint8_t, 3> c);
};

inline constexpr int kBevWidth = 1024;
inline constexpr int kBevHeight = 768;
inline constexpr std::array<std::uint8_t, 3> kDetectionColor{255, 64, 64};
inline constexpr std::array<std::uint8_t, 3> kGroundTruthColor{64, 255, 64};

// Metric extent covered by the raster: x forward (image up), y to the left
// edge at y_min. Defaults match the 60 m x 80 m detection range.
struct BevView {
  double x_min = 0.0, x_max = 60.0;
  double y_min = -40.0, y_max = 40.0;

  // Pixel column/row of a metric point.
  std::array<double, 2> to_pixel(double x, double y) const;
};

// Top-down 1024x768 raster: occupied columns of the tensor shaded by their
// earliest non-zero spike time, then ground truth and detections outlined.
Image render_bev(const SpikeTensor& tensor, std::span<const OrientedBox> detections,
                 std::span<const OrientedBox> ground_truth, const BevView& view = {});

std::vector<std::uint8_t> encode_ppm(const Image& image);

}  // namespace spikeyolo
