#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evalkit.hpp"
#include "network.hpp"
#include "tensor.hpp"

namespace spikeyolo {

// Default class list for the 8 class scores per anchor.
inline constexpr std::array<std::string_view, 8> kClassNames{"Car",  "Van",     "Truck", "Pedestrian", "Person_sitting",
                                                              "Cyclist", "Tram", "Misc"};
std::string class_name(int class_id);
// Accepts a name from kClassNames; throws InvalidArgument otherwise.
int class_id_from_name(std::string_view name);

// Channel offsets inside one anchor's slice of the head.
enum HeadChannel : int { kTx = 0, kTy, kTw, kTl, kTim, kTre, kObj, kClass0 };

struct RawPrediction {
  double t_x = 0, t_y = 0, t_w = 0, t_l = 0, t_im = 0, t_re = 0;
  double p0 = 0;  // objectness logit
  std::vector<double> class_scores;
};

RawPrediction raw_prediction(const Tensor& head, int x, int y, int anchor, const DetectSpec& spec);

// Maps head cells to metres: x = b_x * cell_size + origin_x, likewise y.
struct GridGeometry {
  double cell_size = 2.5;
  double origin_x = 0.0;
  double origin_y = -40.0;

  static GridGeometry of(const NetworkSpec& net);
};

struct Detection {
  int cell_x = 0, cell_y = 0, anchor = 0;
  double b_x = 0, b_y = 0, b_w = 0, b_l = 0;  // grid-cell units
  double b_theta = 0;                          // radians in (-pi, pi]
  double objectness = 0;
  int class_id = 0;
  double class_probability = 0;
  double x_m = 0, y_m = 0, w_m = 0, l_m = 0;

  OrientedBox box_m() const { return OrientedBox{x_m, y_m, w_m, l_m, b_theta}; }
  OrientedBox box_cells() const { return OrientedBox{b_x, b_y, b_w, b_l, b_theta}; }
};

double sigmoid(double x) noexcept;

// Decodes every (cell, anchor) with sigmoid(p0) >= obj_threshold:
// b = sigmoid(t) + c for x/y, prior * exp(t) for w/l, atan2(t_im, t_re) for yaw,
// softmax over class scores.
std::vector<Detection> decode(const Tensor& head, const DetectSpec& spec, double obj_threshold,
                              const GridGeometry& geometry = {});

// Greedy per-class suppression in descending objectness using rotated IoU.
std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold = 0.4);

struct GroundTruthBox {
  double cx = 0, cy = 0;  // metres
  double width = 1, length = 1;
  double yaw = 0;
  int class_id = 0;

  OrientedBox box() const { return OrientedBox{cx, cy, width, length, yaw}; }
};

struct LossHyper {
  double lambda_coord = 5.0;
  double lambda_noobj = 0.5;
};

struct EulerTerm {
  double t_im = 0, t_re = 0;
  double target_im = 0, target_re = 0;
  bool responsible = false;
};

// lambda_coord * sum over responsible predictors of the squared (im, re) residuals.
double euler_loss(std::span<const EulerTerm> terms, double lambda_coord);

// One ground-truth box assigned to its responsible (cell, anchor).
struct AnchorTarget {
  int x = 0, y = 0, anchor = 0;
  double frac_x = 0, frac_y = 0;  // centre offset inside the cell
  double t_w = 0, t_l = 0;        // log size ratio against the prior
  double im = 0, re = 1;          // sin / cos of yaw
  int class_id = 0;
  double iou = 0;                 // objectness target, frozen at assignment
};

// Responsible anchor = best axis-aligned shape IoU between prior and box at
// the box's centre cell. Boxes outside the grid, or landing on an already
// assigned (cell, anchor), are dropped.
std::vector<AnchorTarget> build_targets(const Tensor& head, std::span<const GroundTruthBox> truth,
                                        const DetectSpec& spec, const GridGeometry& geometry);

struct LossBreakdown {
  double coord = 0, obj = 0, noobj = 0, cls = 0, euler = 0;
  double total() const noexcept { return coord + obj + noobj + cls + euler; }
};

// Multi-part squared-error loss against fixed targets. `grad`, when given,
// receives dLoss/dHead.
LossBreakdown loss_with_targets(const Tensor& head, std::span<const AnchorTarget> targets, const DetectSpec& spec,
                                const LossHyper& hyper, Tensor* grad = nullptr);

LossBreakdown yolo_loss(const Tensor& head, std::span<const GroundTruthBox> truth, const DetectSpec& spec,
                        const GridGeometry& geometry, const LossHyper& hyper = {}, Tensor* grad = nullptr);

}  // namespace spikeyolo
