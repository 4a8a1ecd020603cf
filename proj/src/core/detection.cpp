#include "detection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "errors.hpp"

namespace spikeyolo {

std::string class_name(int class_id) {
  if (class_id >= 0 && class_id < static_cast<int>(kClassNames.size()))
    return std::string(kClassNames[static_cast<std::size_t>(class_id)]);
  return "class" + std::to_string(class_id);
}

int class_id_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i)
    if (kClassNames[i] == name) return static_cast<int>(i);
  fail(ErrorCode::InvalidArgument, "unknown class '" + std::string(name) + "'");
}

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

GridGeometry GridGeometry::of(const NetworkSpec& net) {
  return GridGeometry{net.head_cell_size(), 0.0, net.head_origin_y()};
}

namespace {

void check_head(const Tensor& head, const DetectSpec& spec) {
  if (head.shape().ch != spec.channels())
    fail(ErrorCode::Decode, "head has " + std::to_string(head.shape().ch) + " channels, expected " +
                                std::to_string(spec.channels()));
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> p(z.size());
  if (z.empty()) return p;
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += p[i] = std::exp(z[i] - m);
  for (double& v : p) v /= sum;
  return p;
}

double wrap_angle(double theta) {
  constexpr double pi = std::numbers::pi;
  if (theta <= -pi) theta += 2.0 * pi;
  return theta;
}

std::size_t head_offset(const Tensor& head, int x, int y, int anchor, const DetectSpec& spec) {
  return head.index(x, y, anchor * spec.values_per_anchor());
}

}  // namespace

RawPrediction raw_prediction(const Tensor& head, int x, int y, int anchor, const DetectSpec& spec) {
  check_head(head, spec);
  const double* v = head.data() + head_offset(head, x, y, anchor, spec);
  RawPrediction p{v[kTx], v[kTy], v[kTw], v[kTl], v[kTim], v[kTre], v[kObj], {}};
  p.class_scores.assign(v + kClass0, v + kClass0 + spec.classes);
  return p;
}

std::vector<Detection> decode(const Tensor& head, const DetectSpec& spec, double obj_threshold,
                              const GridGeometry& geometry) {
  check_head(head, spec);
  std::vector<Detection> out;
  const Shape& s = head.shape();
  for (int x = 0; x < s.len; ++x)
    for (int y = 0; y < s.wid; ++y)
      for (int a = 0; a < static_cast<int>(spec.anchors.size()); ++a) {
        const double* v = head.data() + head_offset(head, x, y, a, spec);
        const double objectness = sigmoid(v[kObj]);
        if (!(objectness >= obj_threshold)) continue;
        Detection d;
        d.cell_x = x;
        d.cell_y = y;
        d.anchor = a;
        d.b_x = sigmoid(v[kTx]) + x;
        d.b_y = sigmoid(v[kTy]) + y;
        d.b_w = spec.anchors[static_cast<std::size_t>(a)].w * std::exp(v[kTw]);
        d.b_l = spec.anchors[static_cast<std::size_t>(a)].l * std::exp(v[kTl]);
        d.b_theta = wrap_angle(std::atan2(v[kTim], v[kTre]));
        d.objectness = objectness;
        const auto probs = softmax(std::span<const double>(v + kClass0, static_cast<std::size_t>(spec.classes)));
        const auto best = std::max_element(probs.begin(), probs.end());
        d.class_id = static_cast<int>(best - probs.begin());
        d.class_probability = *best;
        d.x_m = d.b_x * geometry.cell_size + geometry.origin_x;
        d.y_m = d.b_y * geometry.cell_size + geometry.origin_y;
        d.w_m = d.b_w * geometry.cell_size;
        d.l_m = d.b_l * geometry.cell_size;
        out.push_back(d);
      }
  return out;
}

std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold) {
  std::stable_sort(detections.begin(), detections.end(),
                   [](const Detection& a, const Detection& b) { return a.objectness > b.objectness; });
  std::vector<Detection> kept;
  for (const Detection& d : detections) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_id == d.class_id && rotated_iou(k.box_m(), d.box_m()) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

double euler_loss(std::span<const EulerTerm> terms, double lambda_coord) {
  double sum = 0.0;
  for (const EulerTerm& t : terms) {
    if (!t.responsible) continue;
    const double di = t.t_im - t.target_im;
    const double dr = t.t_re - t.target_re;
    sum += di * di + dr * dr;
  }
  return lambda_coord * sum;
}

std::vector<AnchorTarget> build_targets(const Tensor& head, std::span<const GroundTruthBox> truth,
                                        const DetectSpec& spec, const GridGeometry& geometry) {
  check_head(head, spec);
  const Shape& s = head.shape();
  std::vector<AnchorTarget> targets;
  for (const GroundTruthBox& g : truth) {
    const double gx = (g.cx - geometry.origin_x) / geometry.cell_size;
    const double gy = (g.cy - geometry.origin_y) / geometry.cell_size;
    const int cx = static_cast<int>(std::floor(gx));
    const int cy = static_cast<int>(std::floor(gy));
    if (cx < 0 || cy < 0 || cx >= s.len || cy >= s.wid) continue;
    const double gw = g.width / geometry.cell_size;
    const double gl = g.length / geometry.cell_size;

    int best = 0;
    double best_iou = -1.0;
    for (int a = 0; a < static_cast<int>(spec.anchors.size()); ++a) {
      const AnchorPrior& p = spec.anchors[static_cast<std::size_t>(a)];
      const double inter = std::min(p.w, gw) * std::min(p.l, gl);
      const double iou = inter / (p.w * p.l + gw * gl - inter);
      if (iou > best_iou) {
        best_iou = iou;
        best = a;
      }
    }
    const bool taken = std::any_of(targets.begin(), targets.end(), [&](const AnchorTarget& t) {
      return t.x == cx && t.y == cy && t.anchor == best;
    });
    if (taken) continue;

    AnchorTarget t;
    t.x = cx;
    t.y = cy;
    t.anchor = best;
    t.frac_x = gx - cx;
    t.frac_y = gy - cy;
    const AnchorPrior& p = spec.anchors[static_cast<std::size_t>(best)];
    t.t_w = std::log(gw / p.w);
    t.t_l = std::log(gl / p.l);
    t.im = std::sin(g.yaw);
    t.re = std::cos(g.yaw);
    t.class_id = g.class_id;

    const double* v = head.data() + head_offset(head, cx, cy, best, spec);
    const OrientedBox predicted{sigmoid(v[kTx]) + cx, sigmoid(v[kTy]) + cy, p.w * std::exp(v[kTw]),
                                p.l * std::exp(v[kTl]), std::atan2(v[kTim], v[kTre])};
    t.iou = rotated_iou(predicted, OrientedBox{gx, gy, gw, gl, g.yaw});
    targets.push_back(t);
  }
  return targets;
}

LossBreakdown loss_with_targets(const Tensor& head, std::span<const AnchorTarget> targets, const DetectSpec& spec,
                                const LossHyper& hyper, Tensor* grad) {
  check_head(head, spec);
  const Shape& s = head.shape();
  const int anchors = static_cast<int>(spec.anchors.size());
  if (grad) *grad = Tensor(s);
  std::vector<char> responsible(static_cast<std::size_t>(s.len) * s.wid * anchors, 0);
  auto slot = [&](int x, int y, int a) { return (static_cast<std::size_t>(x) * s.wid + y) * anchors + a; };
  for (const AnchorTarget& t : targets) responsible[slot(t.x, t.y, t.anchor)] = 1;

  LossBreakdown loss;
  // Background objectness.
  for (int x = 0; x < s.len; ++x)
    for (int y = 0; y < s.wid; ++y)
      for (int a = 0; a < anchors; ++a) {
        if (responsible[slot(x, y, a)]) continue;
        const std::size_t o = head_offset(head, x, y, a, spec) + kObj;
        const double sg = sigmoid(head.values()[o]);
        loss.noobj += hyper.lambda_noobj * sg * sg;
        if (grad) grad->values()[o] += hyper.lambda_noobj * 2.0 * sg * sg * (1.0 - sg);
      }

  for (const AnchorTarget& t : targets) {
    const std::size_t base = head_offset(head, t.x, t.y, t.anchor, spec);
    const double* v = head.data() + base;
    double* g = grad ? grad->data() + base : nullptr;

    const double sx = sigmoid(v[kTx]), sy = sigmoid(v[kTy]);
    const double dx = sx - t.frac_x, dy = sy - t.frac_y;
    const double dw = v[kTw] - t.t_w, dl = v[kTl] - t.t_l;
    loss.coord += hyper.lambda_coord * (dx * dx + dy * dy + dw * dw + dl * dl);

    const double di = v[kTim] - t.im, dr = v[kTre] - t.re;
    loss.euler += hyper.lambda_coord * (di * di + dr * dr);

    const double so = sigmoid(v[kObj]);
    const double dobj = so - t.iou;
    loss.obj += dobj * dobj;

    const auto probs = softmax(std::span<const double>(v + kClass0, static_cast<std::size_t>(spec.classes)));
    double dot = 0.0;
    for (int c = 0; c < spec.classes; ++c) {
      const double r = probs[static_cast<std::size_t>(c)] - (c == t.class_id ? 1.0 : 0.0);
      loss.cls += r * r;
      dot += r * probs[static_cast<std::size_t>(c)];
    }

    if (g) {
      const double lc = hyper.lambda_coord;
      g[kTx] += lc * 2.0 * dx * sx * (1.0 - sx);
      g[kTy] += lc * 2.0 * dy * sy * (1.0 - sy);
      g[kTw] += lc * 2.0 * dw;
      g[kTl] += lc * 2.0 * dl;
      g[kTim] += lc * 2.0 * di;
      g[kTre] += lc * 2.0 * dr;
      g[kObj] += 2.0 * dobj * so * (1.0 - so);
      for (int c = 0; c < spec.classes; ++c) {
        const double pk = probs[static_cast<std::size_t>(c)];
        const double r = pk - (c == t.class_id ? 1.0 : 0.0);
        g[kClass0 + c] += 2.0 * pk * (r - dot);
      }
    }
  }
  return loss;
}

LossBreakdown yolo_loss(const Tensor& head, std::span<const GroundTruthBox> truth, const DetectSpec& spec,
                        const GridGeometry& geometry, const LossHyper& hyper, Tensor* grad) {
  const auto targets = build_targets(head, truth, spec, geometry);
  return loss_with_targets(head, targets, spec, hyper, grad);
}

}  // namespace spikeyolo
