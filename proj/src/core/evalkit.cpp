#include "evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "errors.hpp"

namespace spikeyolo {

using Vec2 = std::array<double, 2>;

std::array<Vec2, 4> OrientedBox::corners() const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double hl = 0.5 * length, hw = 0.5 * width;
  const Vec2 u{c * hl, s * hl};
  const Vec2 v{-s * hw, c * hw};
  return {Vec2{cx + u[0] + v[0], cy + u[1] + v[1]}, Vec2{cx - u[0] + v[0], cy - u[1] + v[1]},
          Vec2{cx - u[0] - v[0], cy - u[1] - v[1]}, Vec2{cx + u[0] - v[0], cy + u[1] - v[1]}};
}

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double polygon_area(const std::vector<Vec2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    twice += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(twice);
}

}  // namespace

double rotated_iou(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  std::vector<Vec2> poly(ca.begin(), ca.end());
  std::vector<Vec2> next;
  for (int e = 0; e < 4 && !poly.empty(); ++e) {
    const Vec2& p0 = cb[e];
    const Vec2& p1 = cb[(e + 1) % 4];
    next.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& cur = poly[i];
      const Vec2& nxt = poly[(i + 1) % poly.size()];
      const double dc = cross(p0, p1, cur);
      const double dn = cross(p0, p1, nxt);
      if (dc >= 0.0) next.push_back(cur);
      if ((dc >= 0.0) != (dn >= 0.0)) {
        const double t = dc / (dc - dn);
        next.push_back(Vec2{cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])});
      }
    }
    poly.swap(next);
  }
  const double inter = poly.size() < 3 ? 0.0 : polygon_area(poly);
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

EvalConfig EvalConfig::kitti() {
  EvalConfig cfg;
  cfg.iou_threshold = {{0, 0.7}, {3, 0.5}, {5, 0.5}};
  return cfg;
}

double interpolated_ap_11(std::span<const PrPoint> curve) {
  double sum = 0.0;
  for (int i = 0; i <= 10; ++i) {
    const double r = i / 10.0;
    double best = 0.0;
    for (const PrPoint& p : curve)
      if (p.recall >= r - 1e-12) best = std::max(best, p.precision);
    sum += best;
  }
  return sum / 11.0;
}

std::vector<ClassAp> average_precision(std::span<const EvalFrame> frames, const EvalConfig& cfg) {
  std::vector<ClassAp> out;
  for (const auto& [cls, threshold] : cfg.iou_threshold) {
    struct Det {
      double score;
      const std::string* frame_id;
      std::size_t frame;
      std::size_t index;
    };
    std::vector<Det> dets;
    std::vector<std::vector<char>> matched(frames.size());
    std::size_t gt_count = 0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
      matched[f].assign(frames[f].ground_truth.size(), 0);
      for (const ScoredBox& g : frames[f].ground_truth) gt_count += g.class_id == cls ? 1 : 0;
      for (std::size_t i = 0; i < frames[f].detections.size(); ++i)
        if (frames[f].detections[i].class_id == cls)
          dets.push_back({frames[f].detections[i].score, &frames[f].frame_id, f, i});
    }
    if (gt_count == 0) continue;
    std::sort(dets.begin(), dets.end(), [](const Det& a, const Det& b) {
      if (a.score != b.score) return a.score > b.score;
      return std::tie(*a.frame_id, a.index) < std::tie(*b.frame_id, b.index);
    });

    ClassAp ap;
    ap.class_id = cls;
    ap.gt_count = gt_count;
    ap.det_count = dets.size();
    std::size_t hits = 0;
    for (std::size_t k = 0; k < dets.size(); ++k) {
      const EvalFrame& frame = frames[dets[k].frame];
      const OrientedBox& box = frame.detections[dets[k].index].box;
      double best_iou = -1.0;
      std::size_t best = frame.ground_truth.size();
      for (std::size_t g = 0; g < frame.ground_truth.size(); ++g) {
        if (frame.ground_truth[g].class_id != cls || matched[dets[k].frame][g]) continue;
        const double iou = rotated_iou(box, frame.ground_truth[g].box);
        if (iou > best_iou) {
          best_iou = iou;
          best = g;
        }
      }
      if (best < frame.ground_truth.size() && best_iou >= threshold) {
        matched[dets[k].frame][best] = 1;
        ++hits;
      }
      ap.curve.push_back({static_cast<double>(hits) / static_cast<double>(k + 1),
                          static_cast<double>(hits) / static_cast<double>(gt_count)});
    }
    ap.ap = interpolated_ap_11(ap.curve);
    out.push_back(std::move(ap));
  }
  return out;
}

std::array<std::uint8_t, 3> Image::pixel(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

void Image::set(int x, int y, std::array<std::uint8_t, 3> c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  std::copy(c.begin(), c.end(), rgb.begin() + static_cast<std::ptrdiff_t>(i));
}

std::array<double, 2> BevView::to_pixel(double x, double y) const {
  const double col = (y - y_min) / (y_max - y_min) * kBevWidth;
  const double row = (x_max - x) / (x_max - x_min) * kBevHeight;
  return {col, row};
}

namespace {

void draw_line(Image& img, double x0, double y0, double x1, double y1, std::array<std::uint8_t, 3> c) {
  const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    img.set(static_cast<int>(std::floor(x0 + t * (x1 - x0))), static_cast<int>(std::floor(y0 + t * (y1 - y0))), c);
  }
}

void draw_box(Image& img, const BevView& view, const OrientedBox& box, std::array<std::uint8_t, 3> c) {
  const auto corners = box.corners();
  for (int i = 0; i < 4; ++i) {
    const auto a = view.to_pixel(corners[i][0], corners[i][1]);
    const auto b = view.to_pixel(corners[(i + 1) % 4][0], corners[(i + 1) % 4][1]);
    draw_line(img, a[0], a[1], b[0], b[1], c);
  }
}

}  // namespace

Image render_bev(const SpikeTensor& tensor, std::span<const OrientedBox> detections,
                 std::span<const OrientedBox> ground_truth, const BevView& view) {
  Image img{kBevWidth, kBevHeight, std::vector<std::uint8_t>(static_cast<std::size_t>(kBevWidth) * kBevHeight * 3, 0)};
  const Shape& s = tensor.shape();
  if (s.size() > 0) {
    // Zero marks an empty voxel in paper-literal tensors, so only positive times shade.
    double t_max = 0.0;
    for (double v : tensor.values())
      if (is_spike(v)) t_max = std::max(t_max, v);
    for (int row = 0; row < kBevHeight; ++row) {
      const int x = std::min(s.len - 1, (kBevHeight - 1 - row) * s.len / kBevHeight);
      for (int col = 0; col < kBevWidth; ++col) {
        const int y = std::min(s.wid - 1, col * s.wid / kBevWidth);
        double earliest = kNoSpike;
        for (int c = 0; c < s.ch; ++c) {
          const double v = tensor.at(x, y, c);
          if (v > 0.0 && v < earliest) earliest = v;
        }
        if (!is_spike(earliest) || t_max <= 0.0) continue;
        const auto g = static_cast<std::uint8_t>(std::lround(255.0 - 175.0 * earliest / t_max));
        img.set(col, row, {g, g, g});
      }
    }
  }
  for (const OrientedBox& b : ground_truth) draw_box(img, view, b, kGroundTruthColor);
  for (const OrientedBox& b : detections) draw_box(img, view, b, kDetectionColor);
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.rgb.begin(), image.rgb.end());
  return out;
}

}  // namespace spikeyolo
