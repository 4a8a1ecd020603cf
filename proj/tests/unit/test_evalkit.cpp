#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "core/evalkit.hpp"
#include "support/oracles.hpp"

using namespace spikeyolo;

namespace {

constexpr double kPi = std::numbers::pi;

OrientedBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-2.0, 2.0), size(0.5, 3.0), yaw(-kPi, kPi);
  return OrientedBox{pos(rng), pos(rng), size(rng), size(rng), yaw(rng)};
}

OrientedBox rigid(const OrientedBox& b, double angle, double tx, double ty) {
  const double c = std::cos(angle), s = std::sin(angle);
  return OrientedBox{c * b.cx - s * b.cy + tx, s * b.cx + c * b.cy + ty, b.width, b.length, b.yaw + angle};
}

ScoredBox scored(double cx, double score, int cls = 0) { return ScoredBox{OrientedBox{cx, 0, 1, 1, 0}, cls, score}; }

EvalConfig only_car(double thr = 0.7) {
  EvalConfig c;
  c.iou_threshold[0] = thr;
  return c;
}

std::size_t count_color(const Image& img, std::array<std::uint8_t, 3> c) {
  std::size_t n = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) n += img.pixel(x, y) == c;
  return n;
}

}  // namespace

TEST_CASE("rotated IoU hand cases") {
  const OrientedBox unit{0, 0, 1, 1, 0};
  CHECK(rotated_iou(unit, unit) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rotated_iou(unit, OrientedBox{5, 0, 1, 1, 0}) == 0.0);
  CHECK(rotated_iou(unit, OrientedBox{0.5, 0, 1, 1, 0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(rotated_iou(unit, OrientedBox{1.0, 0, 1, 1, 0}) == doctest::Approx(0.0));
  // A unit square rotated 45 degrees inside a 2x2 square: area 1 over area 4.
  CHECK(rotated_iou(OrientedBox{0, 0, 1, 1, kPi / 4}, OrientedBox{0, 0, 2, 2, 0}) ==
        doctest::Approx(0.25).epsilon(1e-14));
  // Square boxes repeat every quarter turn.
  CHECK(rotated_iou(unit, OrientedBox{0, 0, 1, 1, kPi / 2}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rotated_iou(OrientedBox{0, 0, 1, 3, 0}, OrientedBox{0, 0, 1, 3, kPi}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rotated_iou(OrientedBox{0, 0, 1, 3, 0}, OrientedBox{0, 0, 1, 3, kPi / 2}) < 1.0);
}

TEST_CASE("corners are counter-clockwise and enclose the area") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const OrientedBox b = random_box(rng);
    const auto c = b.corners();
    double shoelace = 0.0;
    for (int k = 0; k < 4; ++k) shoelace += c[k][0] * c[(k + 1) % 4][1] - c[(k + 1) % 4][0] * c[k][1];
    CHECK(0.5 * shoelace == doctest::Approx(b.area()).epsilon(1e-12));
  }
}

TEST_CASE("rotated IoU agrees with point sampling") {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const OrientedBox a = random_box(rng), b = random_box(rng);
    worst = std::max(worst, std::abs(rotated_iou(a, b) - oracle::monte_carlo_iou(a, b, 200000, 100 + i)));
  }
  CHECK(worst <= 0.01);
}

TEST_CASE("rotated IoU symmetry, range and rigid invariance") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-kPi, kPi), shift(-50, 50);
  for (int i = 0; i < 500; ++i) {
    const OrientedBox a = random_box(rng), b = random_box(rng);
    const double iou = rotated_iou(a, b);
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0);
    CHECK(rotated_iou(b, a) == doctest::Approx(iou).epsilon(1e-12));
    const double t = ang(rng), dx = shift(rng), dy = shift(rng);
    CHECK(std::abs(rotated_iou(rigid(a, t, dx, dy), rigid(b, t, dx, dy)) - iou) <= 1e-9);
  }
}

TEST_CASE("eleven-point interpolation") {
  const std::vector<PrPoint> curve{{1.0, 0.5}, {0.5, 0.5}, {2.0 / 3.0, 1.0}};
  CHECK(interpolated_ap_11(curve) == doctest::Approx((6.0 + 5.0 * 2.0 / 3.0) / 11.0).epsilon(1e-14));
  CHECK(oracle::eleven_point_ap({{0.5, 1.0}, {0.5, 0.5}, {1.0, 2.0 / 3.0}}) ==
        doctest::Approx(interpolated_ap_11(curve)).epsilon(1e-14));
  CHECK(interpolated_ap_11(std::vector<PrPoint>{}) == 0.0);
}

TEST_CASE("AP fixture: hit, miss, hit over two ground-truth boxes") {
  EvalFrame f;
  f.frame_id = "f";
  f.ground_truth = {scored(0, 0), scored(10, 0)};
  f.detections = {scored(0, 0.9), scored(20, 0.8), scored(10, 0.7)};
  const auto res = average_precision(std::vector<EvalFrame>{f}, only_car());
  REQUIRE(res.size() == 1);
  CHECK(res[0].gt_count == 2);
  CHECK(res[0].det_count == 3);
  REQUIRE(res[0].curve.size() == 3);
  CHECK(res[0].curve[0].precision == 1.0);
  CHECK(res[0].curve[0].recall == 0.5);
  CHECK(res[0].curve[1].precision == 0.5);
  CHECK(res[0].curve[2].precision == doctest::Approx(2.0 / 3.0));
  CHECK(res[0].curve[2].recall == 1.0);
  CHECK(std::abs(res[0].ap - 0.8485) <= 1e-4);
  std::vector<std::pair<double, double>> rp;
  for (const auto& p : res[0].curve) rp.emplace_back(p.recall, p.precision);
  CHECK(res[0].ap == doctest::Approx(oracle::eleven_point_ap(rp)).epsilon(1e-14));
}

TEST_CASE("AP trivial cases") {
  EvalFrame f;
  f.ground_truth = {scored(0, 0)};
  f.detections = {scored(0, 0.9)};
  CHECK(average_precision(std::vector<EvalFrame>{f}, only_car())[0].ap == 1.0);
  f.detections.clear();
  const auto none = average_precision(std::vector<EvalFrame>{f}, only_car());
  REQUIRE(none.size() == 1);
  CHECK(none[0].ap == 0.0);
  // A class without ground truth is not scored.
  EvalFrame g;
  g.detections = {scored(0, 0.9)};
  CHECK(average_precision(std::vector<EvalFrame>{g}, only_car()).empty());
  // Below the IoU threshold is a miss; above is a hit.
  EvalFrame h;
  h.ground_truth = {scored(0, 0)};
  h.detections = {scored(0.3, 0.9)};  // IoU 0.7 / 1.3
  CHECK(average_precision(std::vector<EvalFrame>{h}, only_car(0.7))[0].ap == 0.0);
  CHECK(average_precision(std::vector<EvalFrame>{h}, only_car(0.5))[0].ap == 1.0);
  // Each ground-truth box matches once.
  EvalFrame d;
  d.ground_truth = {scored(0, 0)};
  d.detections = {scored(0, 0.9), scored(0, 0.8)};
  const auto dup = average_precision(std::vector<EvalFrame>{d}, only_car());
  CHECK(dup[0].curve[1].precision == 0.5);
  CHECK(EvalConfig::kitti().iou_threshold.at(0) == 0.7);
  CHECK(EvalConfig::kitti().iou_threshold.at(3) == 0.5);
  CHECK(EvalConfig::kitti().iou_threshold.at(5) == 0.5);
  CHECK(EvalConfig::kitti().iou_threshold.size() == 3);
}

TEST_CASE("AP ignores frame order and monotone score rescaling") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0, 30), jitter(-0.4, 0.4), score(0.01, 1.0);
  std::vector<EvalFrame> frames;
  for (int i = 0; i < 12; ++i) {
    EvalFrame f;
    f.frame_id = "frame" + std::to_string(i);
    for (int k = 0; k < 3; ++k) {
      const double x = pos(rng);
      f.ground_truth.push_back(scored(x, 0, k % 2 == 0 ? 0 : 3));
      f.detections.push_back(scored(x + jitter(rng), score(rng), k % 2 == 0 ? 0 : 3));
    }
    f.detections.push_back(scored(pos(rng), score(rng), 0));
    frames.push_back(f);
  }
  const EvalConfig cfg = EvalConfig::kitti();
  const auto base = average_precision(frames, cfg);
  REQUIRE(base.size() == 2);
  auto shuffled = frames;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto rescaled = frames;
  for (auto& f : rescaled)
    for (auto& d : f.detections) d.score = std::pow(d.score, 3.0) * 7.0 + 1.0;
  const auto a = average_precision(shuffled, cfg), b = average_precision(rescaled, cfg);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(a[i].ap == base[i].ap);
    CHECK(b[i].ap == base[i].ap);
  }
}

TEST_CASE("BEV raster") {
  const Image blank = render_bev(SpikeTensor(Shape{768, 1024, 21}, 0.0), {}, {});
  CHECK(blank.width == 1024);
  CHECK(blank.height == 768);
  CHECK(std::all_of(blank.rgb.begin(), blank.rgb.end(), [](std::uint8_t v) { return v == 0; }));
  const auto ppm = encode_ppm(blank);
  const std::string header = "P6\n1024 768\n255\n";
  CHECK(std::string(ppm.begin(), ppm.begin() + static_cast<std::ptrdiff_t>(header.size())) == header);
  CHECK(ppm.size() == header.size() + 1024u * 768u * 3u);

  // Axis-aligned 8 m x 4 m box at x = 30, y = 0: rows 332.8..435.2, columns 486.4..537.6.
  const OrientedBox det{30, 0, 4, 8, 0};
  const Image one = render_bev(SpikeTensor(Shape{8, 8, 2}, 0.0), std::vector<OrientedBox>{det}, {});
  const auto top = BevView{}.to_pixel(34, 0), bottom = BevView{}.to_pixel(26, 0);
  const auto left = BevView{}.to_pixel(30, -2), right = BevView{}.to_pixel(30, 2);
  CHECK(top[1] == doctest::Approx(332.8));
  CHECK(bottom[1] == doctest::Approx(435.2));
  CHECK(left[0] == doctest::Approx(486.4));
  auto red_in_row = [&](int row) {
    int n = 0;
    for (int x = 0; x < 1024; ++x) n += one.pixel(x, row) == kDetectionColor;
    return n;
  };
  auto red_in_col = [&](int col) {
    int n = 0;
    for (int y = 0; y < 768; ++y) n += one.pixel(col, y) == kDetectionColor;
    return n;
  };
  CHECK(red_in_row(static_cast<int>(top[1])) >= 40);
  CHECK(red_in_row(static_cast<int>(std::floor(bottom[1]))) >= 40);
  CHECK(red_in_col(static_cast<int>(std::floor(left[0]))) >= 80);
  CHECK(red_in_col(static_cast<int>(std::floor(right[0]))) >= 80);
  CHECK(red_in_row(static_cast<int>(top[1]) + 40) == 2);
  CHECK(count_color(one, kGroundTruthColor) == 0);

  const Image both = render_bev(SpikeTensor(Shape{8, 8, 2}, 0.0), std::vector<OrientedBox>{det},
                                std::vector<OrientedBox>{OrientedBox{10, 10, 2, 4, 0.5}});
  CHECK(count_color(both, kGroundTruthColor) > 0);
  CHECK(encode_ppm(both) == encode_ppm(render_bev(SpikeTensor(Shape{8, 8, 2}, 0.0), std::vector<OrientedBox>{det},
                                                  std::vector<OrientedBox>{OrientedBox{10, 10, 2, 4, 0.5}})));

  SpikeTensor occupied(Shape{768, 1024, 21}, 0.0);
  occupied.at(384, 512, 3) = 0.5;
  const Image shaded = render_bev(occupied, {}, {});
  const auto px = BevView{}.to_pixel(384 * 0.078125 + 0.01, 0.01);
  const auto c = shaded.pixel(static_cast<int>(px[0]), static_cast<int>(px[1]));
  CHECK(c[0] > 0);
  CHECK(c[0] == c[1]);
}
