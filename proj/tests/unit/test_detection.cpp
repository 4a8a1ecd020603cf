#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "core/detection.hpp"
#include "core/errors.hpp"
#include "support/oracles.hpp"

using namespace spikeyolo;

namespace {

constexpr double kPi = std::numbers::pi;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor head_of(int len, int wid, const DetectSpec& spec, double fill = 0.0) {
  return Tensor(Shape{len, wid, spec.channels()}, fill);
}

double& value(Tensor& head, const DetectSpec& spec, int x, int y, int a, int channel) {
  return head.at(x, y, a * spec.values_per_anchor() + channel);
}

Detection box_at(double x, double len, double score, int cls = 0) {
  Detection d;
  d.x_m = x;
  d.y_m = 0.0;
  d.w_m = 1.0;
  d.l_m = len;
  d.objectness = score;
  d.class_id = cls;
  return d;
}

}  // namespace

TEST_CASE("class names") {
  CHECK(class_name(0) == "Car");
  CHECK(class_name(3) == "Pedestrian");
  CHECK(class_name(5) == "Cyclist");
  CHECK(class_id_from_name("Cyclist") == 5);
  CHECK_THROWS_AS(class_id_from_name("Bus"), Error);
}

TEST_CASE("decode examples") {
  const DetectSpec spec;
  Tensor head = head_of(4, 2, spec);
  value(head, spec, 3, 1, 2, kTim) = 1.0;
  value(head, spec, 3, 1, 2, kTre) = 0.0;
  value(head, spec, 3, 1, 0, kTre) = 1.0;
  const auto dets = decode(head, spec, 0.0);
  REQUIRE(dets.size() == 4u * 2u * 5u);
  for (const Detection& d : dets) {
    CHECK(d.b_x == d.cell_x + 0.5);
    CHECK(d.b_y == d.cell_y + 0.5);
    CHECK(d.b_w == spec.anchors[static_cast<std::size_t>(d.anchor)].w);
    CHECK(d.b_l == spec.anchors[static_cast<std::size_t>(d.anchor)].l);
    CHECK(d.objectness == 0.5);
    CHECK(d.class_probability == doctest::Approx(1.0 / 8.0));
    CHECK(d.x_m == doctest::Approx(d.b_x * 2.5));
    CHECK(d.y_m == doctest::Approx(d.b_y * 2.5 - 40.0));
    if (d.cell_x == 3 && d.cell_y == 1 && d.anchor == 0) CHECK(d.b_theta == 0.0);
    if (d.cell_x == 3 && d.cell_y == 1 && d.anchor == 2) CHECK(d.b_theta == doctest::Approx(kPi / 2));
  }
  CHECK(decode(head, spec, 0.5001).empty());
}

TEST_CASE("decode follows the closed-form box equations") {
  const DetectSpec spec;
  Tensor head = head_of(3, 3, spec);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (double& v : head.values()) v = u(rng);
  const GridGeometry geo{0.625, 0.0, -5.0};
  for (const Detection& d : decode(head, spec, 0.0, geo)) {
    const RawPrediction p = raw_prediction(head, d.cell_x, d.cell_y, d.anchor, spec);
    const AnchorPrior& prior = spec.anchors[static_cast<std::size_t>(d.anchor)];
    CHECK(d.b_x == doctest::Approx(logistic(p.t_x) + d.cell_x).epsilon(1e-14));
    CHECK(d.b_y == doctest::Approx(logistic(p.t_y) + d.cell_y).epsilon(1e-14));
    CHECK(d.b_x - d.cell_x > 0.0);
    CHECK(d.b_x - d.cell_x < 1.0);
    CHECK(d.b_w == doctest::Approx(prior.w * std::exp(p.t_w)).epsilon(1e-14));
    CHECK(d.b_l == doctest::Approx(prior.l * std::exp(p.t_l)).epsilon(1e-14));
    CHECK(d.b_w > 0.0);
    CHECK(d.b_theta > -kPi);
    CHECK(d.b_theta <= kPi);
    CHECK(d.b_theta == doctest::Approx(std::atan2(p.t_im, p.t_re)).epsilon(1e-14));
    CHECK(d.objectness == doctest::Approx(logistic(p.p0)).epsilon(1e-14));
    int best = 0;
    for (int c = 1; c < spec.classes; ++c)
      if (p.class_scores[static_cast<std::size_t>(c)] > p.class_scores[static_cast<std::size_t>(best)]) best = c;
    CHECK(d.class_id == best);
    CHECK(d.x_m == doctest::Approx(d.b_x * 0.625));
    CHECK(d.y_m == doctest::Approx(d.b_y * 0.625 - 5.0));
    CHECK(d.l_m == doctest::Approx(d.b_l * 0.625));
  }
}

TEST_CASE("yaw is invariant to a common positive scale") {
  const DetectSpec spec;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0), k(0.01, 50.0);
  for (int i = 0; i < 200; ++i) {
    Tensor head = head_of(1, 1, spec);
    const double im = u(rng), re = u(rng), s = k(rng);
    value(head, spec, 0, 0, 0, kTim) = im;
    value(head, spec, 0, 0, 0, kTre) = re;
    const double a = decode(head, spec, 0.0)[0].b_theta;
    value(head, spec, 0, 0, 0, kTim) = im * s;
    value(head, spec, 0, 0, 0, kTre) = re * s;
    CHECK(decode(head, spec, 0.0)[0].b_theta == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("decode rejects a head of the wrong width") {
  const DetectSpec spec;
  try {
    decode(Tensor(Shape{24, 32, 74}), spec, 0.5);
    FAIL("expected Decode");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Decode);
  }
}

TEST_CASE("nms") {
  SUBCASE("identical boxes") {
    const auto kept = nms({box_at(5, 4, 0.9), box_at(5, 4, 0.8)});
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].objectness == 0.9);
  }
  SUBCASE("disjoint boxes") { CHECK(nms({box_at(0, 4, 0.9), box_at(10, 4, 0.8)}).size() == 2); }
  SUBCASE("classes are suppressed separately") { CHECK(nms({box_at(5, 4, 0.9, 0), box_at(5, 4, 0.8, 3)}).size() == 2); }
  SUBCASE("chain with the middle box highest") {
    // Length 4 boxes one metre apart overlap at IoU 3/5; two metres apart at 1/3.
    const auto kept = nms({box_at(0, 4, 0.7), box_at(1, 4, 0.9), box_at(2, 4, 0.8)});
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].x_m == 1.0);
  }
  SUBCASE("chain with an end box highest") {
    const auto kept = nms({box_at(0, 4, 0.9), box_at(1, 4, 0.8), box_at(2, 4, 0.7)});
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].x_m == 0.0);
    CHECK(kept[1].x_m == 2.0);
  }
}

TEST_CASE("nms output is a subset with pairwise overlap below the threshold") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(0.0, 10.0), size(0.5, 4.0), yaw(-kPi, kPi), score(0, 1);
  std::vector<Detection> dets;
  for (int i = 0; i < 150; ++i) {
    Detection d;
    d.x_m = pos(rng);
    d.y_m = pos(rng);
    d.w_m = size(rng);
    d.l_m = size(rng);
    d.b_theta = yaw(rng);
    d.objectness = score(rng);
    d.class_id = i % 2;
    dets.push_back(d);
  }
  const auto kept = nms(dets, 0.4);
  CHECK(kept.size() < dets.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    CHECK(std::any_of(dets.begin(), dets.end(), [&](const Detection& d) {
      return d.x_m == kept[i].x_m && d.objectness == kept[i].objectness;
    }));
    for (std::size_t j = i + 1; j < kept.size(); ++j)
      if (kept[i].class_id == kept[j].class_id) CHECK(rotated_iou(kept[i].box_m(), kept[j].box_m()) < 0.4);
  }
}

TEST_CASE("euler loss") {
  const std::vector<EulerTerm> one{{0.3, -0.4, 0.0, 0.0, true}, {5.0, 5.0, 0.0, 0.0, false}};
  CHECK(euler_loss(one, 5.0) == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(euler_loss(one, 10.0) == doctest::Approx(2.5).epsilon(1e-15));
  const std::vector<EulerTerm> exact{{0.6, 0.8, 0.6, 0.8, true}};
  CHECK(euler_loss(exact, 5.0) == 0.0);
}

TEST_CASE("empty targets on a zero head leave only the background term") {
  const DetectSpec spec;
  const Tensor head = head_of(24, 32, spec);
  const LossBreakdown l = yolo_loss(head, {}, spec, GridGeometry{});
  CHECK(l.noobj == doctest::Approx(24 * 32 * 5 * 0.25 * 0.5).epsilon(1e-12));
  CHECK(l.noobj == doctest::Approx(480.0).epsilon(1e-12));
  CHECK(l.coord == 0.0);
  CHECK(l.obj == 0.0);
  CHECK(l.cls == 0.0);
  CHECK(l.euler == 0.0);
}

TEST_CASE("targets pick the best-shaped anchor at the centre cell") {
  const DetectSpec spec;
  const Tensor head = head_of(12, 16, spec);
  const GridGeometry geo{0.625, 0.0, -5.0};
  // 1.0 x 3.0 cells matches the third prior exactly.
  const GroundTruthBox g{2.0, -1.0, 0.625, 1.875, 0.3, 2};
  const auto t = build_targets(head, std::vector<GroundTruthBox>{g}, spec, geo);
  REQUIRE(t.size() == 1);
  CHECK(t[0].x == 3);
  CHECK(t[0].y == 6);
  CHECK(t[0].anchor == 2);
  CHECK(t[0].frac_x == doctest::Approx(0.2));
  CHECK(t[0].frac_y == doctest::Approx(0.4));
  CHECK(t[0].t_w == doctest::Approx(0.0));
  CHECK(t[0].im == doctest::Approx(std::sin(0.3)));
  CHECK(t[0].re == doctest::Approx(std::cos(0.3)));
  CHECK(t[0].class_id == 2);
  CHECK(t[0].iou >= 0.0);
  CHECK(t[0].iou <= 1.0);

  const GroundTruthBox outside{-1.0, 0.0, 1, 1, 0, 0};
  CHECK(build_targets(head, std::vector<GroundTruthBox>{outside}, spec, geo).empty());
  CHECK(build_targets(head, std::vector<GroundTruthBox>{g, g}, spec, geo).size() == 1);
}

TEST_CASE("a perfect head has zero loss and decodes to the target") {
  const DetectSpec spec;
  const GridGeometry geo{0.625, 0.0, -5.0};
  Tensor head = head_of(12, 16, spec);
  for (int x = 0; x < 12; ++x)
    for (int y = 0; y < 16; ++y)
      for (int a = 0; a < 5; ++a) value(head, spec, x, y, a, kObj) = -1000.0;
  // Centre of cell (3, 4) with the 0.5 x 0.5 prior, yaw 0, class Cyclist.
  const GroundTruthBox g{3.5 * 0.625, 4.5 * 0.625 - 5.0, 0.5 * 0.625, 0.5 * 0.625, 0.0, 5};
  value(head, spec, 3, 4, 3, kObj) = 40.0;
  value(head, spec, 3, 4, 3, kTre) = 1.0;
  value(head, spec, 3, 4, 3, kClass0 + 5) = 1000.0;
  const LossBreakdown l = yolo_loss(head, std::vector<GroundTruthBox>{g}, spec, geo);
  CHECK(l.total() == 0.0);

  const auto dets = decode(head, spec, 0.5, geo);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].class_id == 5);
  CHECK(dets[0].x_m == doctest::Approx(g.cx));
  CHECK(dets[0].y_m == doctest::Approx(g.cy));
  CHECK(dets[0].w_m == doctest::Approx(g.width));
  CHECK(dets[0].l_m == doctest::Approx(g.length));
  CHECK(dets[0].b_theta == 0.0);
}

TEST_CASE("loss is non-negative and its head gradient matches finite differences") {
  const DetectSpec spec;
  const GridGeometry geo{0.625, 0.0, -5.0};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0), px(0.5, 7.0), py(-4.5, 4.5), sz(0.3, 3.0), yaw(-3, 3);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor head = head_of(12, 16, spec);
    for (double& v : head.values()) v = u(rng);
    std::vector<GroundTruthBox> truth;
    for (int i = 0; i < 4; ++i) truth.push_back({px(rng), py(rng), sz(rng), sz(rng), yaw(rng), i});
    const auto targets = build_targets(head, truth, spec, geo);
    Tensor grad;
    const LossBreakdown l = loss_with_targets(head, targets, spec, LossHyper{}, &grad);
    CHECK(l.coord >= 0.0);
    CHECK(l.obj >= 0.0);
    CHECK(l.noobj >= 0.0);
    CHECK(l.cls >= 0.0);
    CHECK(l.euler >= 0.0);
    std::uniform_int_distribution<std::size_t> pick(0, head.size() - 1);
    std::vector<std::size_t> probes;
    for (const auto& t : targets)
      for (int c = 0; c < spec.values_per_anchor(); ++c)
        probes.push_back(head.index(t.x, t.y, t.anchor * spec.values_per_anchor() + c));
    for (int i = 0; i < 30; ++i) probes.push_back(pick(rng));
    for (std::size_t i : probes) {
      auto f = [&](double v) {
        Tensor h = head;
        h.values()[i] = v;
        return loss_with_targets(h, targets, spec, LossHyper{}).total();
      };
      const double fd = oracle::central_difference(f, head.values()[i], 1e-4);
      CAPTURE(i % spec.values_per_anchor());
      CHECK(oracle::relative_error(grad.values()[i], fd, 1e-3) <= 1e-5);
    }
  }
}
