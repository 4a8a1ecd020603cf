#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "core/errors.hpp"
#include "core/layers.hpp"
#include "core/spike_neuron.hpp"

using namespace spikeyolo;

namespace {

SpikeTensor random_spikes(Shape s, std::uint64_t seed, double silent_fraction = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SpikeTensor t(s);
  for (double& v : t.values()) v = u(rng) < silent_fraction ? kNoSpike : 2.0 * u(rng);
  return t;
}

LayerWeights random_kernel(int k, int cin, int cout, std::uint64_t seed, double lo, double hi, bool float_exact) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  LayerWeights w;
  w.kernel = k;
  w.in_channels = cin;
  w.out_channels = cout;
  w.kernel_values.resize(static_cast<std::size_t>(k) * k * cin * cout);
  for (double& v : w.kernel_values) v = float_exact ? static_cast<float>(u(rng)) : u(rng);
  return w;
}

// One neuron at a time: collect the receptive field and hand it to the solver.
SpikeTensor neuron_by_neuron(const SpikeTensor& in, const LayerWeights& w, std::vector<std::uint32_t>& causal) {
  const Shape& s = in.shape();
  SpikeTensor out(Shape{s.len, s.wid, w.out_channels});
  causal.assign(out.size(), 0);
  const int pad = w.kernel / 2;
  for (int x = 0; x < s.len; ++x)
    for (int y = 0; y < s.wid; ++y)
      for (int f = 0; f < w.out_channels; ++f) {
        std::vector<SynapticInput> field;
        for (int dx = 0; dx < w.kernel; ++dx)
          for (int dy = 0; dy < w.kernel; ++dy)
            for (int c = 0; c < s.ch; ++c) {
              const int ix = x + dx - pad, iy = y + dy - pad;
              if (ix < 0 || iy < 0 || ix >= s.len || iy >= s.wid) continue;
              field.push_back({in.at(ix, iy, c), w.at(dx, dy, c, f)});
            }
        const SpikeResult r = solve_spike_time(field);
        out.at(x, y, f) = r.t_out;
        causal[out.index(x, y, f)] = r.fired() ? static_cast<std::uint32_t>(r.causal_count) : 0;
      }
  return out;
}

}  // namespace

TEST_CASE("1x1 spiking conv reduces to the single neuron") {
  SpikeTensor in(Shape{1, 1, 1}, 0.0);
  LayerWeights w = random_kernel(1, 1, 1, 0, 0, 0, true);
  w.kernel_values = {2.0};
  LayerStats stats;
  const SpikeTensor out = spike_conv_forward(in, w, {}, stats);
  CHECK(out.at(0, 0, 0) == std::log(2.0));
  CHECK(stats.fired == 1);
  CHECK(stats.silent == 0);
}

TEST_CASE("1x1 kernels equal solve_spike_time exactly") {
  const SpikeTensor in = random_spikes(Shape{4, 5, 12}, 3);
  const LayerWeights w = random_kernel(1, 12, 7, 4, -0.5, 1.0, false);
  LayerStats stats;
  std::vector<std::uint32_t> causal, expect_causal;
  const SpikeTensor out = spike_conv_forward(in, w, {}, stats, 1, &causal);
  CHECK(out == neuron_by_neuron(in, w, expect_causal));
  CHECK(causal == expect_causal);
}

TEST_CASE("all-silent input gives all-silent output") {
  const SpikeTensor in(Shape{6, 6, 3}, kNoSpike);
  const LayerWeights w = random_kernel(3, 3, 5, 1, 0.5, 2.0, true);
  LayerStats stats;
  const SpikeTensor out = spike_conv_forward(in, w, {}, stats);
  CHECK(std::none_of(out.values().begin(), out.values().end(), is_spike));
  CHECK(stats.fired == 0);
  CHECK(stats.silent == out.size());
}

TEST_CASE("3x3 layer matches the per-neuron solver") {
  const SpikeTensor in = random_spikes(Shape{9, 7, 6}, 8, 0.2);
  LayerWeights w;
  SUBCASE("float-representable weights") { w = random_kernel(3, 6, 40, 9, -0.2, 0.6, true); }
  SUBCASE("double weights") { w = random_kernel(3, 6, 40, 9, -0.2, 0.6, false); }
  SUBCASE("many filters, mostly silent") { w = random_kernel(3, 6, 70, 10, -0.3, 0.25, true); }
  std::vector<std::uint32_t> causal, expect_causal;
  LayerStats stats;
  const SpikeTensor out = spike_conv_forward(in, w, {}, stats, 1, &causal);
  const SpikeTensor expect = neuron_by_neuron(in, w, expect_causal);
  CHECK(out == expect);
  CHECK(causal == expect_causal);
  const auto fired = static_cast<std::uint64_t>(std::count_if(expect.values().begin(), expect.values().end(), is_spike));
  CHECK(stats.fired == fired);
  CHECK(stats.total() == out.size());
}

TEST_CASE("ties at t = 0 match the per-neuron solver") {
  SpikeTensor in = random_spikes(Shape{6, 6, 4}, 15, 0.0);
  for (std::size_t i = 0; i < in.size(); i += 2) in.values()[i] = 0.0;
  const LayerWeights w = random_kernel(3, 4, 33, 16, -0.3, 0.5, true);
  std::vector<std::uint32_t> causal, expect_causal;
  LayerStats stats;
  CHECK(spike_conv_forward(in, w, {}, stats, 1, &causal) == neuron_by_neuron(in, w, expect_causal));
  CHECK(causal == expect_causal);
}

TEST_CASE("spiking conv output does not depend on thread count") {
  const SpikeTensor in = random_spikes(Shape{13, 11, 5}, 20);
  const LayerWeights w = random_kernel(3, 5, 37, 21, -0.2, 0.7, true);
  LayerStats s1;
  const SpikeTensor one = spike_conv_forward(in, w, {}, s1, 1);
  for (int threads : {2, 3, 8, 64}) {
    LayerStats sn;
    CHECK(spike_conv_forward(in, w, {}, sn, threads) == one);
    CHECK(sn == s1);
  }
}

TEST_CASE("spiking conv rejects a kernel of the wrong depth") {
  const SpikeTensor in(Shape{4, 4, 3}, 0.0);
  const LayerWeights w = random_kernel(3, 2, 4, 1, 0, 1, true);
  LayerStats stats;
  try {
    spike_conv_forward(in, w, {}, stats);
    FAIL("expected LayerShape");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LayerShape);
  }
}

TEST_CASE("time shifts pass through spiking conv and pooling") {
  const SpikeTensor in = random_spikes(Shape{8, 8, 4}, 30);
  const LayerWeights w = random_kernel(3, 4, 16, 31, -0.2, 0.6, true);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double d = u(rng);
    SpikeTensor shifted = in;
    for (double& v : shifted.values())
      if (is_spike(v)) v += d;
    LayerStats a, b;
    const SpikeTensor base = spike_conv_forward(in, w, {}, a);
    const SpikeTensor moved = spike_conv_forward(shifted, w, {}, b);
    for (std::size_t i = 0; i < base.size(); ++i) {
      REQUIRE(is_spike(base.values()[i]) == is_spike(moved.values()[i]));
      if (is_spike(base.values()[i])) CHECK(std::abs(moved.values()[i] - base.values()[i] - d) <= 1e-9);
    }
    const SpikeTensor pa = min_time_pool(in), pb = min_time_pool(shifted);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      REQUIRE(is_spike(pa.values()[i]) == is_spike(pb.values()[i]));
      if (is_spike(pa.values()[i])) CHECK(std::abs(pb.values()[i] - pa.values()[i] - d) <= 1e-9);
    }
  }
}

TEST_CASE("min-time pooling") {
  SpikeTensor t(Shape{2, 2, 1});
  t.at(0, 0, 0) = 0.5;
  t.at(0, 1, 0) = 0.2;
  t.at(1, 0, 0) = kNoSpike;
  t.at(1, 1, 0) = 0.9;
  std::vector<std::uint32_t> arg;
  const SpikeTensor p = min_time_pool(t, 2, 2, &arg);
  CHECK(p.shape() == Shape{1, 1, 1});
  CHECK(p.at(0, 0, 0) == 0.2);
  CHECK(arg[0] == t.index(0, 1, 0));

  const SpikeTensor silent = min_time_pool(SpikeTensor(Shape{2, 2, 3}, kNoSpike));
  CHECK(std::none_of(silent.values().begin(), silent.values().end(), is_spike));

  CHECK(min_time_pool(SpikeTensor(Shape{768, 1024, 2}, 0.0)).shape() == Shape{384, 512, 2});
  CHECK_THROWS_AS(min_time_pool(SpikeTensor(Shape{3, 4, 1})), Error);

  const SpikeTensor r = random_spikes(Shape{6, 8, 3}, 40);
  const SpikeTensor rp = min_time_pool(r);
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 4; ++y)
      for (int c = 0; c < 3; ++c) {
        const double m = std::min({r.at(2 * x, 2 * y, c), r.at(2 * x + 1, 2 * y, c), r.at(2 * x, 2 * y + 1, c),
                                   r.at(2 * x + 1, 2 * y + 1, c)});
        CHECK(rp.at(x, y, c) == m);
      }
}

TEST_CASE("reorg") {
  SpikeTensor t(Shape{2, 2, 1});
  t.at(0, 0, 0) = 1;  // a
  t.at(0, 1, 0) = 2;  // b
  t.at(1, 0, 0) = 3;  // c
  t.at(1, 1, 0) = 4;  // d
  const SpikeTensor r = reorg(t);
  CHECK(r.shape() == Shape{1, 1, 4});
  CHECK(r.values() == std::vector<double>{1, 2, 3, 4});

  const SpikeTensor big = random_spikes(Shape{8, 6, 5}, 41);
  const SpikeTensor rb = reorg(big);
  CHECK(rb.shape() == Shape{4, 3, 20});
  auto a = big.values(), b = rb.values();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);

  CHECK(reorg(SpikeTensor(Shape{48, 64, 256})).shape() == Shape{24, 32, 1024});
  CHECK_THROWS_AS(reorg(SpikeTensor(Shape{5, 4, 1})), Error);
}

TEST_CASE("route") {
  const SpikeTensor a = random_spikes(Shape{3, 4, 2}, 50), b = random_spikes(Shape{3, 4, 5}, 51);
  const SpikeTensor* one[] = {&a};
  CHECK(route(one) == a);
  const SpikeTensor* both[] = {&a, &b};
  const SpikeTensor r = route(both);
  CHECK(r.shape() == Shape{3, 4, 7});
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 4; ++y) {
      for (int c = 0; c < 2; ++c) CHECK(r.at(x, y, c) == a.at(x, y, c));
      for (int c = 0; c < 5; ++c) CHECK(r.at(x, y, 2 + c) == b.at(x, y, c));
    }
  const SpikeTensor p(Shape{24, 32, 1024}), q(Shape{24, 32, 1024});
  const SpikeTensor* table[] = {&p, &q};
  CHECK(route(table).shape() == Shape{24, 32, 2048});
  const SpikeTensor wrong(Shape{3, 5, 1});
  const SpikeTensor* bad[] = {&a, &wrong};
  CHECK_THROWS_AS(route(bad), Error);
}

TEST_CASE("linear conv") {
  SpikeTensor in = random_spikes(Shape{3, 3, 2}, 60, 0.0);
  LayerWeights id = random_kernel(1, 2, 2, 0, 0, 0, true);
  id.at(0, 0, 0, 0) = 1.0;
  id.at(0, 0, 1, 1) = 1.0;
  id.bias = {0.0, 0.0};
  CHECK(linear_conv_forward(in, id) == in);

  LayerWeights zero = random_kernel(1, 2, 3, 0, 0, 0, true);
  zero.bias = {0.5, -1.0, 2.0};
  const Tensor c = linear_conv_forward(in, zero);
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) {
      CHECK(c.at(x, y, 0) == 0.5);
      CHECK(c.at(x, y, 1) == -1.0);
      CHECK(c.at(x, y, 2) == 2.0);
    }

  // Silent inputs enter as twice the latest finite time.
  in.at(1, 1, 0) = kNoSpike;
  double latest = 0.0;
  for (double v : in.values())
    if (is_spike(v)) latest = std::max(latest, v);
  CapInfo cap;
  const Tensor capped = linear_conv_forward(in, id, {}, &cap);
  CHECK(cap.t_cap == 2.0 * latest);
  CHECK(capped.at(1, 1, 0) == 2.0 * latest);
  CHECK(linear_conv_forward(in, id, TCapPolicy{2.0, 7.0}).at(1, 1, 0) == 7.0);
  CHECK(compute_cap(SpikeTensor(Shape{1, 1, 1}, kNoSpike), {}).t_cap == 0.0);

  const LayerWeights head = random_kernel(1, 1024, 75, 2, -0.03, 0.03, true);
  CHECK(linear_conv_forward(SpikeTensor(Shape{24, 32, 1024}, 0.5), [&] {
          LayerWeights h = head;
          h.bias.assign(75, 0.0);
          return h;
        }()).shape() == Shape{24, 32, 75});
}

TEST_CASE("3x3 linear conv against a direct sum") {
  const SpikeTensor in = random_spikes(Shape{5, 4, 3}, 70, 0.0);
  LayerWeights w = random_kernel(3, 3, 2, 71, -1, 1, false);
  w.bias = {0.25, -0.5};
  const Tensor out = linear_conv_forward(in, w, {}, nullptr, 3);
  for (int x = 0; x < 5; ++x)
    for (int y = 0; y < 4; ++y)
      for (int f = 0; f < 2; ++f) {
        double s = w.bias[f];
        for (int dx = -1; dx <= 1; ++dx)
          for (int dy = -1; dy <= 1; ++dy)
            for (int c = 0; c < 3; ++c)
              if (x + dx >= 0 && x + dx < 5 && y + dy >= 0 && y + dy < 4)
                s += in.at(x + dx, y + dy, c) * w.at(dx + 1, dy + 1, c, f);
        CHECK(out.at(x, y, f) == doctest::Approx(s).epsilon(1e-12));
      }
}
