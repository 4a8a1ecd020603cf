#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace spikeyolo {

// Spike time of a neuron that never crosses threshold.
inline constexpr double kNoSpike = std::numeric_limits<double>::infinity();

inline bool is_spike(double t) noexcept { return t < kNoSpike; }

// (len, wid, ch): len runs along the sensor's x axis, wid along y, ch is the
// channel (height slice for the input tensor, filter for layer outputs).
struct Shape {
  int len = 0;
  int wid = 0;
  int ch = 0;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(len) * static_cast<std::size_t>(wid) * static_cast<std::size_t>(ch);
  }
  std::size_t neurons() const noexcept { return size(); }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

// Dense row-major (x, y, c) grid of doubles. Used both for spike times
// (NO_SPIKE = +inf) and for the real-valued detection head.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0) : shape_(shape), values_(shape.size(), fill) {}

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(x) * static_cast<std::size_t>(shape_.wid) + static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(shape_.ch) +
           static_cast<std::size_t>(c);
  }
  double& at(int x, int y, int c) noexcept { return values_[index(x, y, c)]; }
  double at(int x, int y, int c) const noexcept { return values_[index(x, y, c)]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

using SpikeTensor = Tensor;

}  // namespace spikeyolo
