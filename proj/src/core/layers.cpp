#include "layers.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "parallel.hpp"

namespace spikeyolo {

namespace {

constexpr int kFilterBlock = 32;

struct ScanItem {
  double z;
  double z_next;  // +inf after the last admissible input
  std::uint32_t row;
  bool closes;  // last member of its tie group
};

struct TimedRow {
  double time;
  std::uint32_t row;     // kernel row (dx, dy, c)
  std::uint32_t source;  // flat input index
};

// Spiking inputs of each receptive field, sorted by (time, row). Every input pixel is sorted once
// and a field is the stable merge of its pixel runs, which are visited in increasing row order.
class ReceptiveFields {
 public:
  ReceptiveFields(const SpikeTensor& input, const LayerWeights& w) : input_(input), w_(w) {
    const Shape& s = input.shape();
    const std::size_t pixels = static_cast<std::size_t>(s.len) * s.wid;
    offsets_.assign(pixels + 1, 0);
    for (std::size_t p = 0; p < pixels; ++p) {
      const std::size_t base = p * s.ch;
      const std::size_t first = sorted_.size();
      for (int c = 0; c < s.ch; ++c)
        if (is_spike(input.values()[base + c]))
          sorted_.push_back({input.values()[base + c], static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(base + c)});
      std::stable_sort(sorted_.begin() + static_cast<std::ptrdiff_t>(first), sorted_.end(),
                       [](const TimedRow& a, const TimedRow& b) { return a.time < b.time; });
      offsets_[p + 1] = sorted_.size();
    }
  }

  struct Scratch {
    std::vector<std::size_t> runs, next;
    std::vector<TimedRow> merged;
  };

  void gather(int x, int y, std::vector<TimedRow>& items, Scratch& sc) const {
    const Shape& s = input_.shape();
    const int pad = w_.kernel / 2;
    items.clear();
    sc.runs.clear();
    for (int dx = 0; dx < w_.kernel; ++dx) {
      const int ix = x + dx - pad;
      if (ix < 0 || ix >= s.len) continue;
      for (int dy = 0; dy < w_.kernel; ++dy) {
        const int iy = y + dy - pad;
        if (iy < 0 || iy >= s.wid) continue;
        const std::size_t p = static_cast<std::size_t>(ix) * s.wid + iy;
        const auto row0 = static_cast<std::uint32_t>(w_.row(dx, dy, 0));
        sc.runs.push_back(items.size());
        for (std::size_t k = offsets_[p]; k < offsets_[p + 1]; ++k) {
          TimedRow r = sorted_[k];
          r.row += row0;
          items.push_back(r);
        }
      }
    }
    sc.runs.push_back(items.size());
    while (sc.runs.size() > 2) {
      sc.merged.resize(items.size());
      sc.next.clear();
      std::size_t r = 0;
      for (; r + 2 < sc.runs.size(); r += 2) {
        sc.next.push_back(sc.runs[r]);
        std::merge(items.begin() + static_cast<std::ptrdiff_t>(sc.runs[r]), items.begin() + static_cast<std::ptrdiff_t>(sc.runs[r + 1]),
                   items.begin() + static_cast<std::ptrdiff_t>(sc.runs[r + 1]), items.begin() + static_cast<std::ptrdiff_t>(sc.runs[r + 2]),
                   sc.merged.begin() + static_cast<std::ptrdiff_t>(sc.runs[r]),
                   [](const TimedRow& a, const TimedRow& b) { return a.time < b.time; });
      }
      if (r + 1 < sc.runs.size()) {
        sc.next.push_back(sc.runs[r]);
        std::copy(items.begin() + static_cast<std::ptrdiff_t>(sc.runs[r]), items.begin() + static_cast<std::ptrdiff_t>(sc.runs[r + 1]),
                  sc.merged.begin() + static_cast<std::ptrdiff_t>(sc.runs[r]));
      }
      sc.next.push_back(items.size());
      items.swap(sc.merged);
      sc.runs.swap(sc.next);
    }
  }

 private:
  const SpikeTensor& input_;
  const LayerWeights& w_;
  std::vector<TimedRow> sorted_;
  std::vector<std::size_t> offsets_;
};

// Filter panels [block][row][kFilterBlock], zero padded past the last filter.
template <typename T>
void build_panels(const LayerWeights& w, std::size_t rows, int blocks, std::vector<T>& panels) {
  const int filters = w.out_channels;
  panels.assign(static_cast<std::size_t>(blocks) * rows * kFilterBlock, T{0});
  for (int b = 0; b < blocks; ++b)
    for (std::size_t r = 0; r < rows; ++r)
      for (int f = 0; f < kFilterBlock && b * kFilterBlock + f < filters; ++f)
        panels[(static_cast<std::size_t>(b) * rows + r) * kFilterBlock + f] =
            static_cast<T>(w.kernel_values[r * filters + b * kFilterBlock + f]);
}

void check_kernel(const Shape& in, const LayerWeights& w) {
  if (w.in_channels != in.ch)
    fail(ErrorCode::LayerShape, "kernel depth " + std::to_string(w.in_channels) + " does not match input " + to_string(in));
  if (w.kernel <= 0 || w.kernel % 2 == 0) fail(ErrorCode::LayerShape, "kernel size must be odd");
}

}  // namespace

SpikeTensor spike_conv_forward(const SpikeTensor& input, const LayerWeights& weights, const NeuronConfig& cfg,
                               LayerStats& stats, int threads, std::vector<std::uint32_t>* causal) {
  const Shape& in = input.shape();
  check_kernel(in, weights);
  const int filters = weights.out_channels;
  SpikeTensor out(Shape{in.len, in.wid, filters}, kNoSpike);
  if (causal) causal->assign(out.size(), 0);

  const std::size_t rows = weights.kernel_values.size() / static_cast<std::size_t>(std::max(filters, 1));
  const int blocks = (filters + kFilterBlock - 1) / kFilterBlock;
  bool float_exact = true;
  for (double v : weights.kernel_values) float_exact = float_exact && static_cast<double>(static_cast<float>(v)) == v;
  std::vector<float> panels_f;
  std::vector<double> panels_d;
  if (float_exact)
    build_panels(weights, rows, blocks, panels_f);
  else
    build_panels(weights, rows, blocks, panels_d);

  const ReceptiveFields fields(input, weights);
  const double tau = cfg.tau_syn;
  const double threshold = cfg.threshold;
  const std::size_t chunks = chunk_count(static_cast<std::size_t>(in.len), threads);
  std::vector<LayerStats> partial(chunks);
  parallel_chunks(static_cast<std::size_t>(in.len), threads, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    std::vector<TimedRow> items;
    ReceptiveFields::Scratch sc;
    std::vector<ScanItem> scan;
    std::vector<std::size_t> offsets(static_cast<std::size_t>(in.wid) + 1);
    std::vector<double> t_ref(in.wid);
    std::vector<double> zout(static_cast<std::size_t>(in.wid) * filters);
    std::vector<std::uint32_t> admitted(zout.size());
    LayerStats local;
    for (int x = static_cast<int>(begin); x < static_cast<int>(end); ++x) {
      scan.clear();
      for (int y = 0; y < in.wid; ++y) {
        offsets[y] = scan.size();
        fields.gather(x, y, items, sc);
        t_ref[y] = items.empty() ? 0.0 : items.front().time;
        // z = exp((t - t_ref) / tau); the sequence stops at the first overflow.
        const std::size_t first = scan.size();
        for (std::size_t j = 0; j < items.size(); ++j) {
          const double z = std::exp((items[j].time - t_ref[y]) / tau);
          if (!std::isfinite(z)) break;
          const bool closes = j + 1 == items.size() || items[j + 1].time != items[j].time;
          scan.push_back({z, kNoSpike, items[j].row, closes});
        }
        for (std::size_t k = first; k + 1 < scan.size(); ++k) scan[k].z_next = scan[k + 1].z;
      }
      offsets[in.wid] = scan.size();
      std::fill(zout.begin(), zout.end(), kNoSpike);
      std::fill(admitted.begin(), admitted.end(), 0u);

      for (int b = 0; b < blocks; ++b) {
        const int f0 = b * kFilterBlock;
        const int nb = std::min(kFilterBlock, filters - f0);
        const std::size_t panel = static_cast<std::size_t>(b) * rows * kFilterBlock;
        for (int y = 0; y < in.wid; ++y) {
          double ws[kFilterBlock] = {};
          double zs[kFilterBlock] = {};
          double open[kFilterBlock];
          std::fill(open, open + kFilterBlock, 0.0);
          std::fill(open, open + nb, 1.0);
          int active = nb;
          const std::size_t pos = static_cast<std::size_t>(y) * filters + f0;
          auto run = [&](const auto* wbase) {
          for (std::size_t j = offsets[y]; j < offsets[y + 1] && active > 0; ++j) {
            const ScanItem& it = scan[j];
            const double z = it.z;
            const auto* wr = wbase + panel + static_cast<std::size_t>(it.row) * kFilterBlock;
            if (!it.closes) {
              for (int f = 0; f < kFilterBlock; ++f) {
                ws[f] += wr[f];
                zs[f] += static_cast<double>(wr[f]) * z;
              }
              continue;
            }
            const double z_next = it.z_next;
            int hits = 0;
            for (int f = 0; f < kFilterBlock; ++f) {
              ws[f] += wr[f];
              zs[f] += static_cast<double>(wr[f]) * z;
              hits += (open[f] > 0.0) & crossing_in_window(ws[f] - threshold, zs[f], z, z_next);
            }
            if (hits == 0) continue;
            for (int f = 0; f < nb; ++f) {
              if (!(open[f] > 0.0 && crossing_in_window(ws[f] - threshold, zs[f], z, z_next))) continue;
              open[f] = 0.0;
              --active;
              const double zo = zs[f] / (ws[f] - threshold);
              if (!std::isfinite(zo)) continue;
              zout[pos + f] = std::max(zo, z);
              admitted[pos + f] = static_cast<std::uint32_t>(j - offsets[y] + 1);
            }
          }
          };
          if (float_exact)
            run(panels_f.data());
          else
            run(panels_d.data());
        }
      }

      for (int y = 0; y < in.wid; ++y) {
        double* o = out.data() + out.index(x, y, 0);
        const double* zr = zout.data() + static_cast<std::size_t>(y) * filters;
        for (int f = 0; f < filters; ++f) {
          if (is_spike(zr[f])) {
            o[f] = t_ref[y] + tau * std::log(zr[f]);
            ++local.fired;
          } else {
            ++local.silent;
          }
        }
        if (causal)
          std::copy(admitted.begin() + static_cast<std::ptrdiff_t>(y) * filters,
                    admitted.begin() + static_cast<std::ptrdiff_t>(y + 1) * filters,
                    causal->begin() + static_cast<std::ptrdiff_t>(out.index(x, y, 0)));
      }
    }
    partial[chunk] = local;
  });
  for (const LayerStats& p : partial) stats += p;
  return out;
}

SpikeTensor min_time_pool(const SpikeTensor& input, int window, int stride, std::vector<std::uint32_t>* argmin) {
  const Shape& in = input.shape();
  if (window <= 0 || stride <= 0) fail(ErrorCode::LayerShape, "pool window and stride must be positive");
  if (in.len % stride || in.wid % stride)
    fail(ErrorCode::LayerShape, "input " + to_string(in) + " not divisible by stride " + std::to_string(stride));
  const Shape os{in.len / stride, in.wid / stride, in.ch};
  SpikeTensor out(os, kNoSpike);
  if (argmin) argmin->assign(out.size(), kNoArgmin);
  for (int x = 0; x < os.len; ++x)
    for (int y = 0; y < os.wid; ++y)
      for (int c = 0; c < os.ch; ++c) {
        double best = kNoSpike;
        std::uint32_t at = kNoArgmin;
        for (int dx = 0; dx < window; ++dx)
          for (int dy = 0; dy < window; ++dy) {
            const int ix = x * stride + dx, iy = y * stride + dy;
            if (ix >= in.len || iy >= in.wid) continue;
            const std::size_t idx = input.index(ix, iy, c);
            if (input.values()[idx] < best) {
              best = input.values()[idx];
              at = static_cast<std::uint32_t>(idx);
            }
          }
        const std::size_t o = out.index(x, y, c);
        out.values()[o] = best;
        if (argmin) (*argmin)[o] = at;
      }
  return out;
}

SpikeTensor reorg(const SpikeTensor& input, int stride) {
  const Shape& in = input.shape();
  if (stride <= 0 || in.len % stride || in.wid % stride)
    fail(ErrorCode::LayerShape, "input " + to_string(in) + " not divisible by stride " + std::to_string(stride));
  const Shape os{in.len / stride, in.wid / stride, in.ch * stride * stride};
  SpikeTensor out(os);
  for (int x = 0; x < os.len; ++x)
    for (int y = 0; y < os.wid; ++y)
      for (int bx = 0; bx < stride; ++bx)
        for (int by = 0; by < stride; ++by) {
          const double* src = input.data() + input.index(x * stride + bx, y * stride + by, 0);
          double* dst = out.data() + out.index(x, y, (bx * stride + by) * in.ch);
          std::copy(src, src + in.ch, dst);
        }
  return out;
}

SpikeTensor route(std::span<const SpikeTensor* const> inputs) {
  if (inputs.empty()) fail(ErrorCode::LayerShape, "route needs at least one input");
  Shape os = inputs.front()->shape();
  os.ch = 0;
  for (const SpikeTensor* t : inputs) {
    if (t->shape().len != os.len || t->shape().wid != os.wid)
      fail(ErrorCode::LayerShape, "route inputs disagree spatially: " + to_string(inputs.front()->shape()) + " vs " +
                                      to_string(t->shape()));
    os.ch += t->shape().ch;
  }
  SpikeTensor out(os);
  for (int x = 0; x < os.len; ++x)
    for (int y = 0; y < os.wid; ++y) {
      double* dst = out.data() + out.index(x, y, 0);
      for (const SpikeTensor* t : inputs) {
        const double* src = t->data() + t->index(x, y, 0);
        dst = std::copy(src, src + t->shape().ch, dst);
      }
    }
  return out;
}

CapInfo compute_cap(const Tensor& input, const TCapPolicy& policy) {
  CapInfo cap;
  if (policy.fixed) {
    cap.t_cap = *policy.fixed;
    return cap;
  }
  double best = -kNoSpike;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double v = input.values()[i];
    if (is_spike(v) && v > best) {
      best = v;
      cap.argmax = i;
    }
  }
  cap.t_cap = cap.argmax == static_cast<std::size_t>(-1) ? 0.0 : policy.factor * best;
  return cap;
}

Tensor linear_conv_forward(const Tensor& input, const LayerWeights& weights, const TCapPolicy& policy, CapInfo* cap_out,
                           int threads) {
  const Shape& in = input.shape();
  check_kernel(in, weights);
  const CapInfo cap = compute_cap(input, policy);
  if (cap_out) *cap_out = cap;
  const int filters = weights.out_channels;
  Tensor out(Shape{in.len, in.wid, filters});
  const int pad = weights.kernel / 2;
  parallel_chunks(static_cast<std::size_t>(in.len), threads, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (int x = static_cast<int>(begin); x < static_cast<int>(end); ++x)
      for (int y = 0; y < in.wid; ++y) {
        double* o = out.data() + out.index(x, y, 0);
        for (int f = 0; f < filters; ++f) o[f] = weights.bias.empty() ? 0.0 : weights.bias[f];
        for (int dx = 0; dx < weights.kernel; ++dx) {
          const int ix = x + dx - pad;
          if (ix < 0 || ix >= in.len) continue;
          for (int dy = 0; dy < weights.kernel; ++dy) {
            const int iy = y + dy - pad;
            if (iy < 0 || iy >= in.wid) continue;
            const double* src = input.data() + input.index(ix, iy, 0);
            for (int c = 0; c < in.ch; ++c) {
              const double v = is_spike(src[c]) ? src[c] : cap.t_cap;
              const double* wr = weights.kernel_values.data() + weights.row(dx, dy, c) * filters;
              for (int f = 0; f < filters; ++f) o[f] += v * wr[f];
            }
          }
        }
      }
  });
  return out;
}

void spike_conv_backward(const SpikeTensor& input, const SpikeTensor& output, std::span<const std::uint32_t> causal,
                         const LayerWeights& weights, const NeuronConfig& cfg, const Tensor& grad_output,
                         Tensor& grad_input, std::vector<double>& grad_kernel) {
  const Shape& in = input.shape();
  const int filters = weights.out_channels;
  const double tau = cfg.tau_syn;
  const ReceptiveFields fields(input, weights);
  ReceptiveFields::Scratch sc;
  std::vector<TimedRow> items;
  std::vector<double> zs;
  for (int x = 0; x < in.len; ++x)
    for (int y = 0; y < in.wid; ++y) {
      const std::size_t base = output.index(x, y, 0);
      bool any = false;
      for (int f = 0; f < filters; ++f) any = any || (causal[base + f] > 0 && grad_output.values()[base + f] != 0.0);
      if (!any) continue;
      fields.gather(x, y, items, sc);
      const double t_ref = items.front().time;
      zs.resize(items.size());
      for (std::size_t j = 0; j < items.size(); ++j) zs[j] = std::exp((items[j].time - t_ref) / tau);
      for (int f = 0; f < filters; ++f) {
        const std::uint32_t k = causal[base + f];
        const double g = grad_output.values()[base + f];
        if (k == 0 || g == 0.0) continue;
        double wsum = 0.0;
        for (std::uint32_t j = 0; j < k; ++j) wsum += weights.kernel_values[static_cast<std::size_t>(items[j].row) * filters + f];
        const double denom = wsum - cfg.threshold;
        const double z_out = std::exp((output.values()[base + f] - t_ref) / tau);
        const double scale = g / (denom * z_out);
        for (std::uint32_t j = 0; j < k; ++j) {
          const std::size_t wi = static_cast<std::size_t>(items[j].row) * filters + f;
          grad_kernel[wi] += scale * tau * (zs[j] - z_out);
          grad_input.values()[items[j].source] += scale * weights.kernel_values[wi] * zs[j];
        }
      }
    }
}

void min_time_pool_backward(std::span<const std::uint32_t> argmin, const Tensor& grad_output, Tensor& grad_input) {
  for (std::size_t o = 0; o < argmin.size(); ++o)
    if (argmin[o] != kNoArgmin) grad_input.values()[argmin[o]] += grad_output.values()[o];
}

void reorg_backward(const Tensor& grad_output, int stride, Tensor& grad_input) {
  const Shape& os = grad_output.shape();
  const int ch = grad_input.shape().ch;
  for (int x = 0; x < os.len; ++x)
    for (int y = 0; y < os.wid; ++y)
      for (int bx = 0; bx < stride; ++bx)
        for (int by = 0; by < stride; ++by) {
          const double* src = grad_output.data() + grad_output.index(x, y, (bx * stride + by) * ch);
          double* dst = grad_input.data() + grad_input.index(x * stride + bx, y * stride + by, 0);
          for (int c = 0; c < ch; ++c) dst[c] += src[c];
        }
}

void route_backward(const Tensor& grad_output, std::span<Tensor* const> grad_inputs) {
  const Shape& os = grad_output.shape();
  for (int x = 0; x < os.len; ++x)
    for (int y = 0; y < os.wid; ++y) {
      const double* src = grad_output.data() + grad_output.index(x, y, 0);
      for (Tensor* g : grad_inputs) {
        double* dst = g->data() + g->index(x, y, 0);
        for (int c = 0; c < g->shape().ch; ++c) dst[c] += *src++;
      }
    }
}

void linear_conv_backward(const Tensor& input, const LayerWeights& weights, const CapInfo& cap,
                          const TCapPolicy& policy, const Tensor& grad_output, Tensor& grad_input,
                          std::vector<double>& grad_kernel, std::vector<double>& grad_bias) {
  const Shape& in = input.shape();
  const int filters = weights.out_channels;
  const int pad = weights.kernel / 2;
  double grad_cap = 0.0;
  for (int x = 0; x < in.len; ++x)
    for (int y = 0; y < in.wid; ++y) {
      const double* g = grad_output.data() + grad_output.index(x, y, 0);
      for (int f = 0; f < filters && !grad_bias.empty(); ++f) grad_bias[f] += g[f];
      for (int dx = 0; dx < weights.kernel; ++dx) {
        const int ix = x + dx - pad;
        if (ix < 0 || ix >= in.len) continue;
        for (int dy = 0; dy < weights.kernel; ++dy) {
          const int iy = y + dy - pad;
          if (iy < 0 || iy >= in.wid) continue;
          const std::size_t src = input.index(ix, iy, 0);
          for (int c = 0; c < in.ch; ++c) {
            const double raw = input.values()[src + c];
            const double v = is_spike(raw) ? raw : cap.t_cap;
            const std::size_t row = weights.row(dx, dy, c) * filters;
            double gin = 0.0;
            for (int f = 0; f < filters; ++f) {
              grad_kernel[row + f] += v * g[f];
              gin += weights.kernel_values[row + f] * g[f];
            }
            if (is_spike(raw)) grad_input.values()[src + c] += gin;
            else grad_cap += gin;
          }
        }
      }
    }
  if (!policy.fixed && cap.argmax != static_cast<std::size_t>(-1))
    grad_input.values()[cap.argmax] += policy.factor * grad_cap;
}

}  // namespace spikeyolo
