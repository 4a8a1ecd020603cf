#include "network.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <sstream>

#include "binary_io.hpp"
#include "errors.hpp"

namespace spikeyolo {

std::string to_string(const Shape& s) {
  return std::to_string(s.len) + "x" + std::to_string(s.wid) + "x" + std::to_string(s.ch);
}

const char* layer_kind_name(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::SpikeConv: return "spike_conv";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Reorg: return "reorg";
    case LayerKind::Route: return "route";
    case LayerKind::Conv: return "conv";
  }
  return "?";
}

bool NetworkSpec::skip_connections() const noexcept {
  return std::any_of(layers.begin(), layers.end(), [](const LayerSpec& l) { return l.kind == LayerKind::Route; });
}

int NetworkSpec::spike_layer_count() const noexcept {
  return static_cast<int>(
      std::count_if(layers.begin(), layers.end(), [](const LayerSpec& l) { return l.kind == LayerKind::SpikeConv; }));
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int parse_int(std::string_view s, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) fail(ErrorCode::Config, what + ": expected an integer, got '" + std::string(s) + "'");
  return v;
}

double parse_double(std::string_view s, const std::string& what) {
  std::istringstream in{std::string(s)};
  double v = 0.0;
  in >> v;
  if (!in || !in.eof()) fail(ErrorCode::Config, what + ": expected a number, got '" + std::string(s) + "'");
  return v;
}

struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, std::string, std::less<>> keys;

  std::optional<std::string_view> get(std::string_view key) const {
    const auto it = keys.find(key);
    if (it == keys.end()) return std::nullopt;
    return std::string_view(it->second);
  }
};

std::string layer_label(const LayerSpec& l) {
  return "layer " + std::to_string(l.index) + " (" + layer_kind_name(l.kind) + ")";
}

void check_keys(const Section& s, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : s.keys)
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      fail(ErrorCode::Config, "line " + std::to_string(s.line) + ": unknown key '" + k + "' in [" + s.name + "]");
}

LayerKind parse_kind(std::string_view s, int line) {
  if (s == "spike_conv") return LayerKind::SpikeConv;
  if (s == "maxpool" || s == "max") return LayerKind::MaxPool;
  if (s == "reorg") return LayerKind::Reorg;
  if (s == "route") return LayerKind::Route;
  if (s == "conv") return LayerKind::Conv;
  fail(ErrorCode::Config, "line " + std::to_string(line) + ": unknown layer kind '" + std::string(s) + "'");
}

void infer_output(LayerSpec& l, const std::vector<LayerSpec>& done) {
  const Shape& in = l.input;
  auto shape_error = [&](const std::string& why) { fail(ErrorCode::ConfigShape, layer_label(l) + ": " + why); };
  switch (l.kind) {
    case LayerKind::SpikeConv:
    case LayerKind::Conv:
      if (l.filters <= 0) shape_error("filters must be positive");
      if (l.kernel <= 0 || l.kernel % 2 == 0) shape_error("kernel must be a positive odd size");
      if (l.stride != 1) shape_error("only stride 1 (same padding) is supported");
      l.output = Shape{in.len, in.wid, l.filters};
      break;
    case LayerKind::MaxPool:
      if (l.kernel == 0) l.kernel = 2;
      if (l.stride <= 0 || l.kernel != l.stride) shape_error("pooling window must equal its stride");
      if (in.len % l.stride || in.wid % l.stride)
        shape_error("input " + to_string(in) + " not divisible by stride " + std::to_string(l.stride));
      l.output = Shape{in.len / l.stride, in.wid / l.stride, in.ch};
      break;
    case LayerKind::Reorg:
      if (l.stride <= 0) shape_error("stride must be positive");
      if (in.len % l.stride || in.wid % l.stride)
        shape_error("input " + to_string(in) + " not divisible by stride " + std::to_string(l.stride));
      l.output = Shape{in.len / l.stride, in.wid / l.stride, in.ch * l.stride * l.stride};
      break;
    case LayerKind::Route: {
      if (l.route_sources.empty()) shape_error("route needs at least one source");
      Shape out{0, 0, 0};
      for (int src : l.route_sources) {
        if (src < 1 || src >= l.index) shape_error("route source " + std::to_string(src) + " is not an earlier layer");
        const Shape& s = done[static_cast<std::size_t>(src - 1)].output;
        if (out.ch == 0) {
          out = s;
        } else {
          if (s.len != out.len || s.wid != out.wid)
            shape_error("route sources disagree spatially: " + to_string(out) + " vs " + to_string(s));
          out.ch += s.ch;
        }
      }
      l.input = out;
      l.output = out;
      break;
    }
  }
}

}  // namespace

Shape parse_shape(std::string_view text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 3) fail(ErrorCode::Config, "shape '" + std::string(text) + "' must be LxWxC");
  return Shape{parse_int(parts[0], "shape"), parse_int(parts[1], "shape"), parse_int(parts[2], "shape")};
}

NetworkSpec parse_config(std::string_view text) {
  std::vector<Section> sections;
  int line_no = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": unterminated section header");
      sections.push_back(Section{std::string(trim(line.substr(1, line.size() - 2))), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": expected key = value");
    if (sections.empty()) fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": key outside of a section");
    std::string key(trim(line.substr(0, eq)));
    if (!sections.back().keys.emplace(key, std::string(trim(line.substr(eq + 1)))).second)
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }

  NetworkSpec net;
  bool have_net = false;
  bool have_detect = false;
  std::optional<std::string> declared_head;
  for (const Section& s : sections) {
    if (s.name == "net") {
      if (have_net) fail(ErrorCode::Config, "duplicate [net] section");
      have_net = true;
      check_keys(s, {"input", "threshold", "tau_syn", "voxel_size"});
      const auto input = s.get("input");
      if (!input) fail(ErrorCode::Config, "[net] requires input = LxWxC");
      net.input = parse_shape(*input);
      if (auto v = s.get("threshold")) net.neuron.threshold = parse_double(*v, "threshold");
      if (auto v = s.get("tau_syn")) net.neuron.tau_syn = parse_double(*v, "tau_syn");
      if (auto v = s.get("voxel_size")) net.voxel_size = parse_double(*v, "voxel_size");
    } else if (s.name == "layer") {
      if (!have_net) fail(ErrorCode::Config, "line " + std::to_string(s.line) + ": [layer] before [net]");
      check_keys(s, {"kind", "filters", "kernel", "stride", "route", "input", "output"});
      LayerSpec l;
      l.index = static_cast<int>(net.layers.size()) + 1;
      const auto kind = s.get("kind");
      if (!kind) fail(ErrorCode::Config, "line " + std::to_string(s.line) + ": [layer] requires kind");
      l.kind = parse_kind(*kind, s.line);
      if (auto v = s.get("filters")) l.filters = parse_int(*v, "filters");
      if (auto v = s.get("kernel")) l.kernel = parse_int(*v, "kernel");
      if (auto v = s.get("stride")) l.stride = parse_int(*v, "stride");
      if (auto v = s.get("route")) {
        if (l.kind != LayerKind::Route) fail(ErrorCode::Config, layer_label(l) + ": route key on a non-route layer");
        for (auto part : split(*v, ',')) l.route_sources.push_back(parse_int(part, "route"));
      }
      l.input = net.layers.empty() ? net.input : net.layers.back().output;
      if (auto v = s.get("input"); v && l.kind != LayerKind::Route) {
        const Shape declared = parse_shape(*v);
        if (declared != l.input)
          fail(ErrorCode::ConfigShape,
               layer_label(l) + ": declared input " + to_string(declared) + " but receives " + to_string(l.input));
      }
      infer_output(l, net.layers);
      if (auto v = s.get("output")) {
        const Shape declared = parse_shape(*v);
        if (declared != l.output)
          fail(ErrorCode::ConfigShape,
               layer_label(l) + ": declared output " + to_string(declared) + " but produces " + to_string(l.output));
      }
      net.layers.push_back(std::move(l));
    } else if (s.name == "detect") {
      if (have_detect) fail(ErrorCode::Config, "duplicate [detect] section");
      have_detect = true;
      check_keys(s, {"anchors", "classes", "output"});
      if (auto v = s.get("classes")) net.detect.classes = parse_int(*v, "classes");
      if (auto v = s.get("anchors")) {
        net.detect.anchors.clear();
        std::istringstream in{std::string(*v)};
        std::string pair;
        while (in >> pair) {
          const auto wl = split(pair, ',');
          if (wl.size() != 2) fail(ErrorCode::Config, "anchor '" + pair + "' must be w,l");
          AnchorPrior a{parse_double(wl[0], "anchor"), parse_double(wl[1], "anchor")};
          if (!(a.w > 0.0) || !(a.l > 0.0)) fail(ErrorCode::Config, "anchor '" + pair + "' must be positive");
          net.detect.anchors.push_back(a);
        }
      }
      if (auto v = s.get("output")) declared_head = std::string(*v);
    } else {
      fail(ErrorCode::Config, "line " + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
  }

  if (!have_net) fail(ErrorCode::Config, "missing [net] section");
  if (net.input.len <= 0 || net.input.wid <= 0 || net.input.ch <= 0)
    fail(ErrorCode::ConfigShape, "input shape " + to_string(net.input) + " must be positive");
  if (net.layers.empty()) fail(ErrorCode::Config, "no layers");
  if (net.detect.anchors.empty() || net.detect.classes <= 0)
    fail(ErrorCode::Config, "[detect] needs at least one anchor and one class");
  const LayerSpec& last = net.layers.back();
  if (last.kind != LayerKind::Conv)
    fail(ErrorCode::ConfigShape, layer_label(last) + ": the final layer must be a traditional conv");
  if (last.output.ch != net.detect.channels())
    fail(ErrorCode::ConfigShape, layer_label(last) + ": produces " + std::to_string(last.output.ch) +
                                     " channels, detection needs " + std::to_string(net.detect.channels()));
  if (declared_head) {
    const auto parts = split(*declared_head, 'x');
    const bool ok = parts.size() == 4 && parse_int(parts[0], "output") == last.output.len &&
                    parse_int(parts[1], "output") == last.output.wid &&
                    parse_int(parts[2], "output") == static_cast<int>(net.detect.anchors.size()) &&
                    parse_int(parts[3], "output") == net.detect.values_per_anchor();
    if (!ok) fail(ErrorCode::ConfigShape, "[detect]: declared output " + *declared_head + " does not match the head");
  }
  return net;
}

NetworkSpec read_config_file(const std::string& path) {
  const auto bytes = binio::read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace spikeyolo
