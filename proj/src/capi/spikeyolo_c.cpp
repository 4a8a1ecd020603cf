#include "spikeyolo/spikeyolo.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "core/binary_io.hpp"
#include "core/detection.hpp"
#include "core/documents.hpp"
#include "core/energy.hpp"
#include "core/errors.hpp"
#include "core/evalkit.hpp"
#include "core/forward.hpp"
#include "core/network.hpp"
#include "core/pointcloud.hpp"
#include "core/scene.hpp"
#include "core/trainer.hpp"
#include "core/voxelizer.hpp"
#include "core/weights.hpp"

namespace sy = spikeyolo;
namespace fs = std::filesystem;

struct sy_cloud {
  sy::PointCloud cloud;
};

struct sy_tensor {
  sy::SpikeTensor tensor;
};

struct sy_network {
  sy::NetworkSpec spec;
  std::vector<std::string> kind_names;
};

struct sy_weights {
  sy::WeightStore store;
};

struct sy_inference {
  std::string frame_id;
  sy_tensor head;
  std::vector<sy::Detection> detections;
  sy::EnergyReport energy;
};

struct sy_eval_result {
  std::vector<sy::ClassAp> classes;
  std::map<int, double> thresholds;
  std::vector<std::string> warnings;
};

struct sy_train_result {
  sy_weights weights;
  std::vector<sy::TrainStep> trace;
};

namespace {

constexpr const char* kVersion = "0.1.0";

thread_local std::string g_last_error;

sy_status to_status(sy::ErrorCode code) {
  switch (code) {
    case sy::ErrorCode::InvalidArgument: return SY_ERR_INVALID_ARGUMENT;
    case sy::ErrorCode::Io: return SY_ERR_IO;
    case sy::ErrorCode::MalformedCloud: return SY_ERR_MALFORMED_CLOUD;
    case sy::ErrorCode::OutOfRoi: return SY_ERR_OUT_OF_ROI;
    case sy::ErrorCode::TensorFormat: return SY_ERR_TENSOR_FORMAT;
    case sy::ErrorCode::Config: return SY_ERR_CONFIG;
    case sy::ErrorCode::ConfigShape: return SY_ERR_CONFIG_SHAPE;
    case sy::ErrorCode::LayerShape: return SY_ERR_LAYER_SHAPE;
    case sy::ErrorCode::WeightFormat: return SY_ERR_WEIGHT_FORMAT;
    case sy::ErrorCode::Decode: return SY_ERR_DECODE;
    case sy::ErrorCode::NonDifferentiable: return SY_ERR_NON_DIFFERENTIABLE;
    case sy::ErrorCode::EmptyLayer: return SY_ERR_EMPTY_LAYER;
    case sy::ErrorCode::TrainingDiverged: return SY_ERR_TRAINING_DIVERGED;
  }
  return SY_ERR_INTERNAL;
}

template <typename Fn>
sy_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SY_OK;
  } catch (const sy::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SY_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SY_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) sy::fail(sy::ErrorCode::InvalidArgument, what);
}

void copy_shape(const sy::Shape& s, int dims[3]) {
  dims[0] = s.len;
  dims[1] = s.wid;
  dims[2] = s.ch;
}

sy::GridSpec grid_for(const int cells[3]) {
  if (cells[0] == 0 && cells[1] == 0 && cells[2] == 0) return sy::GridSpec{};
  require(cells[0] > 0 && cells[1] > 0 && cells[2] > 0, "grid cells must be positive");
  return sy::GridSpec::with_cells(cells[0], cells[1], cells[2]);
}

std::vector<sy::OrientedBox> boxes_of(const sy::BoxDocument& doc) {
  std::vector<sy::OrientedBox> out;
  for (const sy::ScoredBox& b : doc.boxes) out.push_back(b.box);
  return out;
}

sy::BoxDocument read_box_file(const fs::path& path) {
  const std::vector<std::uint8_t> bytes = sy::binio::read_file(path.string());
  sy::BoxDocument doc;
  try {
    doc = sy::parse_box_document(std::string(bytes.begin(), bytes.end()));
  } catch (const sy::Error& e) {
    sy::fail(e.code(), path.string() + ": " + e.what());
  }
  if (doc.frame_id.empty()) doc.frame_id = path.stem().string();
  return doc;
}

bool is_manifest(const fs::path& p) {
  const std::string name = p.filename().string();
  const std::string suffix = ".manifest.json";
  return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::map<std::string, sy::BoxDocument> read_box_dir(const fs::path& dir, std::vector<std::string>& warnings) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) sy::fail(sy::ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json" && !is_manifest(entry.path()))
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::map<std::string, sy::BoxDocument> docs;
  for (const fs::path& f : files) {
    sy::BoxDocument doc = read_box_file(f);
    const std::string id = doc.frame_id;
    if (!docs.emplace(id, std::move(doc)).second) warnings.push_back("duplicate frame " + id + " in " + dir.string());
  }
  return docs;
}

sy_network* make_network(sy::NetworkSpec spec) {
  auto* net = new sy_network{std::move(spec), {}};
  for (const sy::LayerSpec& l : net->spec.layers) net->kind_names.emplace_back(sy::layer_kind_name(l.kind));
  return net;
}

}  // namespace

extern "C" {

const char* sy_version(void) { return kVersion; }

const char* sy_status_name(sy_status status) {
  switch (status) {
    case SY_OK: return "OK";
    case SY_ERR_INVALID_ARGUMENT: return sy::error_code_name(sy::ErrorCode::InvalidArgument);
    case SY_ERR_IO: return sy::error_code_name(sy::ErrorCode::Io);
    case SY_ERR_MALFORMED_CLOUD: return sy::error_code_name(sy::ErrorCode::MalformedCloud);
    case SY_ERR_OUT_OF_ROI: return sy::error_code_name(sy::ErrorCode::OutOfRoi);
    case SY_ERR_TENSOR_FORMAT: return sy::error_code_name(sy::ErrorCode::TensorFormat);
    case SY_ERR_CONFIG: return sy::error_code_name(sy::ErrorCode::Config);
    case SY_ERR_CONFIG_SHAPE: return sy::error_code_name(sy::ErrorCode::ConfigShape);
    case SY_ERR_LAYER_SHAPE: return sy::error_code_name(sy::ErrorCode::LayerShape);
    case SY_ERR_WEIGHT_FORMAT: return sy::error_code_name(sy::ErrorCode::WeightFormat);
    case SY_ERR_DECODE: return sy::error_code_name(sy::ErrorCode::Decode);
    case SY_ERR_NON_DIFFERENTIABLE: return sy::error_code_name(sy::ErrorCode::NonDifferentiable);
    case SY_ERR_EMPTY_LAYER: return sy::error_code_name(sy::ErrorCode::EmptyLayer);
    case SY_ERR_TRAINING_DIVERGED: return sy::error_code_name(sy::ErrorCode::TrainingDiverged);
    case SY_ERR_INTERNAL: return "InternalError";
  }
  return "UnknownError";
}

const char* sy_last_error(void) { return g_last_error.c_str(); }

/* Point clouds */

sy_status sy_cloud_read(const char* path, sy_cloud** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new sy_cloud{sy::read_cloud_file(path)};
  });
}

sy_status sy_cloud_parse(const void* bytes, size_t size, sy_cloud** out) {
  return guarded([&] {
    require(out && (bytes || size == 0), "null argument");
    const auto* p = static_cast<const std::uint8_t*>(bytes);
    *out = new sy_cloud{sy::parse_cloud(std::span<const std::uint8_t>(p, size))};
  });
}

sy_status sy_cloud_write(const sy_cloud* cloud, const char* path) {
  return guarded([&] {
    require(cloud && path, "null argument");
    sy::write_cloud_file(cloud->cloud, path);
  });
}

size_t sy_cloud_size(const sy_cloud* cloud) { return cloud ? cloud->cloud.points.size() : 0; }

sy_status sy_cloud_point(const sy_cloud* cloud, size_t i, float xyzr[4]) {
  return guarded([&] {
    require(cloud && xyzr, "null argument");
    require(i < cloud->cloud.points.size(), "point index out of range");
    const sy::Point& p = cloud->cloud.points[i];
    xyzr[0] = p.x;
    xyzr[1] = p.y;
    xyzr[2] = p.z;
    xyzr[3] = p.reflectance;
  });
}

void sy_cloud_free(sy_cloud* cloud) { delete cloud; }

/* Tensors */

sy_voxelize_options sy_voxelize_defaults(void) {
  sy_voxelize_options o{};
  o.seed = 0;
  o.empty_mode = SY_EMPTY_PAPER_LITERAL;
  o.normalize = 1;
  return o;
}

sy_status sy_voxelize(const sy_cloud* cloud, const sy_voxelize_options* options, sy_tensor** out) {
  return guarded([&] {
    require(cloud && out, "null argument");
    const sy_voxelize_options o = options ? *options : sy_voxelize_defaults();
    require(o.empty_mode == SY_EMPTY_PAPER_LITERAL || o.empty_mode == SY_EMPTY_SENTINEL, "unknown empty mode");
    const sy::GridSpec grid = grid_for(o.cells);
    sy::VoxelizeOptions vo;
    vo.seed = o.seed;
    vo.empty_mode = o.empty_mode == SY_EMPTY_SENTINEL ? sy::EmptyMode::Sentinel : sy::EmptyMode::PaperLiteral;
    vo.normalize = o.normalize != 0;
    *out = new sy_tensor{sy::voxelize(sy::filter_roi(cloud->cloud, grid.roi), grid, vo)};
  });
}

sy_status sy_tensor_read(const char* path, sy_tensor** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new sy_tensor{sy::read_tensor_file(path)};
  });
}

sy_status sy_tensor_write(const sy_tensor* tensor, const char* path) {
  return guarded([&] {
    require(tensor && path, "null argument");
    sy::write_tensor_file(tensor->tensor, path);
  });
}

void sy_tensor_dims(const sy_tensor* tensor, int dims[3]) {
  if (!dims) return;
  if (!tensor) {
    dims[0] = dims[1] = dims[2] = 0;
    return;
  }
  copy_shape(tensor->tensor.shape(), dims);
}

const double* sy_tensor_data(const sy_tensor* tensor) { return tensor ? tensor->tensor.data() : nullptr; }

void sy_tensor_free(sy_tensor* tensor) { delete tensor; }

/* Networks and weights */

sy_status sy_network_read(const char* path, sy_network** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = make_network(sy::read_config_file(path));
  });
}

sy_status sy_network_parse(const char* text, sy_network** out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = make_network(sy::parse_config(text));
  });
}

int sy_network_layer_count(const sy_network* net) { return net ? static_cast<int>(net->spec.layers.size()) : 0; }

sy_status sy_network_layer(const sy_network* net, int i, sy_layer_info* out) {
  return guarded([&] {
    require(net && out, "null argument");
    require(i >= 0 && i < static_cast<int>(net->spec.layers.size()), "layer index out of range");
    const sy::LayerSpec& l = net->spec.layers[static_cast<std::size_t>(i)];
    out->index = l.index;
    out->kind = net->kind_names[static_cast<std::size_t>(i)].c_str();
    out->filters = l.filters;
    out->kernel = l.kernel;
    out->stride = l.stride;
    copy_shape(l.input, out->input);
    copy_shape(l.output, out->output);
  });
}

void sy_network_input_dims(const sy_network* net, int dims[3]) {
  if (!dims) return;
  if (!net) {
    dims[0] = dims[1] = dims[2] = 0;
    return;
  }
  copy_shape(net->spec.input, dims);
}

void sy_network_free(sy_network* net) { delete net; }

sy_status sy_weights_init(const sy_network* net, uint64_t seed, sy_weights** out) {
  return guarded([&] {
    require(net && out, "null argument");
    *out = new sy_weights{sy::init_weights(net->spec, seed)};
  });
}

sy_status sy_weights_read(const sy_network* net, const char* path, sy_weights** out) {
  return guarded([&] {
    require(net && path && out, "null argument");
    *out = new sy_weights{sy::read_weights_file(path, net->spec)};
  });
}

sy_status sy_weights_write(const sy_network* net, const sy_weights* weights, const char* path) {
  return guarded([&] {
    require(net && weights && path, "null argument");
    sy::write_weights_file(weights->store, net->spec, path);
  });
}

size_t sy_weights_parameter_count(const sy_weights* weights) {
  if (!weights) return 0;
  size_t n = 0;
  for (const sy::LayerWeights& l : weights->store.layers) n += l.kernel_values.size() + l.bias.size();
  return n;
}

void sy_weights_free(sy_weights* weights) { delete weights; }

/* Inference */

sy_infer_options sy_infer_defaults(void) {
  sy_infer_options o{};
  o.obj_threshold = 0.5;
  o.nms_threshold = 0.4;
  o.threads = 1;
  o.t_cap_factor = sy::TCapPolicy{}.factor;
  o.per_spike_energy = sy::kDefaultSpikeEnergy;
  return o;
}

sy_status sy_infer(const sy_network* net, const sy_weights* weights, const sy_tensor* input,
                   const sy_infer_options* options, const char* frame_id, sy_inference** out) {
  return guarded([&] {
    require(net && weights && input && out, "null argument");
    const sy_infer_options o = options ? *options : sy_infer_defaults();
    require(o.threads >= 1, "threads must be at least 1");
    require(std::isfinite(o.obj_threshold) && o.obj_threshold >= 0.0 && o.obj_threshold <= 1.0,
            "objectness threshold must lie in [0, 1]");
    require(std::isfinite(o.nms_threshold) && o.nms_threshold >= 0.0 && o.nms_threshold <= 1.0,
            "NMS threshold must lie in [0, 1]");
    require(std::isfinite(o.t_cap_factor) && o.t_cap_factor >= 1.0, "t_cap factor must be at least 1");
    require(std::isfinite(o.per_spike_energy) && o.per_spike_energy >= 0.0, "per-spike energy must be non-negative");
    sy::check_weights(net->spec, weights->store);

    sy::ForwardOptions fo;
    fo.threads = o.threads;
    fo.t_cap.factor = o.t_cap_factor;
    sy::ForwardResult r = sy::forward(net->spec, weights->store, input->tensor, fo);

    auto inf = std::make_unique<sy_inference>();
    inf->frame_id = frame_id ? frame_id : "";
    inf->detections = sy::nms(
        sy::decode(r.head, net->spec.detect, o.obj_threshold, sy::GridGeometry::of(net->spec)), o.nms_threshold);
    inf->energy = sy::total_report(r.stats, o.per_spike_energy);
    inf->head.tensor = std::move(r.head);
    *out = inf.release();
  });
}

size_t sy_inference_detection_count(const sy_inference* inf) { return inf ? inf->detections.size() : 0; }

sy_status sy_inference_detection(const sy_inference* inf, size_t i, sy_detection* out) {
  return guarded([&] {
    require(inf && out, "null argument");
    require(i < inf->detections.size(), "detection index out of range");
    const sy::Detection& d = inf->detections[i];
    out->class_id = d.class_id;
    out->objectness = d.objectness;
    out->x_m = d.x_m;
    out->y_m = d.y_m;
    out->w_m = d.w_m;
    out->l_m = d.l_m;
    out->yaw_rad = d.b_theta;
  });
}

void sy_inference_energy(const sy_inference* inf, sy_energy_summary* out) {
  if (!out) return;
  *out = sy_energy_summary{};
  if (!inf) return;
  out->layer_count = static_cast<int>(inf->energy.layers.size());
  out->fired_total = inf->energy.fired_total;
  out->silent_total = inf->energy.silent_total;
  out->sparsity_total = inf->energy.sparsity_total;
  out->per_spike_energy = inf->energy.per_spike_energy;
  out->energy_j = inf->energy.energy_joules;
}

sy_status sy_inference_energy_layer(const sy_inference* inf, int i, sy_energy_layer* out) {
  return guarded([&] {
    require(inf && out, "null argument");
    require(i >= 0 && i < static_cast<int>(inf->energy.layers.size()), "layer index out of range");
    const sy::EnergyLayerRow& r = inf->energy.layers[static_cast<std::size_t>(i)];
    out->layer_index = r.layer_index;
    out->fired = r.fired;
    out->silent = r.silent;
    out->sparsity = r.sparsity;
  });
}

const sy_tensor* sy_inference_head(const sy_inference* inf) { return inf ? &inf->head : nullptr; }

sy_status sy_inference_write_detections(const sy_inference* inf, const char* path) {
  return guarded([&] {
    require(inf && path, "null argument");
    sy::binio::write_text_file(path, sy::detections_to_json(inf->frame_id, inf->detections));
  });
}

sy_status sy_inference_write_energy(const sy_inference* inf, const char* path) {
  return guarded([&] {
    require(inf && path, "null argument");
    sy::binio::write_text_file(path, sy::energy_report_to_json(inf->energy));
  });
}

sy_status sy_render(const sy_tensor* input, const sy_inference* inf, const char* ground_truth_path, const char* path) {
  return guarded([&] {
    require(input && path, "null argument");
    std::vector<sy::OrientedBox> detections;
    if (inf)
      for (const sy::Detection& d : inf->detections) detections.push_back(d.box_m());
    std::vector<sy::OrientedBox> truth;
    if (ground_truth_path) truth = boxes_of(read_box_file(ground_truth_path));
    const sy::Image image = sy::render_bev(input->tensor, detections, truth);
    sy::binio::write_file(path, sy::encode_ppm(image));
  });
}

void sy_inference_free(sy_inference* inf) { delete inf; }

double sy_energy_joules(uint64_t fired_total, double per_spike_energy) {
  return static_cast<double>(fired_total) * per_spike_energy;
}

/* Evaluation */

sy_eval_options sy_eval_defaults(void) {
  sy_eval_options o{};
  std::fill(std::begin(o.iou_threshold), std::end(o.iou_threshold), -1.0);
  for (const auto& [cls, t] : sy::EvalConfig::kitti().iou_threshold) o.iou_threshold[cls] = t;
  return o;
}

const char* sy_class_name(int class_id) {
  if (class_id < 0 || class_id >= static_cast<int>(sy::kClassNames.size())) return nullptr;
  return sy::kClassNames[static_cast<std::size_t>(class_id)].data();
}

int sy_class_id(const char* name) {
  if (!name) return -1;
  for (std::size_t i = 0; i < sy::kClassNames.size(); ++i)
    if (sy::kClassNames[i] == name) return static_cast<int>(i);
  return -1;
}

sy_status sy_evaluate_directories(const char* pred_dir, const char* gt_dir, const sy_eval_options* options,
                                  sy_eval_result** out) {
  return guarded([&] {
    require(pred_dir && gt_dir && out, "null argument");
    const sy_eval_options o = options ? *options : sy_eval_defaults();
    sy::EvalConfig cfg;
    for (int c = 0; c < 8; ++c) {
      const double t = o.iou_threshold[c];
      if (t < 0.0) continue;
      require(std::isfinite(t) && t <= 1.0, "IoU threshold must lie in [0, 1]");
      cfg.iou_threshold[c] = t;
    }

    auto result = std::make_unique<sy_eval_result>();
    result->thresholds = cfg.iou_threshold;
    const auto truth = read_box_dir(gt_dir, result->warnings);
    const auto preds = read_box_dir(pred_dir, result->warnings);
    if (preds.empty()) result->warnings.push_back(std::string("no predictions in ") + pred_dir);

    std::vector<sy::EvalFrame> frames;
    for (const auto& [id, gt] : truth) {
      sy::EvalFrame f;
      f.frame_id = id;
      f.ground_truth = gt.boxes;
      if (auto it = preds.find(id); it != preds.end()) f.detections = it->second.boxes;
      frames.push_back(std::move(f));
    }
    for (const auto& [id, pred] : preds) {
      if (truth.count(id)) continue;
      result->warnings.push_back("no ground truth for frame " + id);
      frames.push_back(sy::EvalFrame{id, pred.boxes, {}});
    }
    result->classes = sy::average_precision(frames, cfg);
    *out = result.release();
  });
}

size_t sy_eval_class_count(const sy_eval_result* result) { return result ? result->classes.size() : 0; }

sy_status sy_eval_class(const sy_eval_result* result, size_t i, sy_class_ap* out) {
  return guarded([&] {
    require(result && out, "null argument");
    require(i < result->classes.size(), "class index out of range");
    const sy::ClassAp& c = result->classes[i];
    out->class_id = c.class_id;
    out->class_name = sy_class_name(c.class_id);
    out->iou_threshold = result->thresholds.at(c.class_id);
    out->ap = c.ap;
    out->gt_count = c.gt_count;
    out->det_count = c.det_count;
  });
}

size_t sy_eval_warning_count(const sy_eval_result* result) { return result ? result->warnings.size() : 0; }

const char* sy_eval_warning(const sy_eval_result* result, size_t i) {
  if (!result || i >= result->warnings.size()) return nullptr;
  return result->warnings[i].c_str();
}

sy_status sy_eval_write(const sy_eval_result* result, const char* path) {
  return guarded([&] {
    require(result && path, "null argument");
    sy::binio::write_text_file(path, sy::eval_to_json(result->classes, result->warnings));
  });
}

void sy_eval_free(sy_eval_result* result) { delete result; }

/* Training */

sy_train_options sy_train_defaults(void) {
  const sy::TrainOptions d;
  sy_train_options o{};
  o.seed = d.seed;
  o.iterations = d.iterations;
  o.learning_rate = d.learning_rate;
  o.warmup_learning_rate = d.warmup_learning_rate;
  o.warmup_iterations = d.warmup_iterations;
  o.momentum = d.momentum;
  o.weight_decay = d.weight_decay;
  o.threads = d.threads;
  return o;
}

sy_status sy_train_toy(const sy_network* net, const sy_weights* initial, const sy_train_options* options,
                       sy_train_result** out) {
  return guarded([&] {
    require(net && initial && out, "null argument");
    const sy_train_options o = options ? *options : sy_train_defaults();
    require(o.iterations >= 0 && o.warmup_iterations >= 0, "iteration counts must be non-negative");
    require(o.threads >= 1, "threads must be at least 1");
    sy::TrainOptions to;
    to.seed = o.seed;
    to.iterations = o.iterations;
    to.learning_rate = o.learning_rate;
    to.warmup_learning_rate = o.warmup_learning_rate;
    to.warmup_iterations = o.warmup_iterations;
    to.momentum = o.momentum;
    to.weight_decay = o.weight_decay;
    to.threads = o.threads;
    sy::TrainResult r = sy::train_toy(net->spec, initial->store, to);
    *out = new sy_train_result{sy_weights{std::move(r.weights)}, std::move(r.trace)};
  });
}

size_t sy_train_step_count(const sy_train_result* result) { return result ? result->trace.size() : 0; }

sy_status sy_train_step_at(const sy_train_result* result, size_t i, sy_train_step* out) {
  return guarded([&] {
    require(result && out, "null argument");
    require(i < result->trace.size(), "step index out of range");
    const sy::TrainStep& s = result->trace[i];
    out->iteration = s.iteration;
    out->learning_rate = s.learning_rate;
    out->total = s.loss.total();
    out->coord = s.loss.coord;
    out->obj = s.loss.obj;
    out->noobj = s.loss.noobj;
    out->cls = s.loss.cls;
    out->euler = s.loss.euler;
  });
}

const sy_weights* sy_train_weights(const sy_train_result* result) { return result ? &result->weights : nullptr; }

sy_status sy_train_write_trace(const sy_train_result* result, const char* path) {
  return guarded([&] {
    require(result && path, "null argument");
    std::ostringstream os;
    os.precision(17);
    os << "iteration,learning_rate,total,coord,obj,noobj,cls,euler\n";
    for (const sy::TrainStep& s : result->trace)
      os << s.iteration << ',' << s.learning_rate << ',' << s.loss.total() << ',' << s.loss.coord << ','
         << s.loss.obj << ',' << s.loss.noobj << ',' << s.loss.cls << ',' << s.loss.euler << '\n';
    sy::binio::write_text_file(path, os.str());
  });
}

void sy_train_free(sy_train_result* result) { delete result; }

/* Synthetic scenes */

sy_scene_options sy_scene_defaults(void) {
  sy_scene_options o{};
  o.seed = 0;
  o.objects = sy::SceneOptions{}.objects;
  o.toy = 0;
  return o;
}

sy_status sy_synth_scene(const sy_scene_options* options, const char* frame_id, const char* cloud_path,
                         const char* truth_path) {
  return guarded([&] {
    require(cloud_path && truth_path, "null argument");
    const sy_scene_options o = options ? *options : sy_scene_defaults();
    require(o.objects >= 0, "object count must be non-negative");
    sy::SceneOptions so = o.toy ? sy::SceneOptions::toy() : sy::SceneOptions::cars();
    so.objects = o.objects;
    const sy::GridSpec grid = grid_for(o.cells);
    sy::Scene scene = sy::synth_scene(grid.roi, o.seed, so);
    const std::string id = frame_id ? frame_id : "";
    scene.cloud.frame_id = id;
    sy::write_cloud_file(scene.cloud, cloud_path);
    sy::binio::write_text_file(truth_path, sy::ground_truth_to_json(id, scene.objects));
  });
}

}  // extern "C"
