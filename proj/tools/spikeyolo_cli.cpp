#include <spikeyolo/spikeyolo.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using ojson = nlohmann::ordered_json;

// Failure of a C API call; carries the status for the exit code.
struct ApiFailure {
  sy_status status;
  std::string message;
};

void check(sy_status s) {
  if (s != SY_OK) throw ApiFailure{s, sy_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
template <typename T, void (*Free)(T*)>
using Handle = std::unique_ptr<T, Deleter<T, Free>>;

using Cloud = Handle<sy_cloud, sy_cloud_free>;
using TensorH = Handle<sy_tensor, sy_tensor_free>;
using Network = Handle<sy_network, sy_network_free>;
using Weights = Handle<sy_weights, sy_weights_free>;
using Inference = Handle<sy_inference, sy_inference_free>;
using EvalResult = Handle<sy_eval_result, sy_eval_free>;
using TrainResult = Handle<sy_train_result, sy_train_free>;

Network load_network(const std::string& path) {
  sy_network* n = nullptr;
  check(sy_network_read(path.c_str(), &n));
  return Network(n);
}

Weights load_weights(const sy_network* net, const std::string& path) {
  sy_weights* w = nullptr;
  check(sy_weights_read(net, path.c_str(), &w));
  return Weights(w);
}

TensorH load_tensor(const std::string& path) {
  sy_tensor* t = nullptr;
  check(sy_tensor_read(path.c_str(), &t));
  return TensorH(t);
}

// Wall-clock per named stage, in insertion order.
class Stopwatch {
 public:
  template <typename Fn>
  auto stage(const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Record {
      Stopwatch* self;
      std::string name;
      std::chrono::steady_clock::time_point t0;
      ~Record() {
        self->stages_.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      }
    } record{this, name, t0};
    return fn();
  }

  ojson json() const {
    ojson out = ojson::object();
    for (const auto& [name, seconds] : stages_) out[name] = seconds;
    return out;
  }

 private:
  std::vector<std::pair<std::string, double>> stages_;
};

struct Manifest {
  std::string path;
  ojson doc;

  Manifest(std::string command, const std::vector<std::string>& argv) {
    doc["command"] = std::move(command);
    doc["argv"] = argv;
    doc["version"] = sy_version();
    doc["config"] = nullptr;
    doc["weights"] = nullptr;
    doc["seeds"] = ojson::object();
    doc["inputs"] = ojson::object();
    doc["outputs"] = ojson::object();
  }

  void write(const Stopwatch& watch) {
    doc["timings_s"] = watch.json();
    std::ofstream f(path, std::ios::binary);
    f << doc.dump(2) << "\n";
    if (!f) throw ApiFailure{SY_ERR_IO, "IoError: cannot write manifest " + path};
  }
};

std::string default_manifest(const std::string& output) { return output + ".manifest.json"; }

bool parse_dims(const std::string& text, int dims[3]) {
  char x1 = 0, x2 = 0;
  std::istringstream is(text);
  if (!(is >> dims[0] >> x1 >> dims[1] >> x2 >> dims[2]) || x1 != 'x' || x2 != 'x') return false;
  std::string rest;
  return !(is >> rest) && dims[0] > 0 && dims[1] > 0 && dims[2] > 0;
}

ojson layers_json(const sy_network* net) {
  ojson layers = ojson::array();
  for (int i = 0; i < sy_network_layer_count(net); ++i) {
    sy_layer_info info{};
    check(sy_network_layer(net, i, &info));
    ojson l;
    l["index"] = info.index;
    l["kind"] = info.kind;
    l["output"] = std::to_string(info.output[0]) + "x" + std::to_string(info.output[1]) + "x" +
                  std::to_string(info.output[2]);
    layers.push_back(std::move(l));
  }
  return layers;
}

int default_threads() {
  if (const char* env = std::getenv("SPIKE_YOLO_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring SPIKE_YOLO_THREADS=" << env << "\n";
  }
  return 1;
}

struct VoxelizeArgs {
  std::string input, output, manifest, empty_mode = "paper-literal", cells;
  bool normalize = true;
  std::uint64_t seed = 0;
};

void run_voxelize(const VoxelizeArgs& a, const std::vector<std::string>& argv) {
  Stopwatch watch;
  Manifest m("voxelize", argv);
  m.path = a.manifest.empty() ? default_manifest(a.output) : a.manifest;
  sy_voxelize_options o = sy_voxelize_defaults();
  o.seed = a.seed;
  o.normalize = a.normalize ? 1 : 0;
  o.empty_mode = a.empty_mode == "sentinel" ? SY_EMPTY_SENTINEL : SY_EMPTY_PAPER_LITERAL;
  if (!a.cells.empty() && !parse_dims(a.cells, o.cells))
    throw ApiFailure{SY_ERR_INVALID_ARGUMENT, "InvalidArgument: --cells expects LxWxH, got " + a.cells};

  Cloud cloud = watch.stage("parse", [&] {
    sy_cloud* c = nullptr;
    check(sy_cloud_read(a.input.c_str(), &c));
    return Cloud(c);
  });
  TensorH tensor = watch.stage("voxelize", [&] {
    sy_tensor* t = nullptr;
    check(sy_voxelize(cloud.get(), &o, &t));
    return TensorH(t);
  });
  watch.stage("write", [&] {
    check(sy_tensor_write(tensor.get(), a.output.c_str()));
    TensorH back = load_tensor(a.output);
    int d0[3], d1[3];
    sy_tensor_dims(tensor.get(), d0);
    sy_tensor_dims(back.get(), d1);
    if (d0[0] != d1[0] || d0[1] != d1[1] || d0[2] != d1[2])
      throw ApiFailure{SY_ERR_TENSOR_FORMAT, "TensorFormatError: written tensor does not read back"};
  });

  int dims[3];
  sy_tensor_dims(tensor.get(), dims);
  m.doc["seeds"]["voxel_selection"] = a.seed;
  m.doc["inputs"]["cloud"] = a.input;
  m.doc["inputs"]["points"] = sy_cloud_size(cloud.get());
  m.doc["outputs"]["tensor"] = a.output;
  m.doc["empty_mode"] = a.empty_mode;
  m.doc["normalize"] = a.normalize;
  m.doc["dims"] = {dims[0], dims[1], dims[2]};
  m.write(watch);
  std::cout << "wrote " << a.output << " (" << dims[0] << "x" << dims[1] << "x" << dims[2] << ")\n";
}

struct InferArgs {
  std::string config, weights, tensor, output, energy, render, truth, manifest, frame_id;
  double obj_threshold = 0.5, nms_threshold = 0.4, t_cap_factor = 2.0, spike_energy = 19e-12;
  int threads = 0;
};

void run_infer(const InferArgs& a, const std::vector<std::string>& argv) {
  Stopwatch watch;
  Manifest m("infer", argv);
  m.path = a.manifest.empty() ? default_manifest(a.output) : a.manifest;
  const int threads = a.threads > 0 ? a.threads : default_threads();

  Network net = watch.stage("load_config", [&] { return load_network(a.config); });
  Weights weights = watch.stage("load_weights", [&] { return load_weights(net.get(), a.weights); });
  TensorH input = watch.stage("load_tensor", [&] { return load_tensor(a.tensor); });

  sy_infer_options o = sy_infer_defaults();
  o.obj_threshold = a.obj_threshold;
  o.nms_threshold = a.nms_threshold;
  o.threads = threads;
  o.t_cap_factor = a.t_cap_factor;
  o.per_spike_energy = a.spike_energy;
  const std::string frame_id = a.frame_id.empty() ? a.tensor : a.frame_id;
  Inference inf = watch.stage("forward_decode_nms", [&] {
    sy_inference* r = nullptr;
    check(sy_infer(net.get(), weights.get(), input.get(), &o, frame_id.c_str(), &r));
    return Inference(r);
  });

  watch.stage("write", [&] {
    check(sy_inference_write_detections(inf.get(), a.output.c_str()));
    if (!a.energy.empty()) check(sy_inference_write_energy(inf.get(), a.energy.c_str()));
  });
  if (!a.render.empty())
    watch.stage("render", [&] {
      check(sy_render(input.get(), inf.get(), a.truth.empty() ? nullptr : a.truth.c_str(), a.render.c_str()));
    });

  sy_energy_summary e{};
  sy_inference_energy(inf.get(), &e);
  m.doc["config"] = a.config;
  m.doc["weights"] = a.weights;
  m.doc["inputs"]["tensor"] = a.tensor;
  m.doc["outputs"]["detections"] = a.output;
  if (!a.energy.empty()) m.doc["outputs"]["energy_report"] = a.energy;
  if (!a.render.empty()) m.doc["outputs"]["render"] = a.render;
  m.doc["threads"] = threads;
  m.doc["obj_threshold"] = a.obj_threshold;
  m.doc["nms_threshold"] = a.nms_threshold;
  m.doc["layers"] = layers_json(net.get());
  m.doc["detections"] = sy_inference_detection_count(inf.get());
  m.doc["spike_layers"] = e.layer_count;
  m.doc["sparsity_total"] = e.sparsity_total;
  m.doc["energy_j"] = e.energy_j;
  m.write(watch);
  std::cout << "wrote " << a.output << " (" << sy_inference_detection_count(inf.get()) << " detections, energy "
            << e.energy_j << " J)\n";
}

struct GenWeightsArgs {
  std::string config, output, manifest;
  std::uint64_t seed = 0;
};

void run_gen_weights(const GenWeightsArgs& a, const std::vector<std::string>& argv) {
  Stopwatch watch;
  Manifest m("gen-weights", argv);
  m.path = a.manifest.empty() ? default_manifest(a.output) : a.manifest;
  Network net = watch.stage("load_config", [&] { return load_network(a.config); });
  Weights w = watch.stage("init", [&] {
    sy_weights* p = nullptr;
    check(sy_weights_init(net.get(), a.seed, &p));
    return Weights(p);
  });
  watch.stage("write", [&] {
    check(sy_weights_write(net.get(), w.get(), a.output.c_str()));
    load_weights(net.get(), a.output);
  });
  m.doc["config"] = a.config;
  m.doc["seeds"]["weights"] = a.seed;
  m.doc["outputs"]["weights"] = a.output;
  m.doc["parameters"] = sy_weights_parameter_count(w.get());
  m.write(watch);
  std::cout << "wrote " << a.output << " (" << sy_weights_parameter_count(w.get()) << " parameters)\n";
}

struct EvalArgs {
  std::string pred_dir, gt_dir, output, manifest;
  std::vector<std::string> iou;
};

void run_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  Stopwatch watch;
  Manifest m("eval", argv);
  m.path = !a.manifest.empty() ? a.manifest : a.output.empty() ? std::string() : default_manifest(a.output);
  sy_eval_options o = sy_eval_defaults();
  if (!a.iou.empty()) {
    for (double& t : o.iou_threshold) t = -1.0;
    for (const std::string& item : a.iou) {
      const auto eq = item.find('=');
      const int cls = eq == std::string::npos ? -1 : sy_class_id(item.substr(0, eq).c_str());
      double t = -1.0;
      try {
        if (cls >= 0) t = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
      }
      if (cls < 0 || !(t >= 0.0 && t <= 1.0))
        throw ApiFailure{SY_ERR_INVALID_ARGUMENT, "InvalidArgument: --iou expects Class=threshold, got " + item};
      o.iou_threshold[cls] = t;
    }
  }
  EvalResult r = watch.stage("evaluate", [&] {
    sy_eval_result* p = nullptr;
    check(sy_evaluate_directories(a.pred_dir.c_str(), a.gt_dir.c_str(), &o, &p));
    return EvalResult(p);
  });
  for (std::size_t i = 0; i < sy_eval_warning_count(r.get()); ++i)
    std::cerr << "warning: " << sy_eval_warning(r.get(), i) << "\n";
  ojson classes = ojson::array();
  for (std::size_t i = 0; i < sy_eval_class_count(r.get()); ++i) {
    sy_class_ap c{};
    check(sy_eval_class(r.get(), i, &c));
    std::cout << c.class_name << " AP@" << c.iou_threshold << " = " << c.ap << " (" << c.gt_count << " gt, "
              << c.det_count << " det)\n";
    classes.push_back({{"class", c.class_name}, {"ap", c.ap}});
  }
  if (!a.output.empty()) watch.stage("write", [&] { check(sy_eval_write(r.get(), a.output.c_str())); });
  if (!m.path.empty()) {
    m.doc["inputs"]["predictions"] = a.pred_dir;
    m.doc["inputs"]["ground_truth"] = a.gt_dir;
    if (!a.output.empty()) m.doc["outputs"]["report"] = a.output;
    m.doc["classes"] = classes;
    m.write(watch);
  }
}

struct TrainArgs {
  std::string config, output, trace, init_weights, manifest;
  std::uint64_t seed = 1, init_seed = 7;
  std::optional<double> lr, warmup_lr;
  int iterations = 200, warmup_iterations = 20, threads = 0;
  double momentum = 0.9, decay = 5e-4;
};

void run_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  Stopwatch watch;
  Manifest m("train-toy", argv);
  m.path = a.manifest.empty() ? default_manifest(a.output) : a.manifest;
  Network net = watch.stage("load_config", [&] { return load_network(a.config); });
  Weights init = watch.stage("init", [&] {
    if (!a.init_weights.empty()) return load_weights(net.get(), a.init_weights);
    sy_weights* p = nullptr;
    check(sy_weights_init(net.get(), a.init_seed, &p));
    return Weights(p);
  });
  sy_train_options o = sy_train_defaults();
  o.seed = a.seed;
  o.iterations = a.iterations;
  o.warmup_iterations = a.warmup_iterations;
  if (a.lr) {
    o.learning_rate = *a.lr;
    o.warmup_learning_rate = *a.lr / 10.0;
  }
  if (a.warmup_lr) o.warmup_learning_rate = *a.warmup_lr;
  o.momentum = a.momentum;
  o.weight_decay = a.decay;
  o.threads = a.threads > 0 ? a.threads : default_threads();
  TrainResult r = watch.stage("train", [&] {
    sy_train_result* p = nullptr;
    check(sy_train_toy(net.get(), init.get(), &o, &p));
    return TrainResult(p);
  });
  const std::string trace = a.trace.empty() ? a.output + ".loss.csv" : a.trace;
  watch.stage("write", [&] {
    check(sy_weights_write(net.get(), sy_train_weights(r.get()), a.output.c_str()));
    check(sy_train_write_trace(r.get(), trace.c_str()));
  });

  const std::size_t steps = sy_train_step_count(r.get());
  sy_train_step first{}, last{};
  if (steps > 0) {
    check(sy_train_step_at(r.get(), 0, &first));
    check(sy_train_step_at(r.get(), steps - 1, &last));
  }
  m.doc["config"] = a.config;
  m.doc["weights"] = a.init_weights.empty() ? ojson(nullptr) : ojson(a.init_weights);
  m.doc["seeds"]["scenes"] = a.seed;
  if (a.init_weights.empty()) m.doc["seeds"]["weights"] = a.init_seed;
  m.doc["outputs"]["weights"] = a.output;
  m.doc["outputs"]["loss_trace"] = trace;
  m.doc["hyper"] = {{"iterations", o.iterations},
                    {"learning_rate", o.learning_rate},
                    {"warmup_learning_rate", o.warmup_learning_rate},
                    {"warmup_iterations", o.warmup_iterations},
                    {"momentum", o.momentum},
                    {"weight_decay", o.weight_decay}};
  m.doc["initial_loss"] = first.total;
  m.doc["final_loss"] = last.total;
  m.write(watch);
  std::cout << "wrote " << a.output << " (loss " << first.total << " -> " << last.total << " over " << steps
            << " iterations)\n";
}

struct SceneArgs {
  std::string cloud, truth, frame_id, cells, manifest;
  std::uint64_t seed = 0;
  int objects = -1;
  bool toy = false;
};

void run_scene(const SceneArgs& a, const std::vector<std::string>& argv) {
  Stopwatch watch;
  Manifest m("synth-scene", argv);
  m.path = a.manifest.empty() ? default_manifest(a.cloud) : a.manifest;
  sy_scene_options o = sy_scene_defaults();
  o.seed = a.seed;
  o.toy = a.toy ? 1 : 0;
  o.objects = a.objects >= 0 ? a.objects : (a.toy ? 1 : o.objects);
  if (!a.cells.empty() && !parse_dims(a.cells, o.cells))
    throw ApiFailure{SY_ERR_INVALID_ARGUMENT, "InvalidArgument: --cells expects LxWxH, got " + a.cells};
  const std::string frame_id = a.frame_id.empty() ? "scene" + std::to_string(a.seed) : a.frame_id;
  watch.stage("synthesize", [&] { check(sy_synth_scene(&o, frame_id.c_str(), a.cloud.c_str(), a.truth.c_str())); });
  m.doc["seeds"]["scene"] = a.seed;
  m.doc["outputs"]["cloud"] = a.cloud;
  m.doc["outputs"]["ground_truth"] = a.truth;
  m.write(watch);
  std::cout << "wrote " << a.cloud << " and " << a.truth << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal-coding spiking YOLO toolkit for LiDAR point clouds"};
  app.set_version_flag("--version", std::string(sy_version()));
  app.require_subcommand(1);
  const std::vector<std::string> args(argv, argv + argc);

  VoxelizeArgs vox;
  auto* cv = app.add_subcommand("voxelize", "Point cloud (.bin) to spike-time tensor");
  cv->add_option("input", vox.input, "Velodyne-format point cloud")->required();
  cv->add_option("output", vox.output, "Tensor file to write")->required();
  cv->add_option("--empty-mode", vox.empty_mode, "Spike time of empty voxels")
      ->check(CLI::IsMember({"paper-literal", "sentinel"}))
      ->capture_default_str();
  cv->add_flag("--normalize,!--no-normalize", vox.normalize, "Divide times by the ROI's longest round trip")
      ->capture_default_str();
  cv->add_option("--seed", vox.seed, "Seed of the per-voxel point selection")->capture_default_str();
  cv->add_option("--cells", vox.cells, "Grid cells LxWxH (default 768x1024x21)");
  cv->add_option("--manifest", vox.manifest, "Run manifest (default OUTPUT.manifest.json)");

  InferArgs inf;
  auto* ci = app.add_subcommand("infer", "Run the network on a tensor and decode boxes");
  ci->add_option("--config", inf.config, "Network configuration")->required();
  ci->add_option("--weights", inf.weights, "Weight file")->required();
  ci->add_option("--tensor", inf.tensor, "Input tensor file")->required();
  ci->add_option("-o,--out", inf.output, "Detections JSON to write")->required();
  ci->add_option("--obj-threshold", inf.obj_threshold, "Minimum objectness")->capture_default_str();
  ci->add_option("--nms-threshold", inf.nms_threshold, "Rotated-IoU suppression threshold")->capture_default_str();
  ci->add_option("--energy-report", inf.energy, "Energy report JSON to write");
  ci->add_option("--spike-energy", inf.spike_energy, "Joules per spike")->capture_default_str();
  ci->add_option("--render", inf.render, "Bird's-eye PPM to write");
  ci->add_option("--truth", inf.truth, "Ground-truth box file drawn into --render");
  ci->add_option("--t-cap-factor", inf.t_cap_factor, "Silent-input stand-in for the linear head")
      ->capture_default_str();
  ci->add_option("--threads", inf.threads, "Worker threads (default $SPIKE_YOLO_THREADS or 1)");
  ci->add_option("--frame-id", inf.frame_id, "Frame id written to the detections (default tensor path)");
  ci->add_option("--manifest", inf.manifest, "Run manifest (default OUT.manifest.json)");

  GenWeightsArgs gen;
  auto* cg = app.add_subcommand("gen-weights", "Write randomly initialised weights");
  cg->add_option("--config", gen.config, "Network configuration")->required();
  cg->add_option("--seed", gen.seed, "Initialisation seed")->capture_default_str();
  cg->add_option("-o,--out", gen.output, "Weight file to write")->required();
  cg->add_option("--manifest", gen.manifest, "Run manifest (default OUT.manifest.json)");

  EvalArgs ev;
  auto* ce = app.add_subcommand("eval", "11-point BEV average precision");
  ce->add_option("--pred", ev.pred_dir, "Directory of detection files")->required();
  ce->add_option("--gt", ev.gt_dir, "Directory of ground-truth files")->required();
  ce->add_option("--iou", ev.iou, "Class=threshold, repeatable (default Car=0.7 Pedestrian=0.5 Cyclist=0.5)");
  ce->add_option("-o,--out", ev.output, "Report JSON to write");
  ce->add_option("--manifest", ev.manifest, "Run manifest (default OUT.manifest.json when --out is given)");

  TrainArgs tr;
  auto* ct = app.add_subcommand("train-toy", "SGD on synthetic single-object scenes");
  ct->add_option("--config", tr.config, "Network configuration")->required();
  ct->add_option("-o,--out", tr.output, "Trained weight file")->required();
  ct->add_option("--trace", tr.trace, "Loss trace CSV (default OUT.loss.csv)");
  ct->add_option("--weights", tr.init_weights, "Initial weights (default: random from --init-seed)");
  ct->add_option("--init-seed", tr.init_seed, "Initialisation seed")->capture_default_str();
  ct->add_option("--seed", tr.seed, "Scene seed")->capture_default_str();
  ct->add_option("--iterations", tr.iterations, "SGD iterations")->capture_default_str();
  ct->add_option("--lr", tr.lr, "Learning rate after warm-up (default 5e-4)");
  ct->add_option("--warmup-lr", tr.warmup_lr, "Warm-up learning rate (default lr / 10)");
  ct->add_option("--warmup-iterations", tr.warmup_iterations, "Warm-up length")->capture_default_str();
  ct->add_option("--momentum", tr.momentum, "Momentum")->capture_default_str();
  ct->add_option("--decay", tr.decay, "Weight decay")->capture_default_str();
  ct->add_option("--threads", tr.threads, "Worker threads (default $SPIKE_YOLO_THREADS or 1)");
  ct->add_option("--manifest", tr.manifest, "Run manifest (default OUT.manifest.json)");

  SceneArgs sc;
  auto* cs = app.add_subcommand("synth-scene", "Write a synthetic point cloud and its ground truth");
  cs->add_option("--cloud", sc.cloud, "Point cloud to write")->required();
  cs->add_option("--truth", sc.truth, "Ground-truth box file to write")->required();
  cs->add_option("--seed", sc.seed, "Scene seed")->capture_default_str();
  cs->add_option("--objects", sc.objects, "Number of objects");
  cs->add_flag("--toy", sc.toy, "Small objects for the reduced grid");
  cs->add_option("--cells", sc.cells, "Restrict to the region of a LxWxH grid");
  cs->add_option("--frame-id", sc.frame_id, "Frame id (default scene<seed>)");
  cs->add_option("--manifest", sc.manifest, "Run manifest (default CLOUD.manifest.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*cv) run_voxelize(vox, args);
    if (*ci) run_infer(inf, args);
    if (*cg) run_gen_weights(gen, args);
    if (*ce) run_eval(ev, args);
    if (*ct) run_train(tr, args);
    if (*cs) run_scene(sc, args);
  } catch (const ApiFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.status == SY_ERR_IO ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
