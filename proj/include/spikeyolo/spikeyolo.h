#ifndef SPIKEYOLO_SPIKEYOLO_H
#define SPIKEYOLO_SPIKEYOLO_H

#include <stddef.h>
#include <stdint.h>

#if defined(SPIKEYOLO_BUILDING_LIBRARY)
#define SY_API __attribute__((visibility("default")))
#else
#define SY_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sy_status {
  SY_OK = 0,
  SY_ERR_INVALID_ARGUMENT = 1,
  SY_ERR_IO = 2,
  SY_ERR_MALFORMED_CLOUD = 3,
  SY_ERR_OUT_OF_ROI = 4,
  SY_ERR_TENSOR_FORMAT = 5,
  SY_ERR_CONFIG = 6,
  SY_ERR_CONFIG_SHAPE = 7,
  SY_ERR_LAYER_SHAPE = 8,
  SY_ERR_WEIGHT_FORMAT = 9,
  SY_ERR_DECODE = 10,
  SY_ERR_NON_DIFFERENTIABLE = 11,
  SY_ERR_EMPTY_LAYER = 12,
  SY_ERR_TRAINING_DIVERGED = 13,
  SY_ERR_INTERNAL = 99
} sy_status;

/* Library version, e.g. "0.1.0". */
SY_API const char* sy_version(void);
/* Error name such as "WeightFormatError". */
SY_API const char* sy_status_name(sy_status status);
/* Message of the last failed call on this thread; empty after success. */
SY_API const char* sy_last_error(void);

/* Point clouds */

typedef struct sy_cloud sy_cloud;

SY_API sy_status sy_cloud_read(const char* path, sy_cloud** out);
SY_API sy_status sy_cloud_parse(const void* bytes, size_t size, sy_cloud** out);
SY_API sy_status sy_cloud_write(const sy_cloud* cloud, const char* path);
SY_API size_t sy_cloud_size(const sy_cloud* cloud);
/* Copies point i as (x, y, z, reflectance). */
SY_API sy_status sy_cloud_point(const sy_cloud* cloud, size_t i, float xyzr[4]);
SY_API void sy_cloud_free(sy_cloud* cloud);

/* Spike-time tensors */

typedef struct sy_tensor sy_tensor;

typedef enum sy_empty_mode { SY_EMPTY_PAPER_LITERAL = 0, SY_EMPTY_SENTINEL = 1 } sy_empty_mode;

typedef struct sy_voxelize_options {
  uint64_t seed;
  sy_empty_mode empty_mode;
  int normalize;
  /* Grid cells (length, width, height); zero selects 768 x 1024 x 21. Cells
     keep the default footprint, starting at x = 0 and centred on y = 0. */
  int cells[3];
} sy_voxelize_options;

SY_API sy_voxelize_options sy_voxelize_defaults(void);
/* Filters the cloud to the grid's region and voxelizes it. */
SY_API sy_status sy_voxelize(const sy_cloud* cloud, const sy_voxelize_options* options, sy_tensor** out);
SY_API sy_status sy_tensor_read(const char* path, sy_tensor** out);
SY_API sy_status sy_tensor_write(const sy_tensor* tensor, const char* path);
/* dims = (length, width, channels). */
SY_API void sy_tensor_dims(const sy_tensor* tensor, int dims[3]);
/* Row-major (length, width, channels); +inf marks a neuron that never fires. */
SY_API const double* sy_tensor_data(const sy_tensor* tensor);
SY_API void sy_tensor_free(sy_tensor* tensor);

/* Networks and weights */

typedef struct sy_network sy_network;

typedef struct sy_layer_info {
  int index; /* 1-based */
  const char* kind;
  int filters;
  int kernel;
  int stride;
  int input[3];
  int output[3];
} sy_layer_info;

SY_API sy_status sy_network_read(const char* path, sy_network** out);
SY_API sy_status sy_network_parse(const char* text, sy_network** out);
SY_API int sy_network_layer_count(const sy_network* net);
SY_API sy_status sy_network_layer(const sy_network* net, int i, sy_layer_info* out);
SY_API void sy_network_input_dims(const sy_network* net, int dims[3]);
SY_API void sy_network_free(sy_network* net);

typedef struct sy_weights sy_weights;

SY_API sy_status sy_weights_init(const sy_network* net, uint64_t seed, sy_weights** out);
SY_API sy_status sy_weights_read(const sy_network* net, const char* path, sy_weights** out);
SY_API sy_status sy_weights_write(const sy_network* net, const sy_weights* weights, const char* path);
/* Number of scalar parameters, kernels and biases. */
SY_API size_t sy_weights_parameter_count(const sy_weights* weights);
SY_API void sy_weights_free(sy_weights* weights);

/* Inference */

typedef struct sy_infer_options {
  double obj_threshold;
  double nms_threshold;
  int threads;
  /* Linear-head stand-in time for silent inputs, as a multiple of the
     latest finite input time. */
  double t_cap_factor;
  double per_spike_energy; /* joules */
} sy_infer_options;

typedef struct sy_detection {
  int class_id;
  double objectness;
  double x_m, y_m, w_m, l_m, yaw_rad;
} sy_detection;

typedef struct sy_energy_layer {
  int layer_index;
  uint64_t fired;
  uint64_t silent;
  double sparsity;
} sy_energy_layer;

typedef struct sy_energy_summary {
  int layer_count;
  uint64_t fired_total;
  uint64_t silent_total;
  double sparsity_total;
  double per_spike_energy;
  double energy_j;
} sy_energy_summary;

typedef struct sy_inference sy_inference;

SY_API sy_infer_options sy_infer_defaults(void);
SY_API sy_status sy_infer(const sy_network* net, const sy_weights* weights, const sy_tensor* input,
                          const sy_infer_options* options, const char* frame_id, sy_inference** out);
SY_API size_t sy_inference_detection_count(const sy_inference* inf);
SY_API sy_status sy_inference_detection(const sy_inference* inf, size_t i, sy_detection* out);
SY_API void sy_inference_energy(const sy_inference* inf, sy_energy_summary* out);
SY_API sy_status sy_inference_energy_layer(const sy_inference* inf, int i, sy_energy_layer* out);
/* Raw head tensor (length, width, anchors * values). */
SY_API const sy_tensor* sy_inference_head(const sy_inference* inf);
SY_API sy_status sy_inference_write_detections(const sy_inference* inf, const char* path);
SY_API sy_status sy_inference_write_energy(const sy_inference* inf, const char* path);
/* Writes a 1024x768 P6 bird's-eye view of the input with detections in red and,
   when ground_truth_path is not NULL, ground truth from that box file in green. */
SY_API sy_status sy_render(const sy_tensor* input, const sy_inference* inf, const char* ground_truth_path,
                           const char* path);
SY_API void sy_inference_free(sy_inference* inf);

/* Energy accounting for externally supplied counts. */
SY_API double sy_energy_joules(uint64_t fired_total, double per_spike_energy);

/* Evaluation */

typedef struct sy_eval_options {
  /* IoU threshold per class id; a negative entry leaves the class unscored. */
  double iou_threshold[8];
} sy_eval_options;

typedef struct sy_class_ap {
  int class_id;
  const char* class_name;
  double iou_threshold;
  double ap;
  size_t gt_count;
  size_t det_count;
} sy_class_ap;

typedef struct sy_eval_result sy_eval_result;

/* Car 0.7, Pedestrian 0.5, Cyclist 0.5. */
SY_API sy_eval_options sy_eval_defaults(void);
SY_API const char* sy_class_name(int class_id);
SY_API int sy_class_id(const char* name);
/* Pairs <frame>.json files (run manifests excluded) of both directories by frame id; ground truth
   without predictions counts as a frame with no detections. */
SY_API sy_status sy_evaluate_directories(const char* pred_dir, const char* gt_dir, const sy_eval_options* options,
                                         sy_eval_result** out);
SY_API size_t sy_eval_class_count(const sy_eval_result* result);
SY_API sy_status sy_eval_class(const sy_eval_result* result, size_t i, sy_class_ap* out);
SY_API size_t sy_eval_warning_count(const sy_eval_result* result);
SY_API const char* sy_eval_warning(const sy_eval_result* result, size_t i);
SY_API sy_status sy_eval_write(const sy_eval_result* result, const char* path);
SY_API void sy_eval_free(sy_eval_result* result);

/* Toy training */

typedef struct sy_train_options {
  uint64_t seed;
  int iterations;
  double learning_rate;
  double warmup_learning_rate;
  int warmup_iterations;
  double momentum;
  double weight_decay;
  int threads;
} sy_train_options;

typedef struct sy_train_step {
  int iteration;
  double learning_rate;
  double total, coord, obj, noobj, cls, euler;
} sy_train_step;

typedef struct sy_train_result sy_train_result;

SY_API sy_train_options sy_train_defaults(void);
SY_API sy_status sy_train_toy(const sy_network* net, const sy_weights* initial, const sy_train_options* options,
                              sy_train_result** out);
SY_API size_t sy_train_step_count(const sy_train_result* result);
SY_API sy_status sy_train_step_at(const sy_train_result* result, size_t i, sy_train_step* out);
/* Trained weights; owned by the result. */
SY_API const sy_weights* sy_train_weights(const sy_train_result* result);
/* CSV with one row per iteration. */
SY_API sy_status sy_train_write_trace(const sy_train_result* result, const char* path);
SY_API void sy_train_free(sy_train_result* result);

/* Synthetic scenes */

typedef struct sy_scene_options {
  uint64_t seed;
  int objects;
  /* Non-zero: small single objects sized for the reduced training grid. */
  int toy;
  /* Region of a grid with these cells, as in sy_voxelize_options. */
  int cells[3];
} sy_scene_options;

SY_API sy_scene_options sy_scene_defaults(void);
/* Writes the scene's point cloud and its ground-truth box file. */
SY_API sy_status sy_synth_scene(const sy_scene_options* options, const char* frame_id, const char* cloud_path,
                                const char* truth_path);

#ifdef __cplusplus
}
#endif

#endif
