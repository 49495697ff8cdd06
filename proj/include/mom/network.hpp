#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mom/estimators.hpp"
#include "mom/geometry.hpp"
#include "mom/simulator.hpp"

namespace mom {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Fixed MoM encoder topology. Each camera has a local stack (input layer to local_width, then
// local_blocks residual blocks); the concatenated local features feed a global stack of the same
// form; a linear head emits the 3-D location followed by one row-major 3x4 matrix per camera.
struct NetworkShape {
  int cameras = 2;
  int means_per_image = 12;
  int local_width = 48;
  int local_blocks = 2;
  int global_width = 96;
  int global_blocks = 3;

  int input_per_camera() const { return 2 * means_per_image; }
  int input_width() const { return cameras * input_per_camera(); }
  int output_width() const { return 3 + 12 * cameras; }
  bool operator==(const NetworkShape&) const = default;
};

struct LayerSlot {
  std::string name;
  int in = 0;
  int out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

// All weights live in one flat buffer; layers are row-major views into it, in declared order:
// local stacks per camera, global stack, head. Within a layer the weight precedes the bias.
class NetworkParameters {
 public:
  NetworkParameters() = default;
  explicit NetworkParameters(const NetworkShape& shape);

  const NetworkShape& shape() const { return shape_; }
  const std::vector<LayerSlot>& layers() const { return layers_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  // Every mutable access bumps the version, invalidating earlier tapes.
  std::span<double> mutable_values();
  std::uint64_t version() const { return version_; }

  Eigen::Map<const RowMatrix> weight(std::size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
  Eigen::Map<RowMatrix> weight(std::size_t layer);
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);

  std::size_t local_input(int camera) const;
  std::size_t local_block(int camera, int block, int layer) const;
  std::size_t global_input() const;
  std::size_t global_block(int block, int layer) const;
  std::size_t head() const;

 private:
  NetworkShape shape_;
  std::vector<LayerSlot> layers_;
  std::vector<double> values_;
  std::uint64_t version_ = 0;
};

// Uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)) weights, zero biases.
NetworkParameters init_parameters(const NetworkShape& shape, std::uint64_t seed);

// Activations kept for the backward pass. Each entry is the post-activation output of a layer;
// entry 0 of a stack list is the stack input.
struct Tape {
  std::uint64_t params_version = 0;
  std::vector<std::vector<Eigen::MatrixXd>> local;  // per camera
  std::vector<Eigen::MatrixXd> global;
  Eigen::MatrixXd output;
};

struct ForwardPass {
  Eigen::MatrixXd location;  // batch x 3
  Eigen::MatrixXd matrices;  // batch x 12k, camera k occupies columns [12k, 12k+12)
  Tape tape;

  Mat34 matrix(Eigen::Index row, int camera) const;
};

ForwardPass encoder_forward(const NetworkParameters& params, const Eigen::MatrixXd& inputs);

// P_k [y; 1] for every row; one batch x 3 matrix per camera.
std::vector<Eigen::MatrixXd> decoder_forward(const Eigen::MatrixXd& matrices, const Eigen::MatrixXd& location);
Vec3 decode(const Mat34& matrix, const Vec3& location);

inline constexpr double kNormSmoothing = 1e-8;
// sqrt(|r|^2 + eps^2) - eps
double smooth_norm(const Eigen::Ref<const Eigen::VectorXd>& r);

// Mean over the batch of the smoothed Euclidean distance.
double loss_localization(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& target);
// Sum over cameras of batch-mean smoothed distances to [u, v, 1]; targets are batch x 2k.
double loss_reconstruction(const std::vector<Eigen::MatrixXd>& reconstructions, const Eigen::MatrixXd& pixel_targets);

enum class RecGradient { Joint, Alternating };

struct LossWeights {
  double lambda = 1.0;
  bool decoder = true;
  // Alternating stops the reconstruction gradient at the predicted location.
  RecGradient rec_gradient = RecGradient::Joint;
  // Decode the ground-truth location instead of the prediction (decoder sanity experiments).
  bool freeze_location = false;
  double scale = 1.0;
};

struct TrainingBatch {
  Eigen::MatrixXd inputs;         // batch x 24k, pixels normalized to [0, 1]
  Eigen::MatrixXd targets_world;  // batch x 3, meters
  Eigen::MatrixXd targets_pixels; // batch x 2k, normalized joint-pixel means
};

struct LossValue {
  double localization = 0.0;
  double reconstruction = 0.0;
  double total = 0.0;
};

LossValue evaluate_loss(const ForwardPass& pass, const TrainingBatch& batch, const LossWeights& weights);

// Exact reverse-mode gradient of scale * (L_loc + lambda * L_rec), laid out like params.
NetworkParameters backward(const ForwardPass& pass, const NetworkParameters& params, const TrainingBatch& batch,
                           const LossWeights& weights);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step = 0;
};

// Bias-corrected Adam on flat buffers. Moments are sized on first use.
void adam_step(OptimizerState& state, std::span<double> params, std::span<const double> gradients);
void optimizer_step(OptimizerState& state, NetworkParameters& params, const NetworkParameters& gradients);

struct PixelNormalization {
  double width = 640.0;
  double height = 480.0;
};

// Row of network input for one frame's means plus the matching targets.
void fill_batch_row(const MeanEstimatorBatch& means, const PixelNormalization& norm, Eigen::Index row,
                    TrainingBatch& batch);
TrainingBatch make_training_batch(std::span<const MeanEstimatorBatch> means, const PixelNormalization& norm);

struct TrainConfig {
  NetworkShape shape;
  EstimatorSettings estimators;
  PixelNormalization normalization;
  AdamConfig adam;
  LossWeights loss;
  int epochs = 60;
  std::int64_t max_steps = 0;  // 0 = no step budget
  int batch_size = 128;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double loc_train = 0.0;
  double rec_train = 0.0;
  double loc_test = 0.0;
  double rec_test = 0.0;
};

struct TrainResult {
  NetworkParameters params;
  std::vector<EpochRecord> history;
  std::int64_t steps = 0;
};

// Means for training frames are redrawn every epoch; test means are fixed per frame.
TrainResult train(const TrainConfig& config, std::span<const SkeletonFrame> train_frames,
                  std::span<const SkeletonFrame> test_frames);

// Fixed evaluation input for a frame (seeded by frame id only).
MeanEstimatorBatch evaluation_means(const SkeletonFrame& frame, const EstimatorSettings& settings, std::uint64_t seed);

Eigen::MatrixXd predict(const NetworkParameters& params, const Eigen::MatrixXd& inputs);

struct CheckpointMeta {
  PixelNormalization normalization;
  double lambda = 1.0;
  bool decoder = true;
  std::uint64_t seed = 0;
  int epoch = 0;
};

void write_checkpoint(std::ostream& out, const NetworkParameters& params, const CheckpointMeta& meta);
NetworkParameters read_checkpoint(std::istream& in, CheckpointMeta& meta);

// Constant per-camera decoder matrices fitted with the location frozen at ground truth.
struct DecoderFit {
  std::vector<Mat34> matrices;
  double reconstruction_loss = 0.0;
};

struct DecoderFitConfig {
  AdamConfig adam{1e-2, 0.9, 0.999, 1e-8};
  int iterations = 20000;
};

DecoderFit fit_decoder(std::span<const Vec3> locations, const Eigen::MatrixXd& pixel_targets, int cameras,
                       const DecoderFitConfig& config = {});

}  // namespace mom
