#include "mom/network.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mom/error.hpp"
#include "mom/rng.hpp"

namespace mom {

namespace {

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

Eigen::MatrixXd relu(Eigen::MatrixXd z) { return z.cwiseMax(0.0); }

Eigen::MatrixXd affine(const NetworkParameters& p, std::size_t layer, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = x * p.weight(layer).transpose();
  z.rowwise() += p.bias(layer).transpose();
  return z;
}

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& grad, const Eigen::MatrixXd& activation) {
  return (activation.array() > 0.0).select(grad, 0.0);
}

// Accumulates dW, db for one affine layer and returns the gradient at its input.
Eigen::MatrixXd affine_backward(const NetworkParameters& p, NetworkParameters& g, std::size_t layer,
                                const Eigen::MatrixXd& dz, const Eigen::MatrixXd& input) {
  g.weight(layer).noalias() += dz.transpose() * input;
  g.bias(layer) += dz.colwise().sum().transpose();
  return dz * p.weight(layer);
}

struct StackLayout {
  std::size_t input;
  std::vector<std::array<std::size_t, 3>> blocks;
};

StackLayout local_layout(const NetworkParameters& p, int camera) {
  StackLayout s{p.local_input(camera), {}};
  for (int b = 0; b < p.shape().local_blocks; ++b)
    s.blocks.push_back({p.local_block(camera, b, 0), p.local_block(camera, b, 1), p.local_block(camera, b, 2)});
  return s;
}

StackLayout global_layout(const NetworkParameters& p) {
  StackLayout s{p.global_input(), {}};
  for (int b = 0; b < p.shape().global_blocks; ++b)
    s.blocks.push_back({p.global_block(b, 0), p.global_block(b, 1), p.global_block(b, 2)});
  return s;
}

// acts: [input, h0, (a1, a2, a3, out) per block]
std::vector<Eigen::MatrixXd> stack_forward(const NetworkParameters& p, const StackLayout& layout,
                                           const Eigen::MatrixXd& input) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(2 + 4 * layout.blocks.size());
  acts.push_back(input);
  acts.push_back(relu(affine(p, layout.input, input)));
  for (const auto& block : layout.blocks) {
    const Eigen::MatrixXd& x0 = acts.back();
    Eigen::MatrixXd a1 = relu(affine(p, block[0], x0));
    Eigen::MatrixXd a2 = relu(affine(p, block[1], a1));
    Eigen::MatrixXd a3 = relu(affine(p, block[2], a2));
    Eigen::MatrixXd out = relu(a3 + x0);
    acts.push_back(std::move(a1));
    acts.push_back(std::move(a2));
    acts.push_back(std::move(a3));
    acts.push_back(std::move(out));
  }
  return acts;
}

// Returns the gradient at the stack input.
Eigen::MatrixXd stack_backward(const NetworkParameters& p, NetworkParameters& g, const StackLayout& layout,
                               const std::vector<Eigen::MatrixXd>& acts, Eigen::MatrixXd grad) {
  for (std::size_t b = layout.blocks.size(); b-- > 0;) {
    const std::size_t base = 2 + 4 * b;
    const Eigen::MatrixXd& x0 = acts[base - 1];
    const Eigen::MatrixXd& a1 = acts[base];
    const Eigen::MatrixXd& a2 = acts[base + 1];
    const Eigen::MatrixXd& a3 = acts[base + 2];
    const Eigen::MatrixXd& out = acts[base + 3];
    const auto& block = layout.blocks[b];

    const Eigen::MatrixXd ds = relu_mask(grad, out);
    Eigen::MatrixXd d = affine_backward(p, g, block[2], relu_mask(ds, a3), a2);
    d = affine_backward(p, g, block[1], relu_mask(d, a2), a1);
    d = affine_backward(p, g, block[0], relu_mask(d, a1), x0);
    grad = d + ds;
  }
  return affine_backward(p, g, layout.input, relu_mask(grad, acts[1]), acts[0]);
}

void check_batch(const ForwardPass& pass, const TrainingBatch& batch, int cameras) {
  const auto n = pass.location.rows();
  if (batch.targets_world.rows() != n || batch.targets_world.cols() != 3 || batch.targets_pixels.rows() != n ||
      batch.targets_pixels.cols() != 2 * cameras) {
    throw Error(ErrorKind::ShapeMismatch, "batch targets do not match the forward pass");
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

NetworkParameters::NetworkParameters(const NetworkShape& shape) : shape_(shape), version_(next_version()) {
  if (shape.cameras < 1 || shape.means_per_image < 1 || shape.local_width < 1 || shape.global_width < 1 ||
      shape.local_blocks < 0 || shape.global_blocks < 0) {
    throw Error(ErrorKind::InvalidArgument, "invalid network shape");
  }
  std::size_t offset = 0;
  auto add = [&](std::string name, int in, int out) {
    LayerSlot slot{std::move(name), in, out, offset, offset + static_cast<std::size_t>(in) * static_cast<std::size_t>(out)};
    offset = slot.bias_offset + static_cast<std::size_t>(out);
    layers_.push_back(std::move(slot));
  };
  for (int c = 0; c < shape.cameras; ++c) {
    const std::string prefix = "local" + std::to_string(c);
    add(prefix + ".input", shape.input_per_camera(), shape.local_width);
    for (int b = 0; b < shape.local_blocks; ++b)
      for (int l = 0; l < 3; ++l)
        add(prefix + ".block" + std::to_string(b) + ".fc" + std::to_string(l), shape.local_width, shape.local_width);
  }
  add("global.input", shape.cameras * shape.local_width, shape.global_width);
  for (int b = 0; b < shape.global_blocks; ++b)
    for (int l = 0; l < 3; ++l)
      add("global.block" + std::to_string(b) + ".fc" + std::to_string(l), shape.global_width, shape.global_width);
  add("head", shape.global_width, shape.output_width());
  values_.assign(offset, 0.0);
}

std::span<double> NetworkParameters::mutable_values() {
  version_ = next_version();
  return values_;
}

Eigen::Map<const RowMatrix> NetworkParameters::weight(std::size_t layer) const {
  const auto& s = layers_.at(layer);
  return {values_.data() + s.weight_offset, s.out, s.in};
}

Eigen::Map<const Eigen::VectorXd> NetworkParameters::bias(std::size_t layer) const {
  const auto& s = layers_.at(layer);
  return {values_.data() + s.bias_offset, s.out};
}

Eigen::Map<RowMatrix> NetworkParameters::weight(std::size_t layer) {
  const auto& s = layers_.at(layer);
  version_ = next_version();
  return {values_.data() + s.weight_offset, s.out, s.in};
}

Eigen::Map<Eigen::VectorXd> NetworkParameters::bias(std::size_t layer) {
  const auto& s = layers_.at(layer);
  version_ = next_version();
  return {values_.data() + s.bias_offset, s.out};
}

std::size_t NetworkParameters::local_input(int camera) const {
  return static_cast<std::size_t>(camera * (1 + 3 * shape_.local_blocks));
}

std::size_t NetworkParameters::local_block(int camera, int block, int layer) const {
  return local_input(camera) + 1 + static_cast<std::size_t>(3 * block + layer);
}

std::size_t NetworkParameters::global_input() const { return local_input(shape_.cameras); }

std::size_t NetworkParameters::global_block(int block, int layer) const {
  return global_input() + 1 + static_cast<std::size_t>(3 * block + layer);
}

std::size_t NetworkParameters::head() const { return global_block(shape_.global_blocks, 0); }

NetworkParameters init_parameters(const NetworkShape& shape, std::uint64_t seed) {
  NetworkParameters p(shape);
  Rng rng(seed);
  auto values = p.mutable_values();
  for (const auto& slot : p.layers()) {
    const double limit = std::sqrt(6.0 / slot.in);
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t i = 0; i < static_cast<std::size_t>(slot.in) * static_cast<std::size_t>(slot.out); ++i) {
      values[slot.weight_offset + i] = u(rng);
    }
  }
  return p;
}

Mat34 ForwardPass::matrix(Eigen::Index row, int camera) const {
  Mat34 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = matrices(row, 12 * camera + 4 * r + c);
  return m;
}

ForwardPass encoder_forward(const NetworkParameters& params, const Eigen::MatrixXd& inputs) {
  const NetworkShape& shape = params.shape();
  if (inputs.cols() != shape.input_width()) {
    throw Error(ErrorKind::ShapeMismatch, "input width " + std::to_string(inputs.cols()) + " != " +
                                              std::to_string(shape.input_width()));
  }
  ForwardPass pass;
  pass.tape.params_version = params.version();

  Eigen::MatrixXd features(inputs.rows(), shape.cameras * shape.local_width);
  for (int c = 0; c < shape.cameras; ++c) {
    auto acts = stack_forward(params, local_layout(params, c),
                              inputs.middleCols(c * shape.input_per_camera(), shape.input_per_camera()));
    features.middleCols(c * shape.local_width, shape.local_width) = acts.back();
    pass.tape.local.push_back(std::move(acts));
  }
  pass.tape.global = stack_forward(params, global_layout(params), features);
  pass.tape.output = affine(params, params.head(), pass.tape.global.back());
  pass.location = pass.tape.output.leftCols(3);
  pass.matrices = pass.tape.output.rightCols(12 * shape.cameras);
  return pass;
}

Vec3 decode(const Mat34& matrix, const Vec3& location) { return matrix * location.homogeneous(); }

std::vector<Eigen::MatrixXd> decoder_forward(const Eigen::MatrixXd& matrices, const Eigen::MatrixXd& location) {
  if (matrices.rows() != location.rows() || location.cols() != 3 || matrices.cols() % 12 != 0) {
    throw Error(ErrorKind::ShapeMismatch, "decoder inputs disagree");
  }
  const auto k = matrices.cols() / 12;
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(k), Eigen::MatrixXd(location.rows(), 3));
  for (Eigen::Index b = 0; b < location.rows(); ++b) {
    for (Eigen::Index c = 0; c < k; ++c) {
      for (int r = 0; r < 3; ++r) {
        const Eigen::Index o = 12 * c + 4 * r;
        out[static_cast<std::size_t>(c)](b, r) = matrices(b, o) * location(b, 0) + matrices(b, o + 1) * location(b, 1) +
                                                 matrices(b, o + 2) * location(b, 2) + matrices(b, o + 3);
      }
    }
  }
  return out;
}

double smooth_norm(const Eigen::Ref<const Eigen::VectorXd>& r) {
  return std::sqrt(r.squaredNorm() + kNormSmoothing * kNormSmoothing) - kNormSmoothing;
}

double loss_localization(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols() || predicted.rows() == 0) {
    throw Error(ErrorKind::ShapeMismatch, "prediction and target shapes differ");
  }
  double sum = 0.0;
  for (Eigen::Index b = 0; b < predicted.rows(); ++b) sum += smooth_norm((predicted.row(b) - target.row(b)).transpose());
  return sum / static_cast<double>(predicted.rows());
}

double loss_reconstruction(const std::vector<Eigen::MatrixXd>& reconstructions, const Eigen::MatrixXd& pixel_targets) {
  if (pixel_targets.cols() != 2 * static_cast<Eigen::Index>(reconstructions.size())) {
    throw Error(ErrorKind::ShapeMismatch, "pixel targets need two columns per camera");
  }
  double total = 0.0;
  for (std::size_t c = 0; c < reconstructions.size(); ++c) {
    const auto& rec = reconstructions[c];
    if (rec.rows() != pixel_targets.rows() || rec.cols() != 3 || rec.rows() == 0) {
      throw Error(ErrorKind::ShapeMismatch, "reconstruction shape mismatch");
    }
    double sum = 0.0;
    for (Eigen::Index b = 0; b < rec.rows(); ++b) {
      const Eigen::Vector3d e(rec(b, 0) - pixel_targets(b, 2 * static_cast<Eigen::Index>(c)),
                              rec(b, 1) - pixel_targets(b, 2 * static_cast<Eigen::Index>(c) + 1), rec(b, 2) - 1.0);
      sum += smooth_norm(e);
    }
    total += sum / static_cast<double>(rec.rows());
  }
  return total;
}

LossValue evaluate_loss(const ForwardPass& pass, const TrainingBatch& batch, const LossWeights& weights) {
  const auto cameras = static_cast<int>(pass.matrices.cols() / 12);
  check_batch(pass, batch, cameras);
  LossValue v;
  v.localization = loss_localization(pass.location, batch.targets_world);
  if (weights.decoder) {
    const Eigen::MatrixXd& y = weights.freeze_location ? batch.targets_world : pass.location;
    v.reconstruction = loss_reconstruction(decoder_forward(pass.matrices, y), batch.targets_pixels);
  }
  v.total = weights.scale * (v.localization + (weights.decoder ? weights.lambda * v.reconstruction : 0.0));
  return v;
}

NetworkParameters backward(const ForwardPass& pass, const NetworkParameters& params, const TrainingBatch& batch,
                           const LossWeights& weights) {
  if (pass.tape.params_version != params.version()) {
    throw Error(ErrorKind::StaleTape, "parameters changed since the forward pass");
  }
  const NetworkShape& shape = params.shape();
  check_batch(pass, batch, shape.cameras);
  const Eigen::Index n = pass.location.rows();
  const double inv_n = weights.scale / static_cast<double>(n);

  Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(n, shape.output_width());
  for (Eigen::Index b = 0; b < n; ++b) {
    const Vec3 r = (pass.location.row(b) - batch.targets_world.row(b)).transpose();
    d_out.block<1, 3>(b, 0) = inv_n * r.transpose() / std::sqrt(r.squaredNorm() + kNormSmoothing * kNormSmoothing);
  }
  if (weights.decoder) {
    const double rec_scale = inv_n * weights.lambda;
    for (Eigen::Index b = 0; b < n; ++b) {
      const Vec3 y = weights.freeze_location ? Vec3(batch.targets_world.row(b).transpose())
                                             : Vec3(pass.location.row(b).transpose());
      const Vec4 hom = y.homogeneous();
      for (int c = 0; c < shape.cameras; ++c) {
        const Mat34 m = pass.matrix(b, c);
        const Vec3 target(batch.targets_pixels(b, 2 * c), batch.targets_pixels(b, 2 * c + 1), 1.0);
        const Vec3 e = m * hom - target;
        const Vec3 ge = rec_scale * e / std::sqrt(e.squaredNorm() + kNormSmoothing * kNormSmoothing);
        for (int r = 0; r < 3; ++r)
          for (int col = 0; col < 4; ++col) d_out(b, 3 + 12 * c + 4 * r + col) += ge(r) * hom(col);
        if (weights.rec_gradient == RecGradient::Joint && !weights.freeze_location) {
          d_out.block<1, 3>(b, 0) += (m.leftCols<3>().transpose() * ge).transpose();
        }
      }
    }
  }

  NetworkParameters grads(shape);
  const Eigen::MatrixXd d_global = affine_backward(params, grads, params.head(), d_out, pass.tape.global.back());
  const Eigen::MatrixXd d_features = stack_backward(params, grads, global_layout(params), pass.tape.global, d_global);
  for (int c = 0; c < shape.cameras; ++c) {
    stack_backward(params, grads, local_layout(params, c), pass.tape.local[static_cast<std::size_t>(c)],
                   d_features.middleCols(c * shape.local_width, shape.local_width));
  }
  return grads;
}

void adam_step(OptimizerState& state, std::span<double> params, std::span<const double> gradients) {
  if (params.size() != gradients.size()) throw Error(ErrorKind::ShapeMismatch, "gradient size differs from parameters");
  if (state.first_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  if (state.first_moment.size() != params.size()) {
    throw Error(ErrorKind::ShapeMismatch, "optimizer state sized for different parameters");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = gradients[i];
    state.first_moment[i] = c.beta1 * state.first_moment[i] + (1.0 - c.beta1) * g;
    state.second_moment[i] = c.beta2 * state.second_moment[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.first_moment[i] / correction1;
    const double v_hat = state.second_moment[i] / correction2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

void optimizer_step(OptimizerState& state, NetworkParameters& params, const NetworkParameters& gradients) {
  if (!(params.shape() == gradients.shape())) throw Error(ErrorKind::ShapeMismatch, "gradient shape differs");
  adam_step(state, params.mutable_values(), gradients.values());
}

void fill_batch_row(const MeanEstimatorBatch& means, const PixelNormalization& norm, Eigen::Index row,
                    TrainingBatch& batch) {
  const auto k = static_cast<Eigen::Index>(means.per_camera_means.size());
  Eigen::Index col = 0;
  for (Eigen::Index c = 0; c < k; ++c) {
    for (const auto& p : means.per_camera_means[static_cast<std::size_t>(c)]) {
      batch.inputs(row, col++) = p.x() / norm.width;
      batch.inputs(row, col++) = p.y() / norm.height;
    }
    batch.targets_pixels(row, 2 * c) = means.pixel_targets[static_cast<std::size_t>(c)].x() / norm.width;
    batch.targets_pixels(row, 2 * c + 1) = means.pixel_targets[static_cast<std::size_t>(c)].y() / norm.height;
  }
  if (col != batch.inputs.cols()) throw Error(ErrorKind::ShapeMismatch, "mean count does not match input width");
  batch.targets_world.row(row) = means.target.transpose();
}

TrainingBatch make_training_batch(std::span<const MeanEstimatorBatch> means, const PixelNormalization& norm) {
  if (means.empty()) throw Error(ErrorKind::EmptyDataset, "no samples for the batch");
  const auto k = static_cast<Eigen::Index>(means.front().per_camera_means.size());
  const auto m = static_cast<Eigen::Index>(means.front().per_camera_means.front().size());
  const auto n = static_cast<Eigen::Index>(means.size());
  TrainingBatch batch{Eigen::MatrixXd(n, 2 * m * k), Eigen::MatrixXd(n, 3), Eigen::MatrixXd(n, 2 * k)};
  for (Eigen::Index i = 0; i < n; ++i) fill_batch_row(means[static_cast<std::size_t>(i)], norm, i, batch);
  return batch;
}

MeanEstimatorBatch evaluation_means(const SkeletonFrame& frame, const EstimatorSettings& settings, std::uint64_t seed) {
  return build_batch(frame, settings, derive_seed(seed, {tag::kEval, static_cast<std::uint64_t>(frame.frame_id)}));
}

Eigen::MatrixXd predict(const NetworkParameters& params, const Eigen::MatrixXd& inputs) {
  return encoder_forward(params, inputs).location;
}

namespace {

struct LossSums {
  double loc = 0.0, rec = 0.0;
  Eigen::Index count = 0;
};

LossSums batched_loss(const NetworkParameters& params, const TrainingBatch& data, const LossWeights& weights) {
  constexpr Eigen::Index kChunk = 1024;
  LossSums sums;
  for (Eigen::Index start = 0; start < data.inputs.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, data.inputs.rows() - start);
    TrainingBatch chunk{data.inputs.middleRows(start, len), data.targets_world.middleRows(start, len),
                        data.targets_pixels.middleRows(start, len)};
    const ForwardPass pass = encoder_forward(params, chunk.inputs);
    const LossValue v = evaluate_loss(pass, chunk, weights);
    sums.loc += v.localization * static_cast<double>(len);
    sums.rec += v.reconstruction * static_cast<double>(len);
    sums.count += len;
  }
  return sums;
}

}  // namespace

TrainResult train(const TrainConfig& config, std::span<const SkeletonFrame> train_frames,
                  std::span<const SkeletonFrame> test_frames) {
  if (train_frames.empty()) throw Error(ErrorKind::EmptyDataset, "no training frames");
  if (config.batch_size < 1 || config.epochs < 1) throw Error(ErrorKind::InvalidConfig, "batch size and epochs must be positive");
  if (config.shape.means_per_image != config.estimators.means_per_image) {
    throw Error(ErrorKind::InvalidConfig, "network and estimator disagree on means per image");
  }
  for (const auto& f : train_frames) {
    if (static_cast<int>(f.joints_pixel.size()) != config.shape.cameras) {
      throw Error(ErrorKind::ShapeMismatch, "frame camera count differs from the network");
    }
  }

  TrainResult result{init_parameters(config.shape, derive_seed(config.seed, {tag::kInit})), {}, 0};
  OptimizerState optimizer{config.adam, {}, {}, 0};

  TrainingBatch test_data;
  if (!test_frames.empty()) {
    std::vector<MeanEstimatorBatch> means;
    means.reserve(test_frames.size());
    for (const auto& f : test_frames) means.push_back(evaluation_means(f, config.estimators, config.seed));
    test_data = make_training_batch(means, config.normalization);
  }

  std::vector<std::size_t> order(train_frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(config.batch_size);
  const Eigen::Index width = config.shape.input_width();
  const Eigen::Index k = config.shape.cameras;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, {tag::kShuffle, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loc_sum = 0.0, rec_sum = 0.0;
    std::size_t seen = 0;
    bool budget_hit = false;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t len = std::min(bs, order.size() - start);
      TrainingBatch batch{Eigen::MatrixXd(static_cast<Eigen::Index>(len), width),
                          Eigen::MatrixXd(static_cast<Eigen::Index>(len), 3),
                          Eigen::MatrixXd(static_cast<Eigen::Index>(len), 2 * k)};
      for (std::size_t i = 0; i < len; ++i) {
        const SkeletonFrame& f = train_frames[order[start + i]];
        const auto seed = derive_seed(config.seed, {tag::kBatch, static_cast<std::uint64_t>(epoch),
                                                    static_cast<std::uint64_t>(f.frame_id)});
        fill_batch_row(build_batch(f, config.estimators, seed), config.normalization, static_cast<Eigen::Index>(i), batch);
      }
      const ForwardPass pass = encoder_forward(result.params, batch.inputs);
      const LossValue loss = evaluate_loss(pass, batch, config.loss);
      const NetworkParameters grads = backward(pass, result.params, batch, config.loss);
      optimizer_step(optimizer, result.params, grads);
      ++result.steps;

      loc_sum += loss.localization * static_cast<double>(len);
      rec_sum += loss.reconstruction * static_cast<double>(len);
      seen += len;
      if (config.max_steps > 0 && result.steps >= config.max_steps) {
        budget_hit = true;
        break;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loc_train = loc_sum / static_cast<double>(seen);
    rec.rec_train = rec_sum / static_cast<double>(seen);
    if (!test_frames.empty()) {
      const LossSums t = batched_loss(result.params, test_data, config.loss);
      rec.loc_test = t.loc / static_cast<double>(t.count);
      rec.rec_test = t.rec / static_cast<double>(t.count);
    } else {
      rec.loc_test = rec.rec_test = std::numeric_limits<double>::quiet_NaN();
    }
    result.history.push_back(rec);
    if (budget_hit) break;
  }
  return result;
}

void write_checkpoint(std::ostream& out, const NetworkParameters& params, const CheckpointMeta& meta) {
  const NetworkShape& s = params.shape();
  out << "mom-checkpoint 1\n";
  out << "cameras " << s.cameras << "\n";
  out << "means_per_image " << s.means_per_image << "\n";
  out << "local_width " << s.local_width << "\n";
  out << "local_blocks " << s.local_blocks << "\n";
  out << "global_width " << s.global_width << "\n";
  out << "global_blocks " << s.global_blocks << "\n";
  out << "layers";
  for (const auto& l : params.layers()) out << ' ' << l.name << ':' << l.in << 'x' << l.out;
  out << "\n";
  out << "image_width " << format_double(meta.normalization.width) << "\n";
  out << "image_height " << format_double(meta.normalization.height) << "\n";
  out << "lambda " << format_double(meta.lambda) << "\n";
  out << "decoder " << (meta.decoder ? "on" : "off") << "\n";
  out << "seed " << meta.seed << "\n";
  out << "epoch " << meta.epoch << "\n";
  out << "parameters " << params.size() << "\n";
  for (double v : params.values()) out << format_double(v) << "\n";
  if (!out) throw Error(ErrorKind::IOFailure, "failed writing checkpoint");
}

NetworkParameters read_checkpoint(std::istream& in, CheckpointMeta& meta) {
  std::string line;
  if (!std::getline(in, line) || line != "mom-checkpoint 1") {
    throw Error(ErrorKind::ParseError, "not a checkpoint file");
  }
  std::map<std::string, std::string> header;
  while (std::getline(in, line)) {
    const auto space = line.find(' ');
    if (space == std::string::npos) throw Error(ErrorKind::ParseError, "malformed header line '" + line + "'");
    header[line.substr(0, space)] = line.substr(space + 1);
    if (line.starts_with("parameters ")) break;
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw Error(ErrorKind::ParseError, "checkpoint header lacks '" + key + "'");
    return it->second;
  };
  auto to_double = [](const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw Error(ErrorKind::ParseError, "bad number '" + s + "'");
    return v;
  };

  NetworkShape shape;
  shape.cameras = std::stoi(get("cameras"));
  shape.means_per_image = std::stoi(get("means_per_image"));
  shape.local_width = std::stoi(get("local_width"));
  shape.local_blocks = std::stoi(get("local_blocks"));
  shape.global_width = std::stoi(get("global_width"));
  shape.global_blocks = std::stoi(get("global_blocks"));
  meta.normalization.width = to_double(get("image_width"));
  meta.normalization.height = to_double(get("image_height"));
  meta.lambda = to_double(get("lambda"));
  meta.decoder = get("decoder") == "on";
  meta.seed = std::stoull(get("seed"));
  meta.epoch = std::stoi(get("epoch"));

  NetworkParameters params(shape);
  if (std::stoull(get("parameters")) != params.size()) {
    throw Error(ErrorKind::CheckpointMismatch, "parameter count does not match the declared shape");
  }
  auto values = params.mutable_values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "checkpoint truncated");
    values[i] = to_double(line);
  }
  return params;
}

DecoderFit fit_decoder(std::span<const Vec3> locations, const Eigen::MatrixXd& pixel_targets, int cameras,
                       const DecoderFitConfig& config) {
  const auto n = static_cast<Eigen::Index>(locations.size());
  if (n == 0) throw Error(ErrorKind::EmptyDataset, "no samples for decoder fit");
  if (pixel_targets.rows() != n || pixel_targets.cols() != 2 * cameras) {
    throw Error(ErrorKind::ShapeMismatch, "pixel targets need one row per location and two columns per camera");
  }
  std::vector<double> params(static_cast<std::size_t>(12 * cameras), 0.0);
  std::vector<double> grads(params.size());
  OptimizerState state{config.adam, {}, {}, 0};

  auto matrix_of = [&](int c) {
    Mat34 m;
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 4; ++col) m(r, col) = params[static_cast<std::size_t>(12 * c + 4 * r + col)];
    return m;
  };
  auto loss_and_grad = [&](bool want_grad) {
    std::fill(grads.begin(), grads.end(), 0.0);
    double loss = 0.0;
    for (int c = 0; c < cameras; ++c) {
      const Mat34 m = matrix_of(c);
      for (Eigen::Index b = 0; b < n; ++b) {
        const Vec4 hom = locations[static_cast<std::size_t>(b)].homogeneous();
        const Vec3 e = m * hom - Vec3(pixel_targets(b, 2 * c), pixel_targets(b, 2 * c + 1), 1.0);
        loss += smooth_norm(e) / static_cast<double>(n);
        if (!want_grad) continue;
        const Vec3 ge = e / (std::sqrt(e.squaredNorm() + kNormSmoothing * kNormSmoothing) * static_cast<double>(n));
        for (int r = 0; r < 3; ++r)
          for (int col = 0; col < 4; ++col) grads[static_cast<std::size_t>(12 * c + 4 * r + col)] += ge(r) * hom(col);
      }
    }
    return loss;
  };

  // Cosine-decayed step size; the norm loss is not smooth at the optimum, so a fixed rate would
  // leave the iterate oscillating at roughly the step size.
  const double base_lr = config.adam.learning_rate;
  for (int it = 0; it < config.iterations; ++it) {
    loss_and_grad(true);
    state.config.learning_rate =
        base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(it) / config.iterations)) + base_lr * 1e-4;
    adam_step(state, params, grads);
  }

  DecoderFit fit;
  for (int c = 0; c < cameras; ++c) fit.matrices.push_back(matrix_of(c));
  fit.reconstruction_loss = loss_and_grad(false);
  return fit;
}

}  // namespace mom
