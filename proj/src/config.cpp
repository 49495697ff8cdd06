#include "mom/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mom/error.hpp"

namespace mom {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorKind::InvalidConfig, "bad value '" + value + "' for key '" + key + "'");
  }
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_switch(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw Error(ErrorKind::InvalidConfig, "expected on/off for key '" + key + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& to_text) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) s += ",";
    s += to_text(items[i]);
  }
  return s;
}

}  // namespace

ArenaSpec ExperimentConfig::arena() const {
  ArenaSpec a;
  a.width = arena_width;
  a.depth = arena_depth;
  a.margin = arena_margin;
  a.square_side = square_side;
  a.cameras = corner_cameras(arena_width, arena_depth, rig);
  return a;
}

NoiseSpec ExperimentConfig::noise() const {
  return NoiseSpec{camera_offset_max, joint_noise_std, derive_seed(seed, {tag::kNoise}), offset_distribution};
}

std::uint64_t ExperimentConfig::train_seed() const { return derive_seed(seed, {tag::kTrain}); }

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.shape = shape;
  t.shape.cameras = rig.count;
  t.shape.means_per_image = estimators.means_per_image;
  t.estimators = estimators;
  t.normalization = PixelNormalization{static_cast<double>(rig.image_width), static_cast<double>(rig.image_height)};
  t.adam = adam;
  t.loss = loss;
  t.epochs = epochs;
  t.max_steps = max_steps;
  t.batch_size = batch_size;
  t.seed = train_seed();
  return t;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (train_subjects.empty()) fail("at least one train subject is required");
  for (int s : train_subjects) {
    if (std::count(train_subjects.begin(), train_subjects.end(), s) > 1) fail("duplicate train subject");
    if (std::find(test_subjects.begin(), test_subjects.end(), s) != test_subjects.end()) {
      fail("subject " + std::to_string(s) + " appears in both train and test sets");
    }
  }
  for (int s : test_subjects) {
    if (std::count(test_subjects.begin(), test_subjects.end(), s) > 1) fail("duplicate test subject");
  }
  for (int s : train_subjects) if (s < 0 || s > 9000) fail("subject ids must be in [0, 9000]");
  for (int s : test_subjects) if (s < 0 || s > 9000) fail("subject ids must be in [0, 9000]");
  if (camera_offset_max < 0.0 || joint_noise_std < 0.0) fail("noise amplitudes must be non-negative");
  if (!(frame_rate > 0.0) || !(random_walk_duration > 0.0)) fail("frame rate and duration must be positive");
  if (random_walk_duration * frame_rate >= 100000.0) fail("trajectories are limited to 100000 frames");
  if (estimators.points_per_mean < 1 || estimators.means_per_image < 1) fail("estimator settings must be positive");
  if (epochs < 1 || batch_size < 1) fail("epochs and batch size must be positive");
  if (calibration_frames < 1) fail("calibration_frames must be positive");
  if (report.rpe_delta < 1) fail("rpe_delta must be at least 1");
  if (rig.count < 2 || rig.count > 4) fail("cameras must be 2..4");
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  auto d = [&] { return parse_number<double>(key, value); };
  auto i = [&] { return parse_number<int>(key, value); };
  auto subjects = [&] {
    std::vector<int> out;
    for (const auto& s : split_list(value)) out.push_back(parse_number<int>(key, s));
    return out;
  };
  auto patterns = [&] {
    std::vector<PatternKind> out;
    for (const auto& s : split_list(value)) {
      try {
        out.push_back(parse_pattern(s));
      } catch (const Error&) {
        throw Error(ErrorKind::InvalidConfig, "unknown pattern '" + s + "'");
      }
    }
    return out;
  };

  if (key == "arena_width") c.arena_width = d();
  else if (key == "arena_depth") c.arena_depth = d();
  else if (key == "arena_margin") c.arena_margin = d();
  else if (key == "square_side") c.square_side = d();
  else if (key == "cameras") c.rig.count = i();
  else if (key == "camera_height") c.rig.height = d();
  else if (key == "camera_pitch_deg") c.rig.pitch_deg = d();
  else if (key == "camera_fill") c.rig.fill = d();
  else if (key == "image_width") c.rig.image_width = i();
  else if (key == "image_height") c.rig.image_height = i();
  else if (key == "train_subjects") c.train_subjects = subjects();
  else if (key == "test_subjects") c.test_subjects = subjects();
  else if (key == "train_patterns") c.train_patterns = patterns();
  else if (key == "test_patterns") c.test_patterns = patterns();
  else if (key == "random_walk_duration") c.random_walk_duration = d();
  else if (key == "frame_rate") c.frame_rate = d();
  else if (key == "camera_offset_max") c.camera_offset_max = d();
  else if (key == "joint_noise_std") c.joint_noise_std = d();
  else if (key == "offset_distribution") {
    if (value == "uniform") c.offset_distribution = OffsetDistribution::Uniform;
    else if (value == "corner") c.offset_distribution = OffsetDistribution::Corner;
    else throw Error(ErrorKind::InvalidConfig, "offset_distribution must be uniform or corner");
  } else if (key == "points_per_mean") c.estimators.points_per_mean = i();
  else if (key == "means_per_image") c.estimators.means_per_image = i();
  else if (key == "observation_mode") {
    if (value == "on_the_fly") c.observation_mode = ObservationMode::OnTheFly;
    else if (value == "presampled") c.observation_mode = ObservationMode::Presampled;
    else throw Error(ErrorKind::InvalidConfig, "observation_mode must be on_the_fly or presampled");
  } else if (key == "local_width") c.shape.local_width = i();
  else if (key == "local_blocks") c.shape.local_blocks = i();
  else if (key == "global_width") c.shape.global_width = i();
  else if (key == "global_blocks") c.shape.global_blocks = i();
  else if (key == "lambda") c.loss.lambda = d();
  else if (key == "decoder") c.loss.decoder = parse_switch(key, value);
  else if (key == "rec_gradient") {
    if (value == "joint") c.loss.rec_gradient = RecGradient::Joint;
    else if (value == "alternating") c.loss.rec_gradient = RecGradient::Alternating;
    else throw Error(ErrorKind::InvalidConfig, "rec_gradient must be joint or alternating");
  } else if (key == "learning_rate") c.adam.learning_rate = d();
  else if (key == "adam_beta1") c.adam.beta1 = d();
  else if (key == "adam_beta2") c.adam.beta2 = d();
  else if (key == "adam_epsilon") c.adam.epsilon = d();
  else if (key == "batch_size") c.batch_size = i();
  else if (key == "epochs") c.epochs = i();
  else if (key == "max_steps") c.max_steps = parse_number<std::int64_t>(key, value);
  else if (key == "calibration_frames") c.calibration_frames = i();
  else if (key == "rpe_delta") c.report.rpe_delta = i();
  else if (key == "std_mode") {
    if (value == "population") c.report.std_mode = StdMode::Population;
    else if (value == "sample") c.report.std_mode = StdMode::Sample;
    else throw Error(ErrorKind::InvalidConfig, "std_mode must be population or sample");
  } else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else throw Error(ErrorKind::InvalidConfig, "unknown key '" + key + "'");
}

void apply_config(ExperimentConfig& c, std::istream& in) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(lineno) + ": expected key=value");
    }
    set_config_value(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  apply_config(c, in);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IOFailure, "cannot open config " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  auto pat = [](PatternKind k) { return std::string(to_string(k)); };
  auto num = [](int v) { return std::to_string(v); };
  out << "# arena\n";
  out << "arena_width=" << fmt(c.arena_width) << "\n";
  out << "arena_depth=" << fmt(c.arena_depth) << "\n";
  out << "arena_margin=" << fmt(c.arena_margin) << "\n";
  out << "square_side=" << fmt(c.square_side) << "\n";
  out << "cameras=" << c.rig.count << "\n";
  out << "camera_height=" << fmt(c.rig.height) << "\n";
  out << "camera_pitch_deg=" << fmt(c.rig.pitch_deg) << "\n";
  out << "camera_fill=" << fmt(c.rig.fill) << "\n";
  out << "image_width=" << c.rig.image_width << "\n";
  out << "image_height=" << c.rig.image_height << "\n";
  out << "# subjects and walks\n";
  out << "train_subjects=" << join(c.train_subjects, num) << "\n";
  out << "test_subjects=" << join(c.test_subjects, num) << "\n";
  out << "train_patterns=" << join(c.train_patterns, pat) << "\n";
  out << "test_patterns=" << join(c.test_patterns, pat) << "\n";
  out << "random_walk_duration=" << fmt(c.random_walk_duration) << "\n";
  out << "frame_rate=" << fmt(c.frame_rate) << "\n";
  out << "# perturbations\n";
  out << "camera_offset_max=" << fmt(c.camera_offset_max) << "\n";
  out << "joint_noise_std=" << fmt(c.joint_noise_std) << "\n";
  out << "offset_distribution=" << (c.offset_distribution == OffsetDistribution::Uniform ? "uniform" : "corner") << "\n";
  out << "# estimators\n";
  out << "points_per_mean=" << c.estimators.points_per_mean << "\n";
  out << "means_per_image=" << c.estimators.means_per_image << "\n";
  out << "observation_mode=" << (c.observation_mode == ObservationMode::OnTheFly ? "on_the_fly" : "presampled") << "\n";
  out << "# network\n";
  out << "local_width=" << c.shape.local_width << "\n";
  out << "local_blocks=" << c.shape.local_blocks << "\n";
  out << "global_width=" << c.shape.global_width << "\n";
  out << "global_blocks=" << c.shape.global_blocks << "\n";
  out << "lambda=" << fmt(c.loss.lambda) << "\n";
  out << "decoder=" << (c.loss.decoder ? "on" : "off") << "\n";
  out << "rec_gradient=" << (c.loss.rec_gradient == RecGradient::Joint ? "joint" : "alternating") << "\n";
  out << "learning_rate=" << fmt(c.adam.learning_rate) << "\n";
  out << "adam_beta1=" << fmt(c.adam.beta1) << "\n";
  out << "adam_beta2=" << fmt(c.adam.beta2) << "\n";
  out << "adam_epsilon=" << fmt(c.adam.epsilon) << "\n";
  out << "batch_size=" << c.batch_size << "\n";
  out << "epochs=" << c.epochs << "\n";
  out << "max_steps=" << c.max_steps << "\n";
  out << "# evaluation\n";
  out << "calibration_frames=" << c.calibration_frames << "\n";
  out << "rpe_delta=" << c.report.rpe_delta << "\n";
  out << "std_mode=" << (c.report.std_mode == StdMode::Population ? "population" : "sample") << "\n";
  out << "seed=" << c.seed << "\n";
}

}  // namespace mom
