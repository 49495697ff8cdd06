#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mom/metrics.hpp"
#include "mom/network.hpp"
#include "mom/simulator.hpp"

namespace mom {

enum class ObservationMode { OnTheFly, Presampled };

// Flat key=value experiment description. Every key has a default; see write_config for the list.
struct ExperimentConfig {
  // arena and cameras
  double arena_width = 10.0;
  double arena_depth = 10.0;
  double arena_margin = 1.5;
  double square_side = 6.0;
  CameraRig rig;

  // subjects and walks
  std::vector<int> train_subjects{1, 2, 3, 4};
  std::vector<int> test_subjects{5, 6};
  std::vector<PatternKind> train_patterns{PatternKind::RandomWalk};
  std::vector<PatternKind> test_patterns{PatternKind::RandomWalk, PatternKind::CrossWalk, PatternKind::SquareWalk};
  double random_walk_duration = 60.0;
  double frame_rate = 15.0;

  // perturbations
  double camera_offset_max = 0.0;
  double joint_noise_std = 0.0;
  OffsetDistribution offset_distribution = OffsetDistribution::Uniform;

  // estimators
  EstimatorSettings estimators;
  ObservationMode observation_mode = ObservationMode::OnTheFly;

  // network and training
  NetworkShape shape;
  AdamConfig adam;
  LossWeights loss;
  int epochs = 60;
  std::int64_t max_steps = 0;
  int batch_size = 128;

  // evaluation
  int calibration_frames = 10;
  ReportOptions report;

  std::uint64_t seed = 0;

  ArenaSpec arena() const;
  NoiseSpec noise() const;
  TrainConfig train_config() const;
  std::uint64_t train_seed() const;
  // Throws InvalidConfig on inconsistent settings (e.g. a subject in both splits).
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
// Applies the assignments in a config stream on top of an existing config, then validates.
void apply_config(ExperimentConfig& config, std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ExperimentConfig& config);
// Applies one key=value assignment; used by the parser and by command-line overrides.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

}  // namespace mom
