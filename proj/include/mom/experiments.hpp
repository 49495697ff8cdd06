#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mom/config.hpp"
#include "mom/dataset_io.hpp"
#include "mom/metrics.hpp"
#include "mom/network.hpp"

namespace mom {

struct PatternReport {
  PatternKind pattern = PatternKind::RandomWalk;
  EvaluationReport report;
};

// One trajectory per (subject, pattern) among the test subjects, ordered by frame id.
struct TestSegment {
  int subject_id = 0;
  PatternKind pattern = PatternKind::RandomWalk;
  std::vector<const SkeletonFrame*> frames;
};

std::vector<TestSegment> test_segments(const Dataset& dataset, const ExperimentConfig& config);

// Pools segments by pattern, in the order of config.test_patterns.
std::vector<PatternReport> report_by_pattern(const std::vector<TestSegment>& segments,
                                             const std::vector<Trajectory>& trajectories,
                                             const ExperimentConfig& config);

enum class BaselineMode { KnownP, EstimatedP };
BaselineMode parse_baseline_mode(std::string_view name);

// DLT per camera from calibration_frames evenly spaced training frames (12 joints each).
std::vector<ProjectionMatrix> calibrate_cameras(const Dataset& dataset, const ExperimentConfig& config);

struct BaselineResult {
  std::vector<PatternReport> reports;
  std::vector<Trajectory> trajectories;  // parallel to test_segments
  std::size_t failed_frames = 0;
};

BaselineResult run_baseline(const Dataset& dataset, const ExperimentConfig& config, BaselineMode mode);

TrainResult run_train(const Dataset& dataset, const ExperimentConfig& config);
CheckpointMeta checkpoint_meta(const ExperimentConfig& config, const TrainResult& result);

struct EvalResult {
  std::vector<PatternReport> reports;
  std::vector<Trajectory> trajectories;
};

// Throws CheckpointMismatch when the network does not fit the dataset.
EvalResult run_eval(const Dataset& dataset, const ExperimentConfig& config, const NetworkParameters& params,
                    const CheckpointMeta& meta);

enum class SweepAxis { Jitter, Noise, Subjects };
SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);

// Config for one sweep level derived from the template.
ExperimentConfig sweep_level_config(const ExperimentConfig& base, SweepAxis axis, double level);

struct SweepRow {
  double level = 0.0;
  PatternKind pattern = PatternKind::RandomWalk;
  std::string metric;
  double value = 0.0;
};

std::vector<SweepRow> sweep_rows(double level, std::span<const PatternReport> reports);
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, SweepAxis axis, std::span<const double> levels);

void write_reports(std::ostream& out, std::span<const PatternReport> reports);
void write_trajectories(std::ostream& out, const std::vector<TestSegment>& segments,
                        const std::vector<Trajectory>& trajectories);
void write_loss_history(std::ostream& out, std::span<const EpochRecord> history);
void write_sweep(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace mom
