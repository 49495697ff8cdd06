#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mom/geometry.hpp"

namespace mom {

struct TrajectoryPoint {
  std::int64_t frame_id = 0;
  WorldPoint predicted = WorldPoint::Zero();
  WorldPoint truth = WorldPoint::Zero();
};

using Trajectory = std::vector<TrajectoryPoint>;

enum class StdMode { Population, Sample };

struct ErrorStats {
  double mean = 0.0;
  double median = 0.0;  // lower-middle element for even counts
  double std = 0.0;
};

std::vector<double> frame_errors(std::span<const TrajectoryPoint> traj);

ErrorStats positioning_errors(std::span<const TrajectoryPoint> traj, StdMode mode = StdMode::Population);

// Percentage of frames whose error is strictly below the threshold.
double accuracy_at(std::span<const TrajectoryPoint> traj, double threshold);

// RMS of per-frame errors, no alignment.
double absolute_trajectory_error(std::span<const TrajectoryPoint> traj);

// RMS over t of |(p_hat[t+d] - p_hat[t]) - (p[t+d] - p[t])|, translation only.
double relative_pose_error(std::span<const TrajectoryPoint> traj, int delta = 1);

inline constexpr std::array<double, 4> kAccuracyThresholds{0.2, 0.3, 0.4, 0.5};

struct EvaluationReport {
  std::size_t frames = 0;
  ErrorStats errors;
  double ate = 0.0;
  double rpe = 0.0;
  std::array<double, 4> accuracy{};  // at kAccuracyThresholds
};

struct ReportOptions {
  int rpe_delta = 1;
  StdMode std_mode = StdMode::Population;
};

// Pools several trajectories (for example one per subject). Frame-to-frame differences for RPE
// are taken within each trajectory only; segments shorter than delta+1 contribute none.
EvaluationReport evaluate(std::span<const Trajectory> segments, const ReportOptions& options = {});

// Column order: mean,median,std,ATE,RPE,acc@0.2,acc@0.3,acc@0.4,acc@0.5
std::string report_csv_header();
std::string report_csv_row(const EvaluationReport& report);

}  // namespace mom
