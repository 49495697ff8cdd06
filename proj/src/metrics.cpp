#include "mom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mom/error.hpp"

namespace mom {

namespace {

void require_frames(std::span<const TrajectoryPoint> traj) {
  if (traj.empty()) throw Error(ErrorKind::EmptyTrajectory, "trajectory has no frames");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> frame_errors(std::span<const TrajectoryPoint> traj) {
  std::vector<double> e;
  e.reserve(traj.size());
  for (const auto& p : traj) e.push_back((p.predicted - p.truth).norm());
  return e;
}

ErrorStats positioning_errors(std::span<const TrajectoryPoint> traj, StdMode mode) {
  require_frames(traj);
  std::vector<double> e = frame_errors(traj);
  const auto n = static_cast<double>(e.size());
  ErrorStats s;
  for (double v : e) s.mean += v;
  s.mean /= n;
  double sq = 0.0;
  for (double v : e) sq += (v - s.mean) * (v - s.mean);
  const double denom = mode == StdMode::Sample && e.size() > 1 ? n - 1.0 : n;
  s.std = std::sqrt(sq / denom);
  const auto mid = e.begin() + static_cast<std::ptrdiff_t>((e.size() - 1) / 2);
  std::nth_element(e.begin(), mid, e.end());
  s.median = *mid;
  return s;
}

double accuracy_at(std::span<const TrajectoryPoint> traj, double threshold) {
  require_frames(traj);
  if (!(threshold > 0.0)) throw Error(ErrorKind::InvalidArgument, "threshold must be positive");
  std::size_t hits = 0;
  for (const auto& p : traj) hits += (p.predicted - p.truth).norm() < threshold ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(traj.size());
}

double absolute_trajectory_error(std::span<const TrajectoryPoint> traj) {
  require_frames(traj);
  double sq = 0.0;
  for (const auto& p : traj) sq += (p.predicted - p.truth).squaredNorm();
  return std::sqrt(sq / static_cast<double>(traj.size()));
}

double relative_pose_error(std::span<const TrajectoryPoint> traj, int delta) {
  if (delta < 1) throw Error(ErrorKind::InvalidArgument, "delta must be at least 1");
  const auto d = static_cast<std::size_t>(delta);
  if (traj.size() < d + 1) throw Error(ErrorKind::TooShort, "trajectory shorter than delta + 1");
  double sq = 0.0;
  for (std::size_t t = 0; t + d < traj.size(); ++t) {
    const Vec3 dp = traj[t + d].predicted - traj[t].predicted;
    const Vec3 dg = traj[t + d].truth - traj[t].truth;
    sq += (dp - dg).squaredNorm();
  }
  return std::sqrt(sq / static_cast<double>(traj.size() - d));
}

EvaluationReport evaluate(std::span<const Trajectory> segments, const ReportOptions& options) {
  Trajectory pooled;
  double rpe_sq = 0.0;
  std::size_t rpe_count = 0;
  const auto d = static_cast<std::size_t>(options.rpe_delta);
  for (const auto& seg : segments) {
    pooled.insert(pooled.end(), seg.begin(), seg.end());
    if (seg.size() < d + 1) continue;
    const double r = relative_pose_error(seg, options.rpe_delta);
    rpe_sq += r * r * static_cast<double>(seg.size() - d);
    rpe_count += seg.size() - d;
  }
  EvaluationReport rep;
  rep.frames = pooled.size();
  rep.errors = positioning_errors(pooled, options.std_mode);
  rep.ate = absolute_trajectory_error(pooled);
  rep.rpe = rpe_count > 0 ? std::sqrt(rpe_sq / static_cast<double>(rpe_count)) : 0.0;
  for (std::size_t i = 0; i < kAccuracyThresholds.size(); ++i) rep.accuracy[i] = accuracy_at(pooled, kAccuracyThresholds[i]);
  return rep;
}

std::string report_csv_header() { return "mean,median,std,ATE,RPE,acc@0.2,acc@0.3,acc@0.4,acc@0.5"; }

std::string report_csv_row(const EvaluationReport& r) {
  std::string s = fmt(r.errors.mean) + "," + fmt(r.errors.median) + "," + fmt(r.errors.std) + "," + fmt(r.ate) + "," +
                  fmt(r.rpe);
  for (double a : r.accuracy) s += "," + fmt(a);
  return s;
}

}  // namespace mom
