#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mom/geometry.hpp"
#include "mom/rng.hpp"

namespace mom {

inline constexpr int kJointCount = 12;
inline constexpr int kBoneCount = 11;

// Joint order: L/R shoulder, elbow, wrist, hip, knee, ankle (left first in each pair).
enum Joint : int {
  kLeftShoulder, kRightShoulder, kLeftElbow, kRightElbow, kLeftWrist, kRightWrist,
  kLeftHip, kRightHip, kLeftKnee, kRightKnee, kLeftAnkle, kRightAnkle,
};

// Tree over the 12 joints: shoulder bar, arms, shoulder-hip torso sides, legs.
inline constexpr std::array<std::pair<int, int>, kBoneCount> kBones{{
    {kLeftShoulder, kRightShoulder},
    {kLeftShoulder, kLeftElbow},
    {kLeftElbow, kLeftWrist},
    {kRightShoulder, kRightElbow},
    {kRightElbow, kRightWrist},
    {kLeftShoulder, kLeftHip},
    {kRightShoulder, kRightHip},
    {kLeftHip, kLeftKnee},
    {kLeftKnee, kLeftAnkle},
    {kRightHip, kRightKnee},
    {kRightKnee, kRightAnkle},
}};

using Skeleton3D = std::array<WorldPoint, kJointCount>;
using Skeleton2D = std::array<PixelPoint, kJointCount>;

enum class PatternKind { RandomWalk, CrossWalk, SquareWalk };

std::string_view to_string(PatternKind kind);
PatternKind parse_pattern(std::string_view name);

struct WalkPattern {
  PatternKind kind = PatternKind::RandomWalk;
  double duration = 60.0;  // seconds; scripted paths derive their own duration
  double step_rate = 15.0;  // samples per second
};

struct ArenaSpec {
  double width = 10.0;
  double depth = 10.0;
  double margin = 1.5;       // walkable region is the arena shrunk by this on every side
  double square_side = 6.0;  // square path centered in the arena
  std::vector<CameraModel> cameras;
};

struct CameraRig {
  int count = 2;
  double height = 2.4;
  double pitch_deg = 15.0;
  double fill = 0.8;  // fraction of the image width covered by the arena
  int image_width = 640;
  int image_height = 480;
};

// Cameras at arena corners (opposite corners first), looking at the arena center.
std::vector<CameraModel> corner_cameras(double width, double depth, const CameraRig& rig);
ArenaSpec default_arena(const CameraRig& rig = {});

struct TrackSample {
  double time = 0.0;
  WorldPoint ground;  // gamma == 0
  double heading = 0.0;  // radians, walking direction in the ground plane
  double phase = 0.0;    // gait phase, radians
};

std::vector<TrackSample> generate_trajectory(const WalkPattern& pattern, const ArenaSpec& arena,
                                             std::uint64_t seed);

// Waypoints of the scripted paths, one loop; the walker goes around twice.
std::vector<Vec2> scripted_waypoints(PatternKind kind, const ArenaSpec& arena);

double subject_stature(int subject_id);
// Height of the joint centroid above ground for the subject's stature.
double subject_center_height(int subject_id);

Skeleton3D articulate(const WorldPoint& center, double heading, double phase, int subject_id);

enum class OffsetDistribution { Uniform, Corner };

struct NoiseSpec {
  double camera_offset_max = 0.0;  // pixels
  double joint_noise_std = 0.0;    // pixels
  std::uint64_t seed = 0;
  OffsetDistribution offset_distribution = OffsetDistribution::Uniform;
};

struct SkeletonFrame {
  std::int64_t frame_id = 0;
  double time = 0.0;
  int subject_id = 0;
  PatternKind pattern = PatternKind::RandomWalk;
  Skeleton3D joints_world{};
  WorldPoint center_world = WorldPoint::Zero();
  std::vector<Skeleton2D> joints_pixel;        // per camera, after perturbation
  std::vector<Skeleton2D> joints_pixel_clean;  // per camera, exact projections
  std::vector<std::vector<PixelPoint>> presampled;  // optional fixed observation points per camera
};

// Projects the joints and applies the per-camera shared offset and per-joint Gaussian noise.
// Unit draws are made independently of the amplitudes, so two specs differing only in
// amplitude see the same underlying randomness.
SkeletonFrame render_frame(const Skeleton3D& joints_world, const std::vector<CameraModel>& cameras,
                           const NoiseSpec& noise, std::uint64_t frame_seed);

std::vector<PixelPoint> sample_observation_points(const Skeleton2D& skeleton, int count, Rng& rng);
std::vector<PixelPoint> sample_observation_points(const SkeletonFrame& frame, int camera, int count,
                                                  std::uint64_t seed);

// Length-weighted centroid of the bone segments; the expectation of a sampled point.
PixelPoint segment_centroid(const Skeleton2D& skeleton);

}  // namespace mom
