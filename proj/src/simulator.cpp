#include "mom/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mom/error.hpp"

namespace mom {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kStrideLength = 1.4;  // meters per full gait cycle
constexpr double kSwingAmplitude = 0.18;

// (lateral, height) as fractions of stature; lateral is positive to the left.
constexpr std::array<std::array<double, 2>, 6> kBodyProportions{{
    {0.129, 0.818},  // shoulder
    {0.150, 0.630},  // elbow
    {0.160, 0.485},  // wrist
    {0.095, 0.530},  // hip
    {0.090, 0.285},  // knee
    {0.085, 0.039},  // ankle
}};

// Forward swing per joint pair as a multiple of the amplitude; arms counter-swing the legs.
constexpr std::array<double, 6> kSwingWeight{0.0, -0.5, -1.0, 0.0, 0.5, 1.0};

double unit_interval(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

Vec2 point_along(const std::vector<Vec2>& waypoints, const std::vector<double>& cumulative, double s,
                 std::size_t& segment) {
  while (segment + 1 < cumulative.size() - 1 && s >= cumulative[segment + 1]) ++segment;
  const Vec2& a = waypoints[segment];
  const Vec2& b = waypoints[segment + 1];
  const double len = cumulative[segment + 1] - cumulative[segment];
  const double t = len > 0.0 ? std::clamp((s - cumulative[segment]) / len, 0.0, 1.0) : 0.0;
  // Written per component so axis-aligned legs keep their constant coordinate exactly.
  return Vec2(a.x() + (b.x() - a.x()) * t, a.y() + (b.y() - a.y()) * t);
}

}  // namespace

std::string_view to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::RandomWalk: return "random_walk";
    case PatternKind::CrossWalk: return "cross_walk";
    case PatternKind::SquareWalk: return "square_walk";
  }
  return "unknown";
}

PatternKind parse_pattern(std::string_view name) {
  if (name == "random_walk") return PatternKind::RandomWalk;
  if (name == "cross_walk") return PatternKind::CrossWalk;
  if (name == "square_walk") return PatternKind::SquareWalk;
  throw Error(ErrorKind::ParseError, "unknown walk pattern '" + std::string(name) + "'");
}

std::vector<CameraModel> corner_cameras(double width, double depth, const CameraRig& rig) {
  if (rig.count < 2 || rig.count > 4) throw Error(ErrorKind::InvalidConfig, "camera count must be 2..4");
  const std::array<Vec2, 4> corners{Vec2(0, 0), Vec2(width, depth), Vec2(width, 0), Vec2(0, depth)};
  const Vec2 target(width / 2.0, depth / 2.0);
  const double pitch = rig.pitch_deg * std::numbers::pi / 180.0;

  std::vector<CameraModel> cameras;
  for (int i = 0; i < rig.count; ++i) {
    const Vec2 corner = corners[static_cast<std::size_t>(i)];
    const Vec3 center(corner.x(), corner.y(), rig.height);
    const Vec2 dir = (target - corner).normalized();
    const Vec3 forward(std::cos(pitch) * dir.x(), std::cos(pitch) * dir.y(), -std::sin(pitch));
    const Vec3 right = forward.cross(Vec3::UnitZ()).normalized();
    const Vec3 down = forward.cross(right);

    CameraModel cam;
    cam.rotation.row(0) = right;
    cam.rotation.row(1) = down;
    cam.rotation.row(2) = forward;
    cam.translation = -cam.rotation * center;
    cam.image_width = rig.image_width;
    cam.image_height = rig.image_height;

    // Horizontal field of view sized so the far arena corners span `fill` of the width.
    double widest = 0.0;
    for (const Vec2& c : corners) {
      if ((c - corner).norm() < 1e-6) continue;
      for (double h : {0.0, 2.0}) {
        const Vec3 pc = cam.rotation * Vec3(c.x(), c.y(), h) + cam.translation;
        if (pc.z() > 0.1) widest = std::max(widest, std::abs(pc.x() / pc.z()));
      }
    }
    const double focal = rig.fill * rig.image_width / 2.0 / widest;
    cam.intrinsics << focal, 0.0, rig.image_width / 2.0, 0.0, focal, rig.image_height / 2.0, 0.0, 0.0, 1.0;
    cam.validate();
    cameras.push_back(cam);
  }
  return cameras;
}

ArenaSpec default_arena(const CameraRig& rig) {
  ArenaSpec arena;
  arena.cameras = corner_cameras(arena.width, arena.depth, rig);
  return arena;
}

std::vector<Vec2> scripted_waypoints(PatternKind kind, const ArenaSpec& arena) {
  const double cx = arena.width / 2.0, cy = arena.depth / 2.0;
  const double m = arena.margin;
  if (kind == PatternKind::SquareWalk) {
    const double h = arena.square_side / 2.0;
    return {Vec2(cx - h, cy - h), Vec2(cx + h, cy - h), Vec2(cx + h, cy + h), Vec2(cx - h, cy + h),
            Vec2(cx - h, cy - h)};
  }
  if (kind == PatternKind::CrossWalk) {
    return {Vec2(m, cy),  Vec2(arena.width - m, cy), Vec2(cx, cy), Vec2(cx, arena.depth - m),
            Vec2(cx, m),  Vec2(cx, cy),              Vec2(m, cy)};
  }
  throw Error(ErrorKind::InvalidArgument, "random walk has no scripted path");
}

std::vector<TrackSample> generate_trajectory(const WalkPattern& pattern, const ArenaSpec& arena,
                                             std::uint64_t seed) {
  if (!(pattern.step_rate > 0.0) || !(pattern.duration > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "walk pattern needs positive duration and rate");
  }
  const double lo_x = arena.margin, hi_x = arena.width - arena.margin;
  const double lo_y = arena.margin, hi_y = arena.depth - arena.margin;
  if (!(lo_x < hi_x && lo_y < hi_y)) throw Error(ErrorKind::InvalidConfig, "arena margin leaves no room");
  if (arena.square_side > std::min(hi_x - lo_x, hi_y - lo_y)) {
    throw Error(ErrorKind::InvalidConfig, "square path does not fit inside the arena");
  }

  Rng rng(seed);
  const double dt = 1.0 / pattern.step_rate;
  std::vector<TrackSample> track;

  if (pattern.kind == PatternKind::RandomWalk) {
    std::uniform_real_distribution<double> ux(lo_x, hi_x), uy(lo_y, hi_y), uh(0.0, kTwoPi), uspeed(0.8, 1.4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto n = static_cast<std::size_t>(std::llround(pattern.duration * pattern.step_rate));
    Vec2 pos(ux(rng), uy(rng));
    double heading = uh(rng), speed = uspeed(rng), turn_rate = 0.0, distance = 0.0;
    track.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      track.push_back(TrackSample{static_cast<double>(i) * dt, WorldPoint(pos.x(), pos.y(), 0.0), heading,
                                  kTwoPi * distance / kStrideLength});
      turn_rate = std::clamp(0.9 * turn_rate + 0.4 * gauss(rng), -1.5, 1.5);
      speed = std::clamp(speed + 0.05 * gauss(rng), 0.8, 1.4);
      heading += turn_rate * dt;
      Vec2 next = pos + speed * dt * Vec2(std::cos(heading), std::sin(heading));
      if (next.x() < lo_x || next.x() > hi_x) heading = std::numbers::pi - heading;
      if (next.y() < lo_y || next.y() > hi_y) heading = -heading;
      next = pos + speed * dt * Vec2(std::cos(heading), std::sin(heading));
      next.x() = std::clamp(next.x(), lo_x, hi_x);
      next.y() = std::clamp(next.y(), lo_y, hi_y);
      distance += (next - pos).norm();
      pos = next;
    }
    return track;
  }

  const std::vector<Vec2> loop = scripted_waypoints(pattern.kind, arena);
  std::vector<Vec2> path = loop;
  path.insert(path.end(), loop.begin() + 1, loop.end());  // traversed twice
  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < path.size(); ++i) cumulative.push_back(cumulative.back() + (path[i] - path[i - 1]).norm());

  std::uniform_real_distribution<double> uspeed(0.9, 1.3);
  const double speed = uspeed(rng);
  const double length = cumulative.back();
  const auto n = static_cast<std::size_t>(std::floor(length / speed * pattern.step_rate)) + 1;
  std::size_t segment = 0;
  track.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double s = std::min(speed * t, length);
    const Vec2 p = point_along(path, cumulative, s, segment);
    const Vec2 d = path[segment + 1] - path[segment];
    track.push_back(TrackSample{t, WorldPoint(p.x(), p.y(), 0.0), std::atan2(d.y(), d.x()), kTwoPi * s / kStrideLength});
  }
  return track;
}

double subject_stature(int subject_id) {
  return 1.55 + 0.35 * unit_interval(mix64(static_cast<std::uint64_t>(subject_id) ^ 0x5eed5eedULL));
}

double subject_center_height(int subject_id) {
  double sum = 0.0;
  for (const auto& p : kBodyProportions) sum += p[1];
  return subject_stature(subject_id) * sum / static_cast<double>(kBodyProportions.size());
}

Skeleton3D articulate(const WorldPoint& center, double heading, double phase, int subject_id) {
  const double stature = subject_stature(subject_id);
  const Vec3 forward(std::cos(heading), std::sin(heading), 0.0);
  const Vec3 left(-std::sin(heading), std::cos(heading), 0.0);
  const double swing = kSwingAmplitude * std::cos(phase);

  Skeleton3D joints;
  Vec3 mean = Vec3::Zero();
  for (std::size_t pair = 0; pair < kBodyProportions.size(); ++pair) {
    const double lateral = kBodyProportions[pair][0] * stature;
    const double height = kBodyProportions[pair][1] * stature;
    const double ahead = kSwingWeight[pair] * swing;
    joints[2 * pair] = ahead * forward + lateral * left + height * Vec3::UnitZ();
    joints[2 * pair + 1] = -ahead * forward - lateral * left + height * Vec3::UnitZ();
    mean += joints[2 * pair] + joints[2 * pair + 1];
  }
  mean /= static_cast<double>(kJointCount);
  for (auto& j : joints) j = (j - mean) + center;
  // One more pass absorbs the rounding left by the first shift.
  Vec3 residual = Vec3::Zero();
  for (const auto& j : joints) residual += j;
  residual = residual / static_cast<double>(kJointCount) - center;
  for (auto& j : joints) j -= residual;
  return joints;
}

SkeletonFrame render_frame(const Skeleton3D& joints_world, const std::vector<CameraModel>& cameras,
                           const NoiseSpec& noise, std::uint64_t frame_seed) {
  if (noise.camera_offset_max < 0.0 || noise.joint_noise_std < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "noise amplitudes must be non-negative");
  }
  SkeletonFrame frame;
  frame.joints_world = joints_world;
  Vec3 center = Vec3::Zero();
  for (const auto& j : joints_world) center += j;
  frame.center_world = center / static_cast<double>(kJointCount);

  Rng rng(frame_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (const auto& cam : cameras) {
    const ProjectionMatrix P = cam.projection();
    Skeleton2D clean;
    for (int j = 0; j < kJointCount; ++j) clean[static_cast<std::size_t>(j)] = project(P, joints_world[static_cast<std::size_t>(j)]).pixel;

    Vec2 offset;
    if (noise.offset_distribution == OffsetDistribution::Uniform) {
      offset.x() = unit(rng);
      offset.y() = unit(rng);
    } else {
      offset.x() = coin(rng) ? 1.0 : -1.0;
      offset.y() = coin(rng) ? 1.0 : -1.0;
    }
    offset *= noise.camera_offset_max;

    Skeleton2D noisy;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      const double gx = gauss(rng), gy = gauss(rng);
      noisy[j] = clean[j] + offset + noise.joint_noise_std * Vec2(gx, gy);
    }
    frame.joints_pixel_clean.push_back(clean);
    frame.joints_pixel.push_back(noisy);
  }
  return frame;
}

std::vector<PixelPoint> sample_observation_points(const Skeleton2D& skeleton, int count, Rng& rng) {
  if (count < 1) throw Error(ErrorKind::InvalidArgument, "sample count must be positive");
  std::array<double, kBoneCount + 1> cumulative{};
  for (std::size_t b = 0; b < kBoneCount; ++b) {
    const auto [i, j] = kBones[b];
    cumulative[b + 1] = cumulative[b] + (skeleton[static_cast<std::size_t>(j)] - skeleton[static_cast<std::size_t>(i)]).norm();
  }
  const double total = cumulative[kBoneCount];

  std::vector<PixelPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  if (total == 0.0) {
    out.assign(static_cast<std::size_t>(count), skeleton[0]);
    return out;
  }
  std::uniform_real_distribution<double> along(0.0, total);
  for (int n = 0; n < count; ++n) {
    const double r = along(rng);
    std::size_t b = 0;
    while (b + 1 < kBoneCount && r >= cumulative[b + 1]) ++b;
    const double len = cumulative[b + 1] - cumulative[b];
    const double t = len > 0.0 ? std::clamp((r - cumulative[b]) / len, 0.0, 1.0) : 0.0;
    const auto [i, j] = kBones[b];
    const PixelPoint& a = skeleton[static_cast<std::size_t>(i)];
    const PixelPoint& c = skeleton[static_cast<std::size_t>(j)];
    out.push_back(a + t * (c - a));
  }
  return out;
}

std::vector<PixelPoint> sample_observation_points(const SkeletonFrame& frame, int camera, int count,
                                                  std::uint64_t seed) {
  if (camera < 0 || static_cast<std::size_t>(camera) >= frame.joints_pixel.size()) {
    throw Error(ErrorKind::InvalidArgument, "camera index out of range");
  }
  Rng rng(seed);
  return sample_observation_points(frame.joints_pixel[static_cast<std::size_t>(camera)], count, rng);
}

PixelPoint segment_centroid(const Skeleton2D& skeleton) {
  PixelPoint weighted = PixelPoint::Zero();
  double total = 0.0;
  for (const auto& [i, j] : kBones) {
    const PixelPoint& a = skeleton[static_cast<std::size_t>(i)];
    const PixelPoint& b = skeleton[static_cast<std::size_t>(j)];
    const double len = (b - a).norm();
    weighted += len * 0.5 * (a + b);
    total += len;
  }
  if (total == 0.0) return skeleton[0];
  return weighted / total;
}

}  // namespace mom
