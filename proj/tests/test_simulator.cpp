#include <doctest.h>

#include <cmath>
#include <limits>

#include "mom/error.hpp"
#include "mom/simulator.hpp"

using namespace mom;

namespace {

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

double path_distance(const Vec2& p, const std::vector<Vec2>& path) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) best = std::min(best, segment_distance(p, path[i], path[i + 1]));
  return best;
}

}  // namespace

TEST_CASE("pattern names round trip") {
  for (auto k : {PatternKind::RandomWalk, PatternKind::CrossWalk, PatternKind::SquareWalk}) {
    CHECK(parse_pattern(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_pattern("zigzag"), Error);
}

TEST_CASE("default cameras see the whole walkable area") {
  const ArenaSpec arena = default_arena();
  REQUIRE(arena.cameras.size() == 2);
  for (const auto& cam : arena.cameras) {
    cam.validate();
    CHECK(std::abs(cam.center().z() - 2.4) < 1e-12);
    for (double x = arena.margin; x <= arena.width - arena.margin + 1e-9; x += 0.5)
      for (double y = arena.margin; y <= arena.depth - arena.margin + 1e-9; y += 0.5)
        for (double h : {0.0, 1.0, 2.0}) CHECK(cam.in_image(project(cam, WorldPoint(x, y, h)).pixel));
  }
  CHECK((arena.cameras[0].center().head<2>() - Vec2(0, 0)).norm() < 1e-12);
  CHECK((arena.cameras[1].center().head<2>() - Vec2(10, 10)).norm() < 1e-12);
}

TEST_CASE("random walks stay inside the walkable area and are deterministic") {
  const ArenaSpec arena = default_arena();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto track = generate_trajectory({PatternKind::RandomWalk, 30.0, 15.0}, arena, seed);
    CHECK(track.size() == 450);
    for (const auto& s : track) {
      CHECK(s.ground.x() >= arena.margin);
      CHECK(s.ground.x() <= arena.width - arena.margin);
      CHECK(s.ground.y() >= arena.margin);
      CHECK(s.ground.y() <= arena.depth - arena.margin);
      CHECK(s.ground.z() == 0.0);
    }
    const auto again = generate_trajectory({PatternKind::RandomWalk, 30.0, 15.0}, arena, seed);
    for (std::size_t i = 0; i < track.size(); ++i) CHECK(track[i].ground == again[i].ground);
  }
}

TEST_CASE("scripted walks stay on their paths") {
  const ArenaSpec arena = default_arena();
  for (auto kind : {PatternKind::SquareWalk, PatternKind::CrossWalk}) {
    const auto path = scripted_waypoints(kind, arena);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto track = generate_trajectory({kind, 60.0, 15.0}, arena, seed);
      CHECK(track.size() > 100);
      for (const auto& s : track) CHECK(path_distance(s.ground.head<2>(), path) < 1e-9);
    }
  }
  const auto square = scripted_waypoints(PatternKind::SquareWalk, arena);
  for (const auto& c : square) {
    CHECK(std::abs(std::abs(c.x() - 5.0) - 3.0) < 1e-12);
    CHECK(std::abs(std::abs(c.y() - 5.0) - 3.0) < 1e-12);
  }
}

TEST_CASE("articulated joints average to the center") {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int t = 0; t < 500; ++t) {
    const WorldPoint c(u(rng), u(rng), 1.0 + 0.1 * u(rng));
    const auto joints = articulate(c, u(rng), u(rng), 1 + t % 9);
    Vec3 mean = Vec3::Zero();
    for (const auto& j : joints) mean += j;
    CHECK((mean / 12.0 - c).norm() < 1e-12);
  }
}

TEST_CASE("opposite gait phases mirror the limbs") {
  const WorldPoint c(5, 5, 1);
  const double heading = 0.7;
  const Vec3 fwd(std::cos(heading), std::sin(heading), 0);
  const Vec3 left(-std::sin(heading), std::cos(heading), 0);
  const auto a = articulate(c, heading, 0.0, 3);
  const auto b = articulate(c, heading, std::numbers::pi, 3);
  for (int pair = 0; pair < 6; ++pair) {
    const Vec3 l0 = a[2 * pair] - c, r0 = a[2 * pair + 1] - c;
    const Vec3 lpi = b[2 * pair] - c;
    CHECK(std::abs(lpi.dot(fwd) - r0.dot(fwd)) < 1e-12);
    CHECK(std::abs(lpi.dot(left) + r0.dot(left)) < 1e-12);
    CHECK(std::abs(lpi.z() - l0.z()) < 1e-12);
  }
}

TEST_CASE("subjects differ in limb length but share the topology") {
  auto bone_lengths = [](int id) {
    const auto j = articulate(WorldPoint(5, 5, 1), 0.0, 0.0, id);
    std::vector<double> out;
    for (auto [a, b] : kBones) out.push_back((j[a] - j[b]).norm());
    return out;
  };
  const auto one = bone_lengths(1), two = bone_lengths(2);
  REQUIRE(one.size() == two.size());
  bool differs = false;
  for (std::size_t i = 0; i < one.size(); ++i) differs |= std::abs(one[i] - two[i]) > 1e-6;
  CHECK(differs);
  CHECK(subject_stature(1) != subject_stature(2));
  for (int id = 0; id < 50; ++id) {
    CHECK(subject_stature(id) >= 1.55);
    CHECK(subject_stature(id) <= 1.90);
  }
}

TEST_CASE("render_frame noise model") {
  const ArenaSpec arena = default_arena();
  const auto joints = articulate(WorldPoint(5, 4, subject_center_height(1)), 0.2, 0.4, 1);

  const SkeletonFrame clean = render_frame(joints, arena.cameras, NoiseSpec{}, 9);
  for (std::size_t c = 0; c < arena.cameras.size(); ++c)
    for (int j = 0; j < kJointCount; ++j) {
      CHECK(clean.joints_pixel[c][j] == project(arena.cameras[c], joints[j]).pixel);
      CHECK(clean.joints_pixel[c][j] == clean.joints_pixel_clean[c][j]);
    }

  NoiseSpec jitter;
  jitter.camera_offset_max = 10.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const SkeletonFrame f = render_frame(joints, arena.cameras, jitter, s);
    for (std::size_t c = 0; c < arena.cameras.size(); ++c) {
      const Vec2 shift = f.joints_pixel[c][0] - f.joints_pixel_clean[c][0];
      CHECK(shift.cwiseAbs().maxCoeff() <= 10.0);
      for (int j = 1; j < kJointCount; ++j) {
        CHECK((f.joints_pixel[c][j] - f.joints_pixel_clean[c][j] - shift).norm() < 1e-9);
      }
    }
  }

  NoiseSpec noise;
  noise.joint_noise_std = 5.0;
  std::array<double, kJointCount> sq{};
  const int frames = 10000;
  for (int s = 0; s < frames; ++s) {
    const SkeletonFrame f = render_frame(joints, {arena.cameras[0]}, noise, static_cast<std::uint64_t>(s));
    for (int j = 0; j < kJointCount; ++j) sq[j] += (f.joints_pixel[0][j] - f.joints_pixel_clean[0][j]).x() *
                                                   (f.joints_pixel[0][j] - f.joints_pixel_clean[0][j]).x();
  }
  for (double v : sq) CHECK(std::abs(std::sqrt(v / frames) - 5.0) < 0.25);
}

TEST_CASE("observation points lie on bones and average to the segment centroid") {
  const ArenaSpec arena = default_arena();
  const auto joints = articulate(WorldPoint(3, 6, subject_center_height(2)), 1.0, 0.5, 2);
  const SkeletonFrame f = render_frame(joints, arena.cameras, NoiseSpec{}, 1);
  const auto pts = sample_observation_points(f, 0, 30, 5);
  CHECK(pts.size() == 30);
  for (const auto& p : pts) {
    double best = std::numeric_limits<double>::infinity();
    for (auto [a, b] : kBones) best = std::min(best, segment_distance(p, f.joints_pixel[0][a], f.joints_pixel[0][b]));
    CHECK(best < 1e-9);
  }
  const auto many = sample_observation_points(f, 1, 100000, 6);
  Vec2 mean = Vec2::Zero();
  for (const auto& p : many) mean += p;
  mean /= static_cast<double>(many.size());
  // Independent centroid: midpoint of each bone weighted by its length.
  Vec2 num = Vec2::Zero();
  double den = 0.0;
  for (auto [a, b] : kBones) {
    const double len = (f.joints_pixel[1][a] - f.joints_pixel[1][b]).norm();
    num += len * (f.joints_pixel[1][a] + f.joints_pixel[1][b]) / 2.0;
    den += len;
  }
  CHECK((mean - num / den).norm() < 0.5);

  Skeleton2D collapsed;
  collapsed.fill(PixelPoint(100, 200));
  Rng rng(2);
  for (const auto& p : sample_observation_points(collapsed, 40, rng)) CHECK(p == PixelPoint(100, 200));
}
