#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mom/geometry.hpp"
#include "mom/rng.hpp"

namespace testing {

// Camera at distance [8, 12] from the origin looking roughly at it, random roll and intrinsics.
inline mom::CameraModel random_camera(mom::Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> dist(8.0, 12.0);
  std::uniform_real_distribution<double> focal(400.0, 900.0);
  mom::Vec3 dir;
  do dir = mom::Vec3(u(rng), u(rng), u(rng));
  while (dir.norm() < 0.2 || dir.norm() > 1.0);
  const mom::Vec3 center = dir.normalized() * dist(rng);
  const mom::Vec3 target(0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng));
  const mom::Vec3 z = (target - center).normalized();
  mom::Vec3 up;
  do up = mom::Vec3(u(rng), u(rng), u(rng));
  while (up.cross(z).norm() < 0.3);
  const mom::Vec3 x = z.cross(up).normalized();
  const mom::Vec3 y = z.cross(x);
  mom::CameraModel cam;
  cam.rotation.row(0) = x.transpose();
  cam.rotation.row(1) = y.transpose();
  cam.rotation.row(2) = z.transpose();
  cam.translation = -cam.rotation * center;
  const double f = focal(rng);
  cam.intrinsics << f, 0.0, 320.0 + 20.0 * u(rng), 0.0, f * (1.0 + 0.1 * u(rng)), 240.0 + 20.0 * u(rng), 0.0, 0.0,
      1.0;
  return cam;
}

inline mom::Vec3 random_point(mom::Rng& rng, double half = 2.0) {
  std::uniform_real_distribution<double> u(-half, half);
  return {u(rng), u(rng), u(rng)};
}

// Dense 3x4 by 4x1 product written out by hand.
inline mom::Vec2 oracle_project(const mom::CameraModel& cam, const mom::Vec3& p, double* scale = nullptr) {
  double P[3][4];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double ext = c < 3 ? cam.rotation(k, c) : cam.translation(k);
        acc += cam.intrinsics(r, k) * ext;
      }
      P[r][c] = acc;
    }
  }
  const double hom[4] = {p.x(), p.y(), p.z(), 1.0};
  double out[3] = {0.0, 0.0, 0.0};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) out[r] += P[r][c] * hom[c];
  if (scale) *scale = out[2];
  return {out[0] / out[2], out[1] / out[2]};
}

}  // namespace testing
