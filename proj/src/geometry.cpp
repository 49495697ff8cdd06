#include "mom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mom/error.hpp"

namespace mom {

namespace {

constexpr double kBehindCameraEps = 1e-12;
constexpr double kRankGapRel = 1e-12;
constexpr double kBaselineEps = 1e-9;
constexpr double kInfinityEps = 1e-12;

// Similarity that maps the points to zero centroid and the given RMS distance from it.
template <int D>
Eigen::Matrix<double, D + 1, D + 1> normalizing_transform(const std::vector<Eigen::Matrix<double, D, 1>>& pts,
                                                          double target_rms) {
  Eigen::Matrix<double, D, 1> centroid = Eigen::Matrix<double, D, 1>::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double sq = 0.0;
  for (const auto& p : pts) sq += (p - centroid).squaredNorm();
  const double rms = std::sqrt(sq / static_cast<double>(pts.size()));
  const double scale = rms > 0.0 ? target_rms / rms : 1.0;
  Eigen::Matrix<double, D + 1, D + 1> T = Eigen::Matrix<double, D + 1, D + 1>::Identity();
  T.template topLeftCorner<D, D>() *= scale;
  T.template topRightCorner<D, 1>() = -scale * centroid;
  return T;
}

void normalize_sign_and_scale(Mat34& P) {
  P /= P.norm();
  Eigen::Index r = 0, c = 0;
  P.cwiseAbs().maxCoeff(&r, &c);
  if (P(r, c) < 0.0) P = -P;
}

}  // namespace

ProjectionMatrix CameraModel::projection() const {
  Mat34 extrinsic;
  extrinsic.leftCols<3>() = rotation;
  extrinsic.col(3) = translation;
  return ProjectionMatrix{intrinsics * extrinsic};
}

Vec3 CameraModel::center() const { return -rotation.transpose() * translation; }

bool CameraModel::in_image(const PixelPoint& p) const {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() < image_width && p.y() < image_height;
}

void CameraModel::validate() const {
  const double orth = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (orth > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "rotation is not orthonormal with det +1");
  }
  if (intrinsics(1, 0) != 0.0 || intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0) {
    throw Error(ErrorKind::InvalidArgument, "intrinsics are not upper-triangular");
  }
  if (intrinsics(0, 0) <= 0.0 || intrinsics(1, 1) <= 0.0 || intrinsics(2, 2) <= 0.0) {
    throw Error(ErrorKind::InvalidArgument, "intrinsics diagonal must be positive");
  }
}

Projection project(const ProjectionMatrix& P, const Vec4& hom) {
  const Vec3 x = P.entries * hom;
  // Sign of the homogeneous weight carries through; a negative w flips the ray.
  const double s = x.z() / hom.w();
  if (!(s > kBehindCameraEps)) throw Error(ErrorKind::BehindCamera, "point is behind the camera");
  return Projection{PixelPoint(x.x() / x.z(), x.y() / x.z()), s};
}

Projection project(const ProjectionMatrix& P, const WorldPoint& point) {
  if (!point.allFinite()) throw Error(ErrorKind::InvalidArgument, "non-finite world point");
  return project(P, Vec4(point.x(), point.y(), point.z(), 1.0));
}

Projection project(const CameraModel& camera, const WorldPoint& point) {
  return project(camera.projection(), point);
}

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& symmetric, double tolerance) {
  const Eigen::Index n = symmetric.rows();
  Eigen::MatrixXd a = symmetric;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = a.norm();

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(2.0 * off) <= tolerance * scale || scale == 0.0) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });

  SymmetricEigen out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

Eigen::VectorXd solve_homogeneous(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.cols();
  if (n < 2 || A.rows() < n - 1) {
    throw Error(ErrorKind::InvalidArgument, "system needs at least n-1 rows and n >= 2");
  }
  const Eigen::MatrixXd gram = A.transpose() * A;
  const SymmetricEigen eig = jacobi_eigen(gram);

  // Eigenvalues of the Gram matrix are squared singular values; compare them in that domain
  // so rounding noise near zero does not get amplified by a square root.
  const double largest = std::max(eig.values(n - 1), 0.0);
  const double gap = eig.values(1) - eig.values(0);
  if (largest == 0.0 || gap < kRankGapRel * largest) {
    throw Error(ErrorKind::RankDeficient, "null space is not one-dimensional");
  }

  Eigen::VectorXd x = eig.vectors.col(0).normalized();
  Eigen::Index imax = 0;
  x.cwiseAbs().maxCoeff(&imax);
  if (x(imax) < 0.0) x = -x;
  return x;
}

ProjectionMatrix dlt_pnp(std::span<const Correspondence> correspondences) {
  const std::size_t n = correspondences.size();
  if (n < 6) {
    throw Error(ErrorKind::InsufficientCorrespondences,
                "need at least 6 correspondences, got " + std::to_string(n));
  }

  std::vector<Vec2> pixels;
  std::vector<Vec3> worlds;
  pixels.reserve(n);
  worlds.reserve(n);
  for (const auto& c : correspondences) {
    pixels.push_back(c.pixel);
    worlds.push_back(c.world);
  }
  const Eigen::Matrix3d Tp = normalizing_transform<2>(pixels, std::sqrt(2.0));
  const Eigen::Matrix4d Tw = normalizing_transform<3>(worlds, std::sqrt(3.0));

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * n), 12);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec4 X = Tw * worlds[i].homogeneous();
    const Vec3 x = Tp * pixels[i].homogeneous();
    const double u = x.x() / x.z(), v = x.y() / x.z();
    const auto r = static_cast<Eigen::Index>(2 * i);
    A.block<1, 4>(r, 0) = X.transpose();
    A.block<1, 4>(r, 8) = -u * X.transpose();
    A.block<1, 4>(r + 1, 4) = X.transpose();
    A.block<1, 4>(r + 1, 8) = -v * X.transpose();
  }

  Eigen::VectorXd p;
  try {
    p = solve_homogeneous(A);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::RankDeficient) {
      throw Error(ErrorKind::DegenerateConfiguration, "correspondences do not constrain P (coplanar?)");
    }
    throw;
  }

  Mat34 Pn;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) Pn(r, c) = p(4 * r + c);
  Mat34 P = Tp.inverse() * Pn * Tw;
  normalize_sign_and_scale(P);
  return ProjectionMatrix{P};
}

double aligned_frobenius_error(const Mat34& estimate, const Mat34& reference) {
  const double denom = estimate.squaredNorm();
  const double c = denom > 0.0 ? estimate.cwiseProduct(reference).sum() / denom : 0.0;
  return (c * estimate - reference).norm() / reference.norm();
}

bool camera_center(const ProjectionMatrix& P, Vec3& center) {
  const Mat34& M = P.entries;
  auto minor_without = [&](int skip) {
    Mat3 sub;
    int k = 0;
    for (int c = 0; c < 4; ++c) {
      if (c == skip) continue;
      sub.col(k++) = M.col(c);
    }
    return sub.determinant();
  };
  const Vec4 C(minor_without(0), -minor_without(1), minor_without(2), -minor_without(3));
  if (std::abs(C.w()) <= kInfinityEps * C.norm()) return false;
  center = C.head<3>() / C.w();
  return true;
}

WorldPoint triangulate(std::span<const Observation> observations) {
  if (observations.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "triangulation needs at least two observations");
  }

  std::vector<Vec3> centers;
  bool any_infinite = false;
  for (const auto& obs : observations) {
    Vec3 c;
    if (camera_center(obs.camera, c)) centers.push_back(c);
    else any_infinite = true;
  }
  bool distinct = any_infinite && !centers.empty();
  for (std::size_t i = 1; i < centers.size() && !distinct; ++i) {
    distinct = (centers[i] - centers[0]).norm() > kBaselineEps;
  }
  if (!distinct) throw Error(ErrorKind::DegenerateBaseline, "camera centers coincide");

  Eigen::MatrixXd A(static_cast<Eigen::Index>(2 * observations.size()), 4);
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const Mat34 P = observations[i].camera.entries / observations[i].camera.entries.norm();
    const double u = observations[i].pixel.x(), v = observations[i].pixel.y();
    const auto r = static_cast<Eigen::Index>(2 * i);
    // Rows 1 and 2 of [p_c]_x P with p_c = (u, v, 1).
    A.row(r) = v * P.row(2) - P.row(1);
    A.row(r + 1) = P.row(0) - u * P.row(2);
    A.row(r).normalize();
    A.row(r + 1).normalize();
  }

  const Eigen::VectorXd X = solve_homogeneous(A);
  if (std::abs(X(3)) < kInfinityEps) throw Error(ErrorKind::SolutionAtInfinity, "triangulated point at infinity");
  return X.head<3>() / X(3);
}

WorldPoint baseline_localize(std::span<const ProjectionMatrix> cameras, const JointPixels& joints) {
  if (cameras.size() != joints.size() || joints.empty()) {
    throw Error(ErrorKind::ShapeMismatch, "one joint set per camera required");
  }
  const std::size_t joint_count = joints.front().size();
  for (const auto& j : joints) {
    if (j.size() != joint_count) throw Error(ErrorKind::ShapeMismatch, "joint sets differ in size");
  }

  Vec3 sum = Vec3::Zero();
  std::size_t ok = 0;
  std::vector<Observation> obs(cameras.size());
  for (std::size_t j = 0; j < joint_count; ++j) {
    for (std::size_t c = 0; c < cameras.size(); ++c) obs[c] = Observation{cameras[c], joints[c][j]};
    try {
      sum += triangulate(obs);
      ++ok;
    } catch (const Error&) {
      // counted below
    }
  }
  const std::size_t failed = joint_count - ok;
  if (ok == 0 || failed * 2 > joint_count) {
    throw Error(ErrorKind::FrameFailed, std::to_string(failed) + " of " + std::to_string(joint_count) +
                                            " joints failed to triangulate");
  }
  return sum / static_cast<double>(ok);
}

}  // namespace mom
