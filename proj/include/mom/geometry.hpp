#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mom {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

// World coordinates in meters (alpha, beta, gamma); gamma is height.
using WorldPoint = Vec3;
// Pixel coordinates (u, v).
using PixelPoint = Vec2;

// Composite 3x4 projection, either K[R|T] of a known camera or a DLT estimate.
struct ProjectionMatrix {
  Mat34 entries = Mat34::Zero();
};

struct CameraModel {
  Mat3 intrinsics = Mat3::Identity();
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  int image_width = 640;
  int image_height = 480;

  ProjectionMatrix projection() const;
  // Optical center in world coordinates, -R^T T.
  Vec3 center() const;
  bool in_image(const PixelPoint& p) const;
  // Throws InvalidArgument unless R is a rotation and K upper-triangular with positive diagonal.
  void validate() const;
};

struct Projection {
  PixelPoint pixel;
  double scale;  // projective depth s > 0
};

Projection project(const ProjectionMatrix& P, const WorldPoint& point);
Projection project(const CameraModel& camera, const WorldPoint& point);
// Homogeneous input; scaling hom by c > 0 leaves the pixel unchanged.
Projection project(const ProjectionMatrix& P, const Vec4& hom);

// Unit-norm minimizer of ||A x|| over the right singular vectors, via cyclic Jacobi on A^T A.
// The largest-magnitude component is made positive.
Eigen::VectorXd solve_homogeneous(const Eigen::MatrixXd& A);

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns match values
};

// Cyclic Jacobi eigen-decomposition for small symmetric matrices (n <= 12).
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& symmetric, double tolerance = 1e-14);

struct Correspondence {
  WorldPoint world;
  PixelPoint pixel;
};

// Hartley-normalized DLT. Result has unit Frobenius norm and its largest-magnitude entry positive.
ProjectionMatrix dlt_pnp(std::span<const Correspondence> correspondences);

// Scale-aligned relative Frobenius distance min_c ||c A - B|| / ||B||.
double aligned_frobenius_error(const Mat34& estimate, const Mat34& reference);

// Homogeneous camera center (null vector of P) dehomogenized; infinite centers return false.
bool camera_center(const ProjectionMatrix& P, Vec3& center);

struct Observation {
  ProjectionMatrix camera;
  PixelPoint pixel;
};

WorldPoint triangulate(std::span<const Observation> observations);

// Per-camera joint pixels, outer index camera, inner index joint.
using JointPixels = std::vector<std::vector<PixelPoint>>;

// Triangulates every joint and averages them into a body center. Joints whose triangulation
// fails are skipped; the frame fails (FrameFailed) when more than half are lost.
WorldPoint baseline_localize(std::span<const ProjectionMatrix> cameras, const JointPixels& joints);

}  // namespace mom
