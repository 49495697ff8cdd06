#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mom/error.hpp"
#include "mom/rng.hpp"
#include "mom/simulator.hpp"

namespace mom {

using u128 = unsigned __int128;
std::string to_string_u128(u128 value);

// 2^n - 1 non-empty subsets of n observations.
std::uint64_t count_mean_estimators(int n);
// (2^n - 1)^2 pairings of an X-side and a Y-side mean estimator.
u128 count_training_pairs(int n);

template <typename Point>
struct MeanEstimator {
  Point value;
  int member_count = 0;
  std::vector<std::size_t> indices;
};

// Mean of m distinct points drawn uniformly without replacement.
template <typename Point>
MeanEstimator<Point> make_mean(std::span<const Point> points, int member_count, Rng& rng) {
  const auto n = static_cast<int>(points.size());
  if (member_count < 1 || member_count > n) {
    throw Error(ErrorKind::InvalidSubsetSize,
                "member count " + std::to_string(member_count) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (int i = 0; i < member_count; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(member_count));

  MeanEstimator<Point> out{Point::Zero(), member_count, std::move(idx)};
  for (auto i : out.indices) out.value += points[i];
  out.value /= static_cast<double>(member_count);
  return out;
}

template <typename Point>
MeanEstimator<Point> make_mean(std::span<const Point> points, int member_count, std::uint64_t seed) {
  Rng rng(seed);
  return make_mean(points, member_count, rng);
}

struct EstimatorSettings {
  int points_per_mean = 30;
  int means_per_image = 12;
};

struct MeanEstimatorBatch {
  std::vector<std::vector<PixelPoint>> per_camera_means;  // k x means_per_image
  WorldPoint target = WorldPoint::Zero();                 // mean of the 12 world joints
  std::vector<PixelPoint> pixel_targets;                  // per camera, mean of the 12 joint pixels
};

// Draws the network input for one frame. Frames carrying presampled observation points use them
// in order (mean i averages points [i*m, (i+1)*m)); otherwise points are sampled along the bones.
MeanEstimatorBatch build_batch(const SkeletonFrame& frame, const EstimatorSettings& settings, std::uint64_t seed);

struct NormalityResult {
  std::vector<double> skewness;
  std::vector<double> excess_kurtosis;
  bool pass = false;
};

inline constexpr double kSkewLimit = 0.25;
inline constexpr double kKurtosisLimit = 0.5;

// Moment-based check, per coordinate: |skew| < 0.25 and |excess kurtosis| < 0.5.
NormalityResult normality_diagnostic(std::span<const double> samples);
NormalityResult normality_diagnostic(std::span<const PixelPoint> samples);

struct DatasetSplit {
  std::vector<SkeletonFrame> train;
  std::vector<SkeletonFrame> test;
};

// Train keeps random-walk frames of train subjects; test keeps every frame of test subjects.
DatasetSplit split_dataset(std::span<const SkeletonFrame> frames, std::span<const int> train_subjects,
                           std::span<const int> test_subjects);

}  // namespace mom
