#include "mom/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace mom {

std::string to_string_u128(u128 value) {
  if (value == 0) return "0";
  std::string digits;
  while (value > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

std::uint64_t count_mean_estimators(int n) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "observation count must be non-negative");
  if (n > 62) throw Error(ErrorKind::Overflow, "2^n - 1 exceeds the supported range for n > 62");
  return (std::uint64_t{1} << n) - 1;
}

u128 count_training_pairs(int n) {
  const u128 m = count_mean_estimators(n);
  return m * m;
}

MeanEstimatorBatch build_batch(const SkeletonFrame& frame, const EstimatorSettings& settings, std::uint64_t seed) {
  if (settings.points_per_mean < 1 || settings.means_per_image < 1) {
    throw Error(ErrorKind::InvalidArgument, "estimator settings must be positive");
  }
  const std::size_t k = frame.joints_pixel.size();
  MeanEstimatorBatch batch;
  batch.per_camera_means.resize(k);
  batch.pixel_targets.resize(k);

  WorldPoint target = WorldPoint::Zero();
  for (const auto& j : frame.joints_world) target += j;
  batch.target = target / static_cast<double>(kJointCount);

  const auto m = static_cast<std::size_t>(settings.points_per_mean);
  for (std::size_t c = 0; c < k; ++c) {
    PixelPoint joint_mean = PixelPoint::Zero();
    for (const auto& p : frame.joints_pixel[c]) joint_mean += p;
    batch.pixel_targets[c] = joint_mean / static_cast<double>(kJointCount);

    auto& means = batch.per_camera_means[c];
    means.reserve(static_cast<std::size_t>(settings.means_per_image));
    if (!frame.presampled.empty()) {
      const auto& pts = frame.presampled.at(c);
      if (pts.size() < m * static_cast<std::size_t>(settings.means_per_image)) {
        throw Error(ErrorKind::ShapeMismatch, "presampled observations too few for the estimator settings");
      }
      for (int i = 0; i < settings.means_per_image; ++i) {
        PixelPoint sum = PixelPoint::Zero();
        for (std::size_t p = 0; p < m; ++p) sum += pts[static_cast<std::size_t>(i) * m + p];
        means.push_back(sum / static_cast<double>(m));
      }
      continue;
    }
    Rng rng(derive_seed(seed, {c}));
    for (int i = 0; i < settings.means_per_image; ++i) {
      const auto pts = sample_observation_points(frame.joints_pixel[c], settings.points_per_mean, rng);
      PixelPoint sum = PixelPoint::Zero();
      for (const auto& p : pts) sum += p;
      means.push_back(sum / static_cast<double>(m));
    }
  }
  return batch;
}

namespace {

void moments(std::span<const double> x, double& skew, double& kurt) {
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean, d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 <= 0.0) {
    // A point mass has no defined shape; report it as maximally non-normal.
    skew = 0.0;
    kurt = -3.0;
    return;
  }
  skew = m3 / std::pow(m2, 1.5);
  kurt = m4 / (m2 * m2) - 3.0;
}

void require_samples(std::size_t n) {
  if (n < 500) throw Error(ErrorKind::InsufficientSamples, "normality diagnostic needs >= 500 samples");
}

}  // namespace

NormalityResult normality_diagnostic(std::span<const double> samples) {
  require_samples(samples.size());
  NormalityResult r;
  double s = 0.0, k = 0.0;
  moments(samples, s, k);
  r.skewness = {s};
  r.excess_kurtosis = {k};
  r.pass = std::abs(s) < kSkewLimit && std::abs(k) < kKurtosisLimit;
  return r;
}

NormalityResult normality_diagnostic(std::span<const PixelPoint> samples) {
  require_samples(samples.size());
  NormalityResult r;
  r.pass = true;
  std::vector<double> coord(samples.size());
  for (int axis = 0; axis < 2; ++axis) {
    for (std::size_t i = 0; i < samples.size(); ++i) coord[i] = samples[i](axis);
    double s = 0.0, k = 0.0;
    moments(coord, s, k);
    r.skewness.push_back(s);
    r.excess_kurtosis.push_back(k);
    r.pass = r.pass && std::abs(s) < kSkewLimit && std::abs(k) < kKurtosisLimit;
  }
  return r;
}

DatasetSplit split_dataset(std::span<const SkeletonFrame> frames, std::span<const int> train_subjects,
                           std::span<const int> test_subjects) {
  for (int s : train_subjects) {
    if (std::find(test_subjects.begin(), test_subjects.end(), s) != test_subjects.end()) {
      throw Error(ErrorKind::InvalidConfig, "subject " + std::to_string(s) + " is in both train and test");
    }
  }
  DatasetSplit split;
  for (const auto& f : frames) {
    const bool in_train = std::find(train_subjects.begin(), train_subjects.end(), f.subject_id) != train_subjects.end();
    const bool in_test = std::find(test_subjects.begin(), test_subjects.end(), f.subject_id) != test_subjects.end();
    if (in_train && f.pattern == PatternKind::RandomWalk) split.train.push_back(f);
    else if (in_test) split.test.push_back(f);
  }
  return split;
}

}  // namespace mom
