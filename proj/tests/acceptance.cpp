// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero if any fails.
// Criterion numbers may be passed as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mom/config.hpp"
#include "mom/error.hpp"
#include "mom/estimators.hpp"
#include "mom/experiments.hpp"
#include "mom/geometry.hpp"
#include "mom/metrics.hpp"
#include "mom/network.hpp"
#include "mom/simulator.hpp"
#include "support.hpp"

using namespace mom;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kRoundTripTol = 1e-6;      // meters
constexpr double kRoundTripSeconds = 5.0;
constexpr double kDltTol = 1e-6;            // relative, scale-aligned
constexpr double kGradientTol = 1e-4;       // relative, per tensor
constexpr double kGradientSeconds = 60.0;
constexpr double kDecoderMatrixTol = 0.02;  // relative, scale-aligned
constexpr double kDecoderLossTol = 1e-3;    // normalized pixels
constexpr double kEndToEndSeconds = 20 * 60.0;
constexpr double kJitterBand = 3.0;         // accuracy points
constexpr double kNoiseBand = 5.0;          // accuracy points
constexpr double kOracleTol = 1e-12;
constexpr int kSeeds = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int majority() { return kSeeds / 2 + 1; }

EvaluationReport pooled(const std::vector<Trajectory>& trajectories) {
  return evaluate(trajectories);
}

Outcome geometry_round_trip() {
  Rng rng(1001);
  const auto t0 = Clock::now();
  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const CameraModel a = testing::random_camera(rng), b = testing::random_camera(rng);
    const WorldPoint p = testing::random_point(rng);
    try {
      const std::vector<Observation> obs{{a.projection(), project(a, p).pixel}, {b.projection(), project(b, p).pixel}};
      worst = std::max(worst, (triangulate(obs) - p).norm());
    } catch (const Error&) {
      ++failures;
    }
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && worst < kRoundTripTol && secs < kRoundTripSeconds,
          fmt("max error %.3g m over 1000 cases, %d exceptions, %.2f s", worst, failures, secs)};
}

Outcome dlt_fidelity() {
  Rng rng(1002);
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const CameraModel cam = testing::random_camera(rng);
    std::vector<Correspondence> corr;
    for (int i = 0; i < 20; ++i) {
      const WorldPoint p = testing::random_point(rng);
      corr.push_back({p, project(cam, p).pixel});
    }
    worst = std::max(worst, aligned_frobenius_error(dlt_pnp(corr).entries, cam.projection().entries));
  }
  bool degenerate = false;
  {
    const CameraModel cam = testing::random_camera(rng);
    std::vector<Correspondence> plane;
    for (int i = 0; i < 20; ++i) {
      WorldPoint p = testing::random_point(rng);
      p.z() = 0.0;
      plane.push_back({p, project(cam, p).pixel});
    }
    try {
      dlt_pnp(plane);
    } catch (const Error& e) {
      degenerate = e.kind() == ErrorKind::DegenerateConfiguration;
    }
  }
  return {worst < kDltTol && degenerate,
          fmt("max aligned error %.3g over 100 cameras, coplanar -> %s", worst,
              degenerate ? "DegenerateConfiguration" : "no error")};
}

Outcome combinatorics() {
  bool ok = count_mean_estimators(20) == 1048575ULL &&
            to_string_u128(count_training_pairs(20)) == "1099509530625";
  for (int n = 0; n <= 16; ++n) {
    std::uint64_t subsets = 0;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) ++subsets;
    u128 pairs = 0;
    for (std::uint64_t i = 0; i < subsets; ++i) pairs += subsets;
    ok = ok && count_mean_estimators(n) == subsets && count_training_pairs(n) == pairs;
  }
  return {ok, fmt("n=20: %llu estimators, %s pairs; enumeration n<=16 %s",
                  static_cast<unsigned long long>(count_mean_estimators(20)),
                  to_string_u128(count_training_pairs(20)).c_str(), ok ? "agrees" : "disagrees")};
}

Outcome clt_diagnostic() {
  const ArenaSpec arena = default_arena();
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(derive_seed(4000, {seed}));
    std::uniform_real_distribution<double> pos(arena.margin, arena.width - arena.margin);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    const int subject = 1 + static_cast<int>(seed);
    const auto joints =
        articulate(WorldPoint(pos(rng), pos(rng), subject_center_height(subject)), angle(rng), angle(rng), subject);
    const SkeletonFrame f = render_frame(joints, arena.cameras, NoiseSpec{}, seed);
    bool seed_ok = true;
    for (int cam = 0; cam < static_cast<int>(arena.cameras.size()); ++cam) {
      const auto raw = sample_observation_points(f, cam, 10000, derive_seed(seed, {1}));
      std::vector<PixelPoint> means;
      for (int i = 0; i < 10000; ++i) {
        const auto pts = sample_observation_points(f.joints_pixel[static_cast<std::size_t>(cam)], 30, rng);
        PixelPoint s = PixelPoint::Zero();
        for (const auto& p : pts) s += p;
        means.push_back(s / 30.0);
      }
      seed_ok = seed_ok && !normality_diagnostic(std::span<const PixelPoint>(raw)).pass &&
                normality_diagnostic(std::span<const PixelPoint>(means)).pass;
    }
    ok += seed_ok;
  }
  return {ok == 5, fmt("%d of 5 seeds: raw points fail and 30-point means pass on both cameras", ok)};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const NetworkShape shape;
  NetworkParameters p = init_parameters(shape, 5001);
  Rng rng(5002);
  std::uniform_real_distribution<double> u(-1.0, 1.0), unit(0.0, 1.0);
  for (auto& v : p.mutable_values()) v += 0.01 * u(rng);
  TrainingBatch batch{Eigen::MatrixXd(16, shape.input_width()), Eigen::MatrixXd(16, 3),
                      Eigen::MatrixXd(16, 2 * shape.cameras)};
  for (Eigen::Index r = 0; r < 16; ++r) {
    for (Eigen::Index c = 0; c < batch.inputs.cols(); ++c) batch.inputs(r, c) = unit(rng);
    for (Eigen::Index c = 0; c < 3; ++c) batch.targets_world(r, c) = 10.0 * unit(rng);
    for (Eigen::Index c = 0; c < batch.targets_pixels.cols(); ++c) batch.targets_pixels(r, c) = unit(rng);
  }
  // Entries checked per tensor; smaller tensors are checked in full.
  constexpr std::size_t kSamples = 64;
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t tensors = 0, entries = 0;
  for (bool decoder : {true, false}) {
    LossWeights w;
    w.decoder = decoder;
    const NetworkParameters g = backward(encoder_forward(p, batch.inputs), p, batch, w);
    NetworkParameters probe = p;
    auto loss = [&] { return evaluate_loss(encoder_forward(probe, batch.inputs), batch, w).total; };
    for (const auto& slot : p.layers()) {
      const std::size_t weights = static_cast<std::size_t>(slot.in) * static_cast<std::size_t>(slot.out);
      for (auto [begin, count] : {std::pair{slot.weight_offset, weights},
                                  std::pair{slot.bias_offset, static_cast<std::size_t>(slot.out)}}) {
        std::vector<std::size_t> idx;
        if (count <= kSamples) {
          for (std::size_t i = 0; i < count; ++i) idx.push_back(begin + i);
        } else {
          std::uniform_int_distribution<std::size_t> pick(0, count - 1);
          for (std::size_t i = 0; i < kSamples; ++i) idx.push_back(begin + pick(rng));
        }
        double diff = 0.0, na = 0.0, nf = 0.0;
        for (auto i : idx) {
          const double orig = probe.values()[i];
          probe.mutable_values()[i] = orig + h;
          const double up = loss();
          probe.mutable_values()[i] = orig - h;
          const double down = loss();
          probe.mutable_values()[i] = orig;
          const double fd = (up - down) / (2 * h), an = g.values()[i];
          diff += (fd - an) * (fd - an);
          na += an * an;
          nf += fd * fd;
        }
        worst = std::max(worst, std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nf), 1e-12}));
        ++tensors;
        entries += idx.size();
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < kGradientTol && secs < kGradientSeconds,
          fmt("max relative error %.3g over %zu tensors (%zu entries, decoder on and off), %.1f s", worst, tensors,
              entries, secs)};
}

Outcome decoder_recovery() {
  ExperimentConfig cfg;
  const Dataset data = generate_dataset(cfg);
  const auto split = split_dataset(data.frames, cfg.train_subjects, cfg.test_subjects);
  const PixelNormalization norm;
  // Every 12th training frame keeps the fit cheap.
  std::vector<Vec3> locations;
  std::vector<const SkeletonFrame*> used;
  for (std::size_t i = 0; i < split.train.size(); i += 12) used.push_back(&split.train[i]);
  Eigen::MatrixXd targets(static_cast<Eigen::Index>(used.size()), 2 * cfg.shape.cameras);
  for (std::size_t i = 0; i < used.size(); ++i) {
    const auto b = build_batch(*used[i], cfg.estimators, 0);
    locations.push_back(b.target);
    for (int c = 0; c < cfg.shape.cameras; ++c) {
      targets(static_cast<Eigen::Index>(i), 2 * c) = b.pixel_targets[static_cast<std::size_t>(c)].x() / norm.width;
      targets(static_cast<Eigen::Index>(i), 2 * c + 1) = b.pixel_targets[static_cast<std::size_t>(c)].y() / norm.height;
    }
  }
  const DecoderFit fit = fit_decoder(locations, targets, cfg.shape.cameras);
  double worst = 0.0, reference_loss = 0.0;
  for (int c = 0; c < cfg.shape.cameras; ++c) {
    const CameraModel& cam = data.cameras[static_cast<std::size_t>(c)];
    double mean_scale = 0.0;
    for (const auto& y : locations) mean_scale += project(cam, y).scale;
    mean_scale /= static_cast<double>(locations.size());
    Mat3 n = Mat3::Identity();
    n(0, 0) = 1.0 / norm.width;
    n(1, 1) = 1.0 / norm.height;
    const Mat34 reference = n * cam.projection().entries / mean_scale;
    worst = std::max(worst, aligned_frobenius_error(fit.matrices[static_cast<std::size_t>(c)], reference));
    for (std::size_t i = 0; i < locations.size(); ++i) {
      const Vec3 target(targets(static_cast<Eigen::Index>(i), 2 * c), targets(static_cast<Eigen::Index>(i), 2 * c + 1), 1.0);
      reference_loss += smooth_norm(decode(reference, locations[i]) - target) / static_cast<double>(locations.size());
    }
  }
  return {worst < kDecoderMatrixTol && fit.reconstruction_loss < kDecoderLossTol,
          fmt("max aligned matrix error %.3g (tol %.2g), L_rec %.3g (tol %.0e) over %zu frames; "
              "the reference P/s itself gives L_rec %.3g", worst, kDecoderMatrixTol, fit.reconstruction_loss,
              kDecoderLossTol, locations.size(), reference_loss)};
}

// Shared desk-scale runs: jitter 5 px and joint noise 3 px, decoder on and off, three seeds.
struct DeskRuns {
  double seconds = 0.0;
  EvaluationReport baseline;
  std::vector<EvaluationReport> mom;
  std::vector<double> std_on, std_off;
  double train_seconds_on = 0.0;
};

double tail_std(const std::vector<EpochRecord>& history, std::size_t last) {
  const std::size_t n = std::min(last, history.size());
  double mean = 0.0;
  for (std::size_t i = history.size() - n; i < history.size(); ++i) mean += history[i].loc_test;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = history.size() - n; i < history.size(); ++i)
    var += (history[i].loc_test - mean) * (history[i].loc_test - mean);
  return std::sqrt(var / static_cast<double>(n));
}

const DeskRuns& desk_runs() {
  static std::optional<DeskRuns> runs;
  if (runs) return *runs;
  DeskRuns r;
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.camera_offset_max = 5.0;
  cfg.joint_noise_std = 3.0;
  const Dataset data = generate_dataset(cfg);
  r.baseline = pooled(run_baseline(data, cfg, BaselineMode::EstimatedP).trajectories);
  for (int s = 0; s < kSeeds; ++s) {
    for (bool decoder : {true, false}) {
      ExperimentConfig run = cfg;
      run.seed = static_cast<std::uint64_t>(s);
      run.loss.decoder = decoder;
      const auto ts = Clock::now();
      const TrainResult trained = run_train(data, run);
      if (decoder) {
        r.std_on.push_back(tail_std(trained.history, 20));
        r.mom.push_back(pooled(run_eval(data, run, trained.params, checkpoint_meta(run, trained)).trajectories));
        r.train_seconds_on += seconds_since(ts);
      } else {
        r.std_off.push_back(tail_std(trained.history, 20));
      }
    }
  }
  r.seconds = seconds_since(t0);
  runs = r;
  return *runs;
}

Outcome decoder_ablation() {
  const DeskRuns& r = desk_runs();
  int ok = 0;
  std::string per_seed;
  for (int s = 0; s < kSeeds; ++s) {
    ok += r.std_on[static_cast<std::size_t>(s)] <= r.std_off[static_cast<std::size_t>(s)];
    per_seed += fmt(" [seed %d: on %.4f off %.4f]", s, r.std_on[static_cast<std::size_t>(s)],
                    r.std_off[static_cast<std::size_t>(s)]);
  }
  return {ok >= majority(), fmt("%d of %d seeds with decoder-on std <= decoder-off;", ok, kSeeds) + per_seed};
}

Outcome end_to_end() {
  const DeskRuns& r = desk_runs();
  int ok = 0;
  std::string per_seed;
  for (int s = 0; s < kSeeds; ++s) {
    const auto& m = r.mom[static_cast<std::size_t>(s)];
    ok += m.errors.mean < r.baseline.errors.mean && m.accuracy[1] > r.baseline.accuracy[1];
    per_seed += fmt(" [seed %d: mean %.3f m, acc@0.3 %.1f]", s, m.errors.mean, m.accuracy[1]);
  }
  // Budget: one baseline plus one decoder-on training and evaluation per seed.
  const double secs = r.train_seconds_on;
  return {ok >= 2 && secs < kEndToEndSeconds,
          fmt("%d of %d seeds beat baseline (mean %.3f m, acc@0.3 %.1f); %.0f s;", ok, kSeeds,
              r.baseline.errors.mean, r.baseline.accuracy[1], secs) +
              per_seed};
}

EvaluationReport sweep_point(const ExperimentConfig& base, SweepAxis axis, double level) {
  const ExperimentConfig cfg = sweep_level_config(base, axis, level);
  const Dataset data = generate_dataset(cfg);
  const TrainResult trained = run_train(data, cfg);
  return pooled(run_eval(data, cfg, trained.params, checkpoint_meta(cfg, trained)).trajectories);
}

Outcome robustness() {
  int jitter_ok = 0, noise_ok = 0;
  std::string detail;
  for (int s = 0; s < kSeeds; ++s) {
    ExperimentConfig base;
    base.seed = static_cast<std::uint64_t>(s);
    const double a0 = sweep_point(base, SweepAxis::Jitter, 0).accuracy[1];
    const double a4 = sweep_point(base, SweepAxis::Jitter, 4).accuracy[1];
    const double a8 = sweep_point(base, SweepAxis::Jitter, 8).accuracy[1];
    jitter_ok += std::abs(a4 - a0) <= kJitterBand && std::abs(a8 - a0) <= kJitterBand;
    const auto n0 = sweep_point(base, SweepAxis::Noise, 0);
    const auto n19 = sweep_point(base, SweepAxis::Noise, 19);
    noise_ok += std::abs(n19.accuracy[2] - n0.accuracy[2]) <= kNoiseBand &&
                std::abs(n19.accuracy[3] - n0.accuracy[3]) <= kNoiseBand;
    detail += fmt(" [seed %d: acc@0.3 %.1f/%.1f/%.1f at offset 0/4/8; acc@0.4 %.1f->%.1f, acc@0.5 %.1f->%.1f at "
                  "sigma 0->19]",
                  s, a0, a4, a8, n0.accuracy[2], n19.accuracy[2], n0.accuracy[3], n19.accuracy[3]);
  }
  return {jitter_ok >= majority() && noise_ok >= majority(),
          fmt("jitter %d of %d seeds, noise %d of %d seeds;", jitter_ok, kSeeds, noise_ok, kSeeds) + detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / "mom_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg_path = (dir / "exp.cfg").string();
  {
    std::ofstream cfg(cfg_path);
    cfg << "train_subjects=1\ntest_subjects=2\nrandom_walk_duration=8\nepochs=2\n"
           "camera_offset_max=3\njoint_noise_std=2\n";
  }
  auto cli = [](const std::string& args) {
    return std::system((std::string(MOM_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  };
  int failures = 0;
  for (const std::string run : {"a", "b"}) {
    const std::string out = (dir / run).string();
    failures += cli("generate --config " + cfg_path + " --seed 9 --out " + out + "/data") != 0;
    failures += cli("baseline --dataset " + out + "/data --mode known --out " + out + "/known") != 0;
    failures += cli("baseline --dataset " + out + "/data --mode estimated --out " + out + "/estimated") != 0;
    failures += cli("train --dataset " + out + "/data --out " + out + "/train") != 0;
    failures += cli("train --dataset " + out + "/data --no-decoder --out " + out + "/ablation") != 0;
    failures += cli("eval --dataset " + out + "/data --checkpoint " + out + "/train/checkpoint.txt --out " + out +
                    "/eval") != 0;
    for (const std::string axis : {"jitter", "noise", "subjects"}) {
      const std::string levels = axis == "subjects" ? "1,2" : "0,5";
      failures += cli("sweep --config " + cfg_path + " --set test_subjects=9 --axis " + axis + " --levels " + levels +
                      " --out " + out + "/sweep") != 0;
    }
  }
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir / "a");
    differing += slurp(entry.path()) != slurp(dir / "b" / rel);
    ++compared;
  }
  return {failures == 0 && differing == 0 && compared > 0,
          fmt("%zu output files compared, %zu differ, %d command failures", compared, differing, failures)};
}

Trajectory random_trajectory(Rng& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 0.3);
  Trajectory t;
  WorldPoint truth(5, 5, 1);
  for (std::size_t i = 0; i < n; ++i) {
    truth += WorldPoint(g(rng), g(rng), 0.01 * g(rng));
    t.push_back({static_cast<std::int64_t>(i), truth + WorldPoint(g(rng), g(rng), g(rng)), truth});
  }
  return t;
}

Outcome metrics_oracles() {
  Rng rng(11001);
  double worst = 0.0;
  bool medians = true;
  for (int t = 0; t < 100; ++t) {
    const auto traj = random_trajectory(rng, 2 + static_cast<std::size_t>(t * 13 % 300));
    const std::size_t n = traj.size();
    std::vector<double> e;
    double sum = 0.0, sq = 0.0;
    for (const auto& p : traj) {
      double acc = 0.0;
      for (int a = 0; a < 3; ++a) acc += (p.predicted(a) - p.truth(a)) * (p.predicted(a) - p.truth(a));
      e.push_back(std::sqrt(acc));
      sum += e.back();
      sq += acc;
    }
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (double v : e) var += (v - mean) * (v - mean);
    auto sorted = e;
    std::sort(sorted.begin(), sorted.end());
    const auto s = positioning_errors(traj);
    worst = std::max({worst, std::abs(s.mean - mean), std::abs(s.std - std::sqrt(var / static_cast<double>(n))),
                      std::abs(absolute_trajectory_error(traj) - std::sqrt(sq / static_cast<double>(n)))});
    medians = medians && s.median == sorted[(n - 1) / 2];
    for (double th : kAccuracyThresholds) {
      std::size_t hits = 0;
      for (double v : e) hits += v < th;
      worst = std::max(worst, std::abs(accuracy_at(traj, th) - 100.0 * static_cast<double>(hits) / static_cast<double>(n)));
    }
    double rsq = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (int a = 0; a < 3; ++a) {
        const double d = (traj[i + 1].predicted(a) - traj[i].predicted(a)) - (traj[i + 1].truth(a) - traj[i].truth(a));
        rsq += d * d;
      }
    worst = std::max(worst, std::abs(relative_pose_error(traj) - std::sqrt(rsq / static_cast<double>(n - 1))));
  }
  // Offsets with exactly representable norms, so the identities hold without rounding.
  bool offsets = true;
  for (const Vec3& d : {Vec3(3, 4, 0), Vec3(0.5, 0.0, 0.0), Vec3(2, 3, 6)}) {
    Trajectory traj;
    for (int i = 0; i < 50; ++i) {
      const WorldPoint truth(0.25 * i, 0.5 * (i % 7), 1.0);
      traj.push_back({i, truth + d, truth});
    }
    offsets = offsets && absolute_trajectory_error(traj) == d.norm() && relative_pose_error(traj) == 0.0;
  }
  return {worst < kOracleTol && medians && offsets,
          fmt("max deviation %.3g over 100 trajectories, medians %s, offset identities %s", worst,
              medians ? "exact" : "differ", offsets ? "exact" : "inexact")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"geometry round trip", geometry_round_trip},
      {"DLT fidelity", dlt_fidelity},
      {"combinatorics", combinatorics},
      {"CLT diagnostic", clt_diagnostic},
      {"gradient correctness", gradient_check},
      {"decoder recovery", decoder_recovery},
      {"decoder ablation", decoder_ablation},
      {"end-to-end ordering", end_to_end},
      {"robustness trends", robustness},
      {"CLI determinism", cli_determinism},
      {"metrics oracles", metrics_oracles},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
