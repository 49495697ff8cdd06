#include "mom/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>

#include "mom/error.hpp"
#include "mom/estimators.hpp"
#include "mom/geometry.hpp"

namespace mom {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool contains(const std::vector<int>& ids, int id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); }

bool contains(const std::vector<PatternKind>& kinds, PatternKind k) {
  return std::find(kinds.begin(), kinds.end(), k) != kinds.end();
}

}  // namespace

std::vector<TestSegment> test_segments(const Dataset& dataset, const ExperimentConfig& config) {
  std::map<std::pair<int, int>, TestSegment> groups;
  for (const auto& f : dataset.frames) {
    if (!contains(config.test_subjects, f.subject_id) || !contains(config.test_patterns, f.pattern)) continue;
    auto& seg = groups[{f.subject_id, static_cast<int>(f.pattern)}];
    seg.subject_id = f.subject_id;
    seg.pattern = f.pattern;
    seg.frames.push_back(&f);
  }
  std::vector<TestSegment> out;
  for (auto& [key, seg] : groups) {
    std::sort(seg.frames.begin(), seg.frames.end(),
              [](const SkeletonFrame* a, const SkeletonFrame* b) { return a->frame_id < b->frame_id; });
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<PatternReport> report_by_pattern(const std::vector<TestSegment>& segments,
                                             const std::vector<Trajectory>& trajectories,
                                             const ExperimentConfig& config) {
  std::vector<PatternReport> out;
  for (PatternKind kind : config.test_patterns) {
    std::vector<Trajectory> pooled;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (segments[i].pattern == kind && !trajectories[i].empty()) pooled.push_back(trajectories[i]);
    }
    if (pooled.empty()) continue;
    out.push_back({kind, evaluate(pooled, config.report)});
  }
  if (out.empty()) throw Error(ErrorKind::EmptyDataset, "no test frames to evaluate");
  return out;
}

BaselineMode parse_baseline_mode(std::string_view name) {
  if (name == "known" || name == "known-P") return BaselineMode::KnownP;
  if (name == "estimated" || name == "estimated-P") return BaselineMode::EstimatedP;
  throw Error(ErrorKind::ParseError, "unknown baseline mode '" + std::string(name) + "'");
}

std::vector<ProjectionMatrix> calibrate_cameras(const Dataset& dataset, const ExperimentConfig& config) {
  std::vector<const SkeletonFrame*> pool;
  for (const auto& f : dataset.frames) {
    if (contains(config.train_subjects, f.subject_id)) pool.push_back(&f);
  }
  const auto n = static_cast<std::size_t>(config.calibration_frames);
  if (pool.size() < n || n == 0) {
    throw Error(ErrorKind::InsufficientCorrespondences, "not enough training frames for calibration");
  }
  std::vector<const SkeletonFrame*> chosen;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx = n == 1 ? 0 : i * (pool.size() - 1) / (n - 1);
    chosen.push_back(pool[idx]);
  }
  std::vector<ProjectionMatrix> out;
  for (std::size_t c = 0; c < dataset.cameras.size(); ++c) {
    std::vector<Correspondence> corr;
    for (const auto* f : chosen) {
      for (int j = 0; j < kJointCount; ++j) corr.push_back({f->joints_world[j], f->joints_pixel[c][j]});
    }
    out.push_back(dlt_pnp(corr));
  }
  return out;
}

BaselineResult run_baseline(const Dataset& dataset, const ExperimentConfig& config, BaselineMode mode) {
  std::vector<ProjectionMatrix> cams;
  if (mode == BaselineMode::KnownP) {
    for (const auto& c : dataset.cameras) cams.push_back(c.projection());
  } else {
    cams = calibrate_cameras(dataset, config);
  }
  const auto segments = test_segments(dataset, config);
  BaselineResult result;
  for (const auto& seg : segments) {
    Trajectory traj;
    for (const auto* f : seg.frames) {
      JointPixels joints;
      for (const auto& cam : f->joints_pixel) joints.emplace_back(cam.begin(), cam.end());
      try {
        traj.push_back({f->frame_id, baseline_localize(cams, joints), f->center_world});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::FrameFailed) throw;
        ++result.failed_frames;
      }
    }
    result.trajectories.push_back(std::move(traj));
  }
  result.reports = report_by_pattern(segments, result.trajectories, config);
  return result;
}

TrainResult run_train(const Dataset& dataset, const ExperimentConfig& config) {
  const DatasetSplit split = split_dataset(dataset.frames, config.train_subjects, config.test_subjects);
  return train(config.train_config(), split.train, split.test);
}

CheckpointMeta checkpoint_meta(const ExperimentConfig& config, const TrainResult& result) {
  const TrainConfig tc = config.train_config();
  CheckpointMeta meta;
  meta.normalization = tc.normalization;
  meta.lambda = tc.loss.lambda;
  meta.decoder = tc.loss.decoder;
  meta.seed = tc.seed;
  meta.epoch = result.history.empty() ? 0 : result.history.back().epoch;
  return meta;
}

EvalResult run_eval(const Dataset& dataset, const ExperimentConfig& config, const NetworkParameters& params,
                    const CheckpointMeta& meta) {
  const NetworkShape& shape = params.shape();
  if (shape.cameras != static_cast<int>(dataset.cameras.size())) {
    throw Error(ErrorKind::CheckpointMismatch, "checkpoint expects " + std::to_string(shape.cameras) +
                                                   " cameras, dataset has " + std::to_string(dataset.cameras.size()));
  }
  if (shape.means_per_image != config.estimators.means_per_image) {
    throw Error(ErrorKind::CheckpointMismatch, "checkpoint and config disagree on means per image");
  }
  const auto segments = test_segments(dataset, config);
  EvalResult result;
  const auto seed = config.train_seed();
  for (const auto& seg : segments) {
    std::vector<MeanEstimatorBatch> means;
    for (const auto* f : seg.frames) means.push_back(evaluation_means(*f, config.estimators, seed));
    const TrainingBatch batch = make_training_batch(means, meta.normalization);
    const Eigen::MatrixXd pred = predict(params, batch.inputs);
    Trajectory traj;
    for (std::size_t i = 0; i < seg.frames.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      traj.push_back({seg.frames[i]->frame_id, pred.row(row).transpose(), seg.frames[i]->center_world});
    }
    result.trajectories.push_back(std::move(traj));
  }
  result.reports = report_by_pattern(segments, result.trajectories, config);
  return result;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "jitter") return SweepAxis::Jitter;
  if (name == "noise") return SweepAxis::Noise;
  if (name == "subjects") return SweepAxis::Subjects;
  throw Error(ErrorKind::ParseError, "unknown sweep axis '" + std::string(name) + "'");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Jitter: return "jitter";
    case SweepAxis::Noise: return "noise";
    case SweepAxis::Subjects: return "subjects";
  }
  return "?";
}

ExperimentConfig sweep_level_config(const ExperimentConfig& base, SweepAxis axis, double level) {
  ExperimentConfig cfg = base;
  switch (axis) {
    case SweepAxis::Jitter:
      if (level < 0.0 || level > 19.0) throw Error(ErrorKind::InvalidArgument, "jitter level must be in [0, 19]");
      cfg.camera_offset_max = level;
      break;
    case SweepAxis::Noise:
      if (level < 0.0 || level > 19.0) throw Error(ErrorKind::InvalidArgument, "noise level must be in [0, 19]");
      cfg.joint_noise_std = level;
      break;
    case SweepAxis::Subjects: {
      const int count = static_cast<int>(level);
      if (count < 1 || count > 10 || static_cast<double>(count) != level) {
        throw Error(ErrorKind::InvalidArgument, "subject level must be an integer in [1, 10]");
      }
      cfg.train_subjects.clear();
      for (int id = 1; static_cast<int>(cfg.train_subjects.size()) < count; ++id) {
        if (!contains(cfg.test_subjects, id)) cfg.train_subjects.push_back(id);
      }
      break;
    }
  }
  cfg.validate();
  return cfg;
}

std::vector<SweepRow> sweep_rows(double level, std::span<const PatternReport> reports) {
  static const char* kNames[] = {"acc@0.2", "acc@0.3", "acc@0.4", "acc@0.5"};
  std::vector<SweepRow> rows;
  for (const auto& r : reports) {
    const auto& e = r.report;
    rows.push_back({level, r.pattern, "mean", e.errors.mean});
    rows.push_back({level, r.pattern, "median", e.errors.median});
    rows.push_back({level, r.pattern, "std", e.errors.std});
    rows.push_back({level, r.pattern, "ATE", e.ate});
    rows.push_back({level, r.pattern, "RPE", e.rpe});
    for (std::size_t i = 0; i < e.accuracy.size(); ++i) rows.push_back({level, r.pattern, kNames[i], e.accuracy[i]});
  }
  return rows;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, SweepAxis axis, std::span<const double> levels) {
  std::vector<SweepRow> rows;
  for (double level : levels) {
    const ExperimentConfig cfg = sweep_level_config(base, axis, level);
    const Dataset data = generate_dataset(cfg);
    const TrainResult trained = run_train(data, cfg);
    const EvalResult eval = run_eval(data, cfg, trained.params, checkpoint_meta(cfg, trained));
    const auto r = sweep_rows(level, eval.reports);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

void write_reports(std::ostream& out, std::span<const PatternReport> reports) {
  out << "pattern,frames," << report_csv_header() << "\n";
  for (const auto& r : reports) {
    out << to_string(r.pattern) << ',' << r.report.frames << ',' << report_csv_row(r.report) << "\n";
  }
}

void write_trajectories(std::ostream& out, const std::vector<TestSegment>& segments,
                        const std::vector<Trajectory>& trajectories) {
  out << "subject_id,pattern,frame_id,gt_x,gt_y,gt_z,pred_x,pred_y,pred_z\n";
  for (std::size_t i = 0; i < segments.size(); ++i) {
    for (const auto& p : trajectories[i]) {
      out << segments[i].subject_id << ',' << to_string(segments[i].pattern) << ',' << p.frame_id;
      for (int a = 0; a < 3; ++a) out << ',' << fmt(p.truth(a));
      for (int a = 0; a < 3; ++a) out << ',' << fmt(p.predicted(a));
      out << "\n";
    }
  }
}

void write_loss_history(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,L_loc_train,L_rec_train,L_loc_test,L_rec_test\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << fmt(r.loc_train) << ',' << fmt(r.rec_train) << ',' << fmt(r.loc_test) << ','
        << fmt(r.rec_test) << "\n";
  }
}

void write_sweep(std::ostream& out, std::span<const SweepRow> rows) {
  out << "level,pattern,metric,value\n";
  for (const auto& r : rows) {
    out << fmt(r.level) << ',' << to_string(r.pattern) << ',' << r.metric << ',' << fmt(r.value) << "\n";
  }
}

}  // namespace mom
