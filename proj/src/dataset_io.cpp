#include "mom/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "mom/error.hpp"

namespace mom {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T field(std::string_view text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::ParseError, "bad CSV field '" + std::string(text) + "'");
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::IOFailure, "cannot write " + p.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::IOFailure, "cannot read " + p.string());
  return in;
}

}  // namespace

Dataset generate_dataset(const ExperimentConfig& config) {
  config.validate();
  const ArenaSpec arena = config.arena();
  const NoiseSpec noise = config.noise();
  Dataset data;
  data.cameras = arena.cameras;

  auto emit = [&](int subject, PatternKind kind) {
    const auto pattern_index = static_cast<std::uint64_t>(kind);
    const WalkPattern pattern{kind, config.random_walk_duration, config.frame_rate};
    const auto track = generate_trajectory(
        pattern, arena, derive_seed(config.seed, {tag::kTrajectory, static_cast<std::uint64_t>(subject), pattern_index}));
    if (track.size() >= 100000) throw Error(ErrorKind::InvalidConfig, "trajectory exceeds 100000 frames");
    const double height = subject_center_height(subject);
    for (std::size_t i = 0; i < track.size(); ++i) {
      const auto& s = track[i];
      const WorldPoint center(s.ground.x(), s.ground.y(), height);
      const Skeleton3D joints = articulate(center, s.heading, s.phase, subject);
      const std::int64_t id = static_cast<std::int64_t>(subject) * 1000000 +
                              static_cast<std::int64_t>(pattern_index) * 100000 + static_cast<std::int64_t>(i);
      SkeletonFrame f = render_frame(joints, data.cameras, noise, derive_seed(noise.seed, {static_cast<std::uint64_t>(id)}));
      f.frame_id = id;
      f.time = s.time;
      f.subject_id = subject;
      f.pattern = kind;
      if (config.observation_mode == ObservationMode::Presampled) {
        const int count = config.estimators.points_per_mean * config.estimators.means_per_image;
        for (int c = 0; c < static_cast<int>(data.cameras.size()); ++c) {
          f.presampled.push_back(sample_observation_points(
              f, c, count,
              derive_seed(config.seed, {tag::kData, static_cast<std::uint64_t>(id), static_cast<std::uint64_t>(c)})));
        }
      }
      data.frames.push_back(std::move(f));
    }
  };

  for (int s : config.train_subjects)
    for (auto p : config.train_patterns) emit(s, p);
  for (int s : config.test_subjects)
    for (auto p : config.test_patterns) emit(s, p);
  return data;
}

void write_frames(std::ostream& out, std::span<const SkeletonFrame> frames, int cameras) {
  out << "frame_id,subject_id,pattern,time_s,cx,cy,cz";
  for (int j = 0; j < kJointCount; ++j) out << ",j" << j << "x,j" << j << "y,j" << j << "z";
  for (int c = 0; c < cameras; ++c)
    for (int j = 0; j < kJointCount; ++j) out << ",c" << c << "_j" << j << "u,c" << c << "_j" << j << "v";
  out << "\n";
  for (const auto& f : frames) {
    if (static_cast<int>(f.joints_pixel.size()) != cameras) {
      throw Error(ErrorKind::ShapeMismatch, "frame camera count differs from the header");
    }
    out << f.frame_id << ',' << f.subject_id << ',' << to_string(f.pattern) << ',' << fmt(f.time);
    for (int a = 0; a < 3; ++a) out << ',' << fmt(f.center_world(a));
    for (const auto& j : f.joints_world)
      for (int a = 0; a < 3; ++a) out << ',' << fmt(j(a));
    for (const auto& cam : f.joints_pixel)
      for (const auto& p : cam) out << ',' << fmt(p.x()) << ',' << fmt(p.y());
    out << "\n";
  }
  if (!out) throw Error(ErrorKind::IOFailure, "failed writing frames");
}

std::vector<SkeletonFrame> read_frames(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "frames file is empty");
  const auto header = split_csv(line);
  const std::size_t fixed = 7 + 3 * kJointCount;
  if (header.size() < fixed || (header.size() - fixed) % (2 * kJointCount) != 0 || header[0] != "frame_id") {
    throw Error(ErrorKind::ParseError, "unexpected frames header");
  }
  const std::size_t cameras = (header.size() - fixed) / (2 * kJointCount);

  std::vector<SkeletonFrame> frames;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != header.size()) throw Error(ErrorKind::ParseError, "row has the wrong number of columns");
    SkeletonFrame f;
    f.frame_id = field<std::int64_t>(cols[0]);
    f.subject_id = field<int>(cols[1]);
    f.pattern = parse_pattern(cols[2]);
    f.time = field<double>(cols[3]);
    std::size_t k = 4;
    for (int a = 0; a < 3; ++a) f.center_world(a) = field<double>(cols[k++]);
    for (auto& j : f.joints_world)
      for (int a = 0; a < 3; ++a) j(a) = field<double>(cols[k++]);
    f.joints_pixel.resize(cameras);
    for (auto& cam : f.joints_pixel)
      for (auto& p : cam) {
        p.x() = field<double>(cols[k++]);
        p.y() = field<double>(cols[k++]);
      }
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_observations(std::ostream& out, std::span<const SkeletonFrame> frames) {
  out << "frame_id,camera_id,point_index,u,v\n";
  for (const auto& f : frames) {
    for (std::size_t c = 0; c < f.presampled.size(); ++c) {
      for (std::size_t i = 0; i < f.presampled[c].size(); ++i) {
        const auto& p = f.presampled[c][i];
        out << f.frame_id << ',' << c << ',' << i << ',' << fmt(p.x()) << ',' << fmt(p.y()) << "\n";
      }
    }
  }
  if (!out) throw Error(ErrorKind::IOFailure, "failed writing observations");
}

void read_observations(std::istream& in, std::vector<SkeletonFrame>& frames) {
  std::map<std::int64_t, SkeletonFrame*> by_id;
  for (auto& f : frames) {
    f.presampled.assign(f.joints_pixel.size(), {});
    by_id[f.frame_id] = &f;
  }
  std::string line;
  if (!std::getline(in, line) || line != "frame_id,camera_id,point_index,u,v") {
    throw Error(ErrorKind::ParseError, "unexpected observations header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != 5) throw Error(ErrorKind::ParseError, "observation row needs 5 columns");
    const auto id = field<std::int64_t>(cols[0]);
    const auto cam = field<std::size_t>(cols[1]);
    const auto idx = field<std::size_t>(cols[2]);
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorKind::ParseError, "observation refers to unknown frame " + std::to_string(id));
    auto& slots = it->second->presampled;
    if (cam >= slots.size()) throw Error(ErrorKind::ParseError, "observation camera out of range");
    if (idx != slots[cam].size()) throw Error(ErrorKind::ParseError, "observation point indices must be consecutive");
    slots[cam].emplace_back(field<double>(cols[3]), field<double>(cols[4]));
  }
  const std::size_t expected = frames.empty() || frames.front().presampled.empty() ? 0 : frames.front().presampled[0].size();
  for (const auto& f : frames)
    for (const auto& c : f.presampled)
      if (c.size() != expected || expected == 0) {
        throw Error(ErrorKind::ParseError, "observation counts differ between frames");
      }
}

void write_cameras(std::ostream& out, std::span<const CameraModel> cameras) {
  out << "camera_id,width,height";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out << ",K" << r << c;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out << ",R" << r << c;
  out << ",T0,T1,T2\n";
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const auto& cam = cameras[i];
    out << i << ',' << cam.image_width << ',' << cam.image_height;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << ',' << fmt(cam.intrinsics(r, c));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << ',' << fmt(cam.rotation(r, c));
    for (int a = 0; a < 3; ++a) out << ',' << fmt(cam.translation(a));
    out << "\n";
  }
}

std::vector<CameraModel> read_cameras(std::istream& in) {
  std::string line;
  std::getline(in, line);
  std::vector<CameraModel> cams;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != 24) throw Error(ErrorKind::ParseError, "camera row needs 24 columns");
    CameraModel cam;
    cam.image_width = field<int>(cols[1]);
    cam.image_height = field<int>(cols[2]);
    std::size_t k = 3;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) cam.intrinsics(r, c) = field<double>(cols[k++]);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) cam.rotation(r, c) = field<double>(cols[k++]);
    for (int a = 0; a < 3; ++a) cam.translation(a) = field<double>(cols[k++]);
    cams.push_back(cam);
  }
  return cams;
}

DatasetCounts save_dataset(const DatasetPaths& paths, const Dataset& dataset, const ExperimentConfig& config) {
  std::filesystem::create_directories(paths.dir);
  {
    auto out = open_out(paths.config());
    write_config(out, config);
  }
  {
    auto out = open_out(paths.cameras());
    write_cameras(out, dataset.cameras);
  }
  {
    auto out = open_out(paths.frames());
    write_frames(out, dataset.frames, static_cast<int>(dataset.cameras.size()));
  }
  DatasetCounts counts{dataset.frames.size(), 0};
  if (config.observation_mode == ObservationMode::Presampled) {
    auto out = open_out(paths.observations());
    write_observations(out, dataset.frames);
    for (const auto& f : dataset.frames)
      for (const auto& c : f.presampled) counts.observations += c.size();
  } else {
    std::filesystem::remove(paths.observations());
  }
  return counts;
}

Dataset load_dataset(const DatasetPaths& paths, ExperimentConfig& config) {
  config = load_config(paths.config());
  Dataset data;
  {
    auto in = open_in(paths.cameras());
    data.cameras = read_cameras(in);
  }
  {
    auto in = open_in(paths.frames());
    data.frames = read_frames(in);
  }
  if (config.observation_mode == ObservationMode::Presampled) {
    auto in = open_in(paths.observations());
    read_observations(in, data.frames);
  }
  for (const auto& f : data.frames) {
    if (f.joints_pixel.size() != data.cameras.size()) {
      throw Error(ErrorKind::ParseError, "frames and cameras files disagree on camera count");
    }
  }
  return data;
}

}  // namespace mom
