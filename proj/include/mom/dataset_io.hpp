#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mom/config.hpp"
#include "mom/simulator.hpp"

namespace mom {

struct Dataset {
  std::vector<CameraModel> cameras;
  std::vector<SkeletonFrame> frames;
};

// Generates every frame described by the config: train subjects walk the train patterns,
// test subjects the test patterns. Frame ids are subject*1e6 + pattern*1e5 + index.
Dataset generate_dataset(const ExperimentConfig& config);

// frames.csv: frame_id,subject_id,pattern,time_s,cx,cy,cz,j0x,j0y,j0z,...,j11z, then the
// perturbed joint pixels as c{camera}_j{joint}u, c{camera}_j{joint}v.
void write_frames(std::ostream& out, std::span<const SkeletonFrame> frames, int cameras);
std::vector<SkeletonFrame> read_frames(std::istream& in);

// observations.csv: frame_id,camera_id,point_index,u,v
void write_observations(std::ostream& out, std::span<const SkeletonFrame> frames);
// Attaches presampled points to the frames by id; every (frame, camera) must get the same count.
void read_observations(std::istream& in, std::vector<SkeletonFrame>& frames);

// cameras.csv: camera_id,width,height,K00..K22,R00..R22,T0..T2
void write_cameras(std::ostream& out, std::span<const CameraModel> cameras);
std::vector<CameraModel> read_cameras(std::istream& in);

struct DatasetPaths {
  std::filesystem::path dir;
  std::filesystem::path frames() const { return dir / "frames.csv"; }
  std::filesystem::path observations() const { return dir / "observations.csv"; }
  std::filesystem::path cameras() const { return dir / "cameras.csv"; }
  std::filesystem::path config() const { return dir / "config.cfg"; }
};

struct DatasetCounts {
  std::size_t frames = 0;
  std::size_t observations = 0;
};

DatasetCounts save_dataset(const DatasetPaths& paths, const Dataset& dataset, const ExperimentConfig& config);
Dataset load_dataset(const DatasetPaths& paths, ExperimentConfig& config);

}  // namespace mom
