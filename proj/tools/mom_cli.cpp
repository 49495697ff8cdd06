#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mom/config.hpp"
#include "mom/dataset_io.hpp"
#include "mom/error.hpp"
#include "mom/experiments.hpp"

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<std::string> sets;
};

void apply_overrides(mom::ExperimentConfig& cfg, const Globals& g) {
  if (!g.config.empty()) {
    std::ifstream in(g.config);
    if (!in) throw mom::Error(mom::ErrorKind::IOFailure, "cannot open config " + g.config);
    mom::apply_config(cfg, in);
  }
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw mom::Error(mom::ErrorKind::InvalidConfig, "--set expects key=value");
    mom::set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
}

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw mom::Error(mom::ErrorKind::IOFailure, "cannot write " + p.string());
  return out;
}

mom::Dataset load(const std::string& dir, mom::ExperimentConfig& cfg, const Globals& g) {
  mom::Dataset data = mom::load_dataset(mom::DatasetPaths{dir}, cfg);
  apply_overrides(cfg, g);
  return data;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      levels.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw mom::Error(mom::ErrorKind::ParseError, "bad level '" + item + "'");
    }
  }
  if (levels.empty()) throw mom::Error(mom::ErrorKind::InvalidArgument, "no sweep levels given");
  return levels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-of-Means human localization: simulation, training and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Config file (key=value lines) applied over defaults or the dataset config");
  app.add_option("--seed", g.seed, "Override the experiment seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.sets, "Extra key=value config override (repeatable)");

  std::string dataset = "data";
  std::string mode = "estimated";
  std::string checkpoint;
  bool no_decoder = false;
  std::string axis = "jitter";
  std::string levels = "0,4,8";

  auto* gen = app.add_subcommand("generate", "Simulate a multi-camera walking dataset into --out");
  auto* base = app.add_subcommand("baseline", "Evaluate PnP + triangulation on the test split");
  base->add_option("--dataset", dataset, "Dataset directory")->required();
  base->add_option("--mode", mode, "known | estimated projection matrices");
  auto* tr = app.add_subcommand("train", "Train the MoM network; writes checkpoint.txt and loss.csv");
  tr->add_option("--dataset", dataset, "Dataset directory")->required();
  tr->add_flag("--no-decoder", no_decoder, "Train with the localization loss only");
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint; writes report.csv and trajectory.csv");
  ev->add_option("--dataset", dataset, "Dataset directory")->required();
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  auto* sw = app.add_subcommand("sweep", "Regenerate, train and evaluate per level; writes sweep_<axis>.csv");
  sw->add_option("--axis", axis, "jitter | noise | subjects");
  sw->add_option("--levels", levels, "Comma-separated levels");

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out_dir = g.out;
    const auto t0 = std::chrono::steady_clock::now();
    if (gen->parsed()) {
      mom::ExperimentConfig cfg;
      apply_overrides(cfg, g);
      const mom::Dataset data = mom::generate_dataset(cfg);
      const auto counts = mom::save_dataset(mom::DatasetPaths{out_dir}, data, cfg);
      std::cout << "frames " << counts.frames << "\nobservations " << counts.observations << "\n";
    } else if (base->parsed()) {
      mom::ExperimentConfig cfg;
      const mom::Dataset data = load(dataset, cfg, g);
      const auto m = mom::parse_baseline_mode(mode);
      const auto result = mom::run_baseline(data, cfg, m);
      const std::string stem = m == mom::BaselineMode::KnownP ? "baseline_known" : "baseline_estimated";
      {
        auto out = open_out(out_dir / (stem + ".csv"));
        mom::write_reports(out, result.reports);
      }
      {
        auto out = open_out(out_dir / (stem + "_trajectory.csv"));
        mom::write_trajectories(out, mom::test_segments(data, cfg), result.trajectories);
      }
      std::cout << "failed_frames " << result.failed_frames << "\n";
      mom::write_reports(std::cout, result.reports);
    } else if (tr->parsed()) {
      mom::ExperimentConfig cfg;
      const mom::Dataset data = load(dataset, cfg, g);
      if (no_decoder) cfg.loss.decoder = false;
      const auto result = mom::run_train(data, cfg);
      {
        auto out = open_out(out_dir / "checkpoint.txt");
        mom::write_checkpoint(out, result.params, mom::checkpoint_meta(cfg, result));
      }
      {
        auto out = open_out(out_dir / "loss.csv");
        mom::write_loss_history(out, result.history);
      }
      const double secs = seconds_since(t0);
      std::cerr << "steps " << result.steps << ", " << secs << " s";
      if (secs > 0) std::cerr << ", " << static_cast<double>(result.steps) * cfg.batch_size / secs << " samples/s";
      std::cerr << "\n";
    } else if (ev->parsed()) {
      mom::ExperimentConfig cfg;
      const mom::Dataset data = load(dataset, cfg, g);
      std::ifstream in(checkpoint, std::ios::binary);
      if (!in) throw mom::Error(mom::ErrorKind::IOFailure, "cannot open checkpoint " + checkpoint);
      mom::CheckpointMeta meta;
      const auto params = mom::read_checkpoint(in, meta);
      const auto result = mom::run_eval(data, cfg, params, meta);
      {
        auto out = open_out(out_dir / "report.csv");
        mom::write_reports(out, result.reports);
      }
      {
        auto out = open_out(out_dir / "trajectory.csv");
        mom::write_trajectories(out, mom::test_segments(data, cfg), result.trajectories);
      }
      mom::write_reports(std::cout, result.reports);
    } else if (sw->parsed()) {
      mom::ExperimentConfig cfg;
      apply_overrides(cfg, g);
      const auto a = mom::parse_sweep_axis(axis);
      const auto lv = parse_levels(levels);
      const auto rows = mom::run_sweep(cfg, a, lv);
      auto out = open_out(out_dir / ("sweep_" + std::string(mom::to_string(a)) + ".csv"));
      mom::write_sweep(out, rows);
    }
  } catch (const mom::Error& e) {
    std::cerr << "error (" << mom::to_string(e.kind()) << "): " << e.what() << "\n";
    return 2;
  }
  return 0;
}
