#pragma once

// Training, evaluation, inference and the ablation study.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dualcube/config.hpp"
#include "dualcube/dataset.hpp"
#include "dualcube/metrics.hpp"
#include "dualcube/model.hpp"

namespace dualcube {

/// Synthetic scenes from the config, or the directory layout under `data_dir`.
Dataset load_dataset(const TrainConfig& config);

struct TrainResult {
  int best_epoch = 0;
  double best_val_mae = 0.0;
  int last_epoch = 0;
  std::int64_t steps = 0;
  std::vector<double> val_mae;  // index = epoch, entry 0 is the untrained model
  std::string best_path;
  std::string last_path;
  std::string log_path;
};

/// Runs the two-phase schedule and writes under `config.out`:
///   train_log.csv   `step,term,value` lines
///   metrics.csv     one validation row per epoch
///   last.ck, best.ck
/// Checkpoints are written at the end of every epoch (and for the untrained
/// model), so a failure keeps the last completed epoch on disk.
TrainResult train(const TrainConfig& config, const Dataset& data, std::ostream* progress = nullptr);

struct EvalResult {
  MetricsReport metrics;
  double seam_final = 0.0;   // mean per-map seam jump of D_f at the unrotated cube seams
  double seam_coarse = 0.0;  // same for T^-1(D1)
  double seam_gt = 0.0;
  std::string csv_row;
};

/// Metrics of `model` over `samples`. With `oracle`, predictions are replaced by ground truth.
EvalResult evaluate(const DualCubeModel& model, const TrainConfig& config, const std::vector<Sample>& samples,
                    const std::string& dataset, const std::string& split, bool oracle = false);

/// Loads `checkpoint`, checks that it was produced by the architecture in
/// `config`, and evaluates one split.
EvalResult evaluate_checkpoint(const std::string& checkpoint, const TrainConfig& config, const Dataset& data,
                               const std::string& split, bool oracle = false);

DualCubeModel load_model(const std::string& checkpoint, const TrainConfig& config);

struct InferResult {
  std::string depth_pfm;
  std::string d1_pfm;
  std::string d2_pfm;  // empty for one branch
  std::string color_png;
  std::string range_txt;
  int height = 0;
  int width = 0;
};

/// Writes depth.pfm (D_f), d1.pfm, d2.pfm and a colorized depth.png with its
/// min/max in depth_range.txt. Without `auto_resize`, the image must be 2:1 with a
/// width the encoder and revision pooling divide evenly.
InferResult infer(const std::string& checkpoint, const TrainConfig& config, const std::string& image,
                  const std::string& out_dir, bool auto_resize = false);

/// Bilinear resize of an (N, C, H, W) tensor.
TensorD resize_bilinear(const TensorD& x, int height, int width);

struct AblationRow {
  std::string name;
  TrainConfig config;
  TrainResult train;
  EvalResult test;
};

/// The four configurations: one branch; two branches; two branches with
/// revision; two branches with revision and the gradient loss. Each trains under
/// `<config.out>/<name>` and is scored on the test split from its best checkpoint.
/// Writes `<config.out>/ablation.csv`.
std::vector<AblationRow> ablate(const TrainConfig& config, const Dataset& data, std::ostream* progress = nullptr);

std::vector<TrainConfig> ablation_configs(const TrainConfig& base);
extern const std::vector<std::string> kAblationNames;

}  // namespace dualcube
