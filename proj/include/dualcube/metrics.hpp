#pragma once

#include <string>
#include <vector>

#include "dualcube/mask.hpp"

namespace dualcube {

struct MetricsReport {
  double mae = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;  // threshold 1.25
  double delta2 = 0.0;  // 1.25^2
  double delta3 = 0.0;  // 1.25^3
  Index count = 0;
};

struct MetricsOptions {
  bool natural_log = false;  // RMSE(log) in log10 unless set
  double pred_floor = 1e-3;  // meters, applied before log and ratio terms
};

/// Pixel-pooled metrics over any number of maps.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(MetricsOptions options = {}) : options_(options) {}

  void add(const TensorD& pred, const TensorD& gt, const ValidMask& mask);
  MetricsReport report() const;
  Index count() const { return count_; }

 private:
  MetricsOptions options_;
  Index count_ = 0;
  double abs_sum_ = 0.0;
  double sq_sum_ = 0.0;
  double log_sq_sum_ = 0.0;
  Index within_[3] = {0, 0, 0};
};

MetricsReport compute_metrics(const TensorD& pred, const TensorD& gt, const ValidMask& mask,
                              MetricsOptions options = {});

/// Mean |d(a) - d(b)| over horizontally or vertically adjacent pixel pairs (the
/// longitude wrap included) whose centers fall on different faces of the cube
/// rotated by `phi`. `phi = 0` gives the seams of the unrotated cubemap.
double seam_jump(const TensorD& depth, double phi = 0.0);

/// Seam pixel pairs as (first index, second index) within one H x W plane.
std::vector<std::pair<Index, Index>> seam_pairs(int height, int width, double phi = 0.0);

std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& dataset, const std::string& split, const MetricsReport& r);

}  // namespace dualcube
