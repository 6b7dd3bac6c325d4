#include "dualcube/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "dualcube/sphere_geom.hpp"

namespace dualcube {

void MetricsAccumulator::add(const TensorD& pred, const TensorD& gt, const ValidMask& mask) {
  if (pred.shape() != gt.shape() || mask.shape != pred.shape()) {
    throw DimensionError("compute_metrics: prediction, ground truth and mask disagree");
  }
  const double thresholds[3] = {1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25};
  for (Index i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const double g = gt[i];
    if (!(g > 0.0) || !std::isfinite(g)) throw NumericError("compute_metrics: non-positive ground truth on a valid pixel");
    const double p = pred[i];
    const double x = p - g;
    abs_sum_ += std::abs(x);
    sq_sum_ += x * x;
    const double pf = std::max(p, options_.pred_floor);
    const double l = options_.natural_log ? std::log(pf) - std::log(g) : std::log10(pf) - std::log10(g);
    log_sq_sum_ += l * l;
    const double ratio = std::max(pf / g, g / pf);
    for (int t = 0; t < 3; ++t) within_[t] += ratio < thresholds[t];
    ++count_;
  }
}

MetricsReport MetricsAccumulator::report() const {
  if (count_ == 0) throw NumericError("compute_metrics: no valid pixels");
  const double n = double(count_);
  MetricsReport r;
  r.count = count_;
  r.mae = abs_sum_ / n;
  r.rmse = std::sqrt(sq_sum_ / n);
  r.rmse_log = std::sqrt(log_sq_sum_ / n);
  r.delta1 = double(within_[0]) / n;
  r.delta2 = double(within_[1]) / n;
  r.delta3 = double(within_[2]) / n;
  return r;
}

MetricsReport compute_metrics(const TensorD& pred, const TensorD& gt, const ValidMask& mask,
                              MetricsOptions options) {
  MetricsAccumulator acc(options);
  acc.add(pred, gt, mask);
  return acc.report();
}

std::vector<std::pair<Index, Index>> seam_pairs(int height, int width, double phi) {
  const double shift = Rotation::radians(phi).phi / (2.0 * std::numbers::pi);
  std::vector<int> face(std::size_t(height) * width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double u = (x + 0.5) / width + shift;
      u -= std::floor(u);
      const double v = (y + 0.5) / height;
      face[std::size_t(y) * width + x] = static_cast<int>(dominant_face(pixel_to_direction(u, v)));
    }
  }
  std::vector<std::pair<Index, Index>> pairs;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Index i = Index(y) * width + x;
      const Index right = Index(y) * width + (x + 1) % width;
      if (face[i] != face[right]) pairs.emplace_back(i, right);
      if (y + 1 < height && face[i] != face[i + width]) pairs.emplace_back(i, i + width);
    }
  }
  return pairs;
}

double seam_jump(const TensorD& depth, double phi) {
  const Shape& s = depth.shape();
  const auto pairs = seam_pairs(s.h, s.w, phi);
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  Index count = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* p = depth.plane(n, c);
      for (const auto& [a, b] : pairs) total += std::abs(p[a] - p[b]);
      count += Index(pairs.size());
    }
  }
  return total / double(count);
}

std::string metrics_csv_header() { return "dataset,split,MAE,RMSE,RMSE_log,delta1,delta2,delta3,pixels"; }

std::string metrics_csv_row(const std::string& dataset, const std::string& split, const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%lld", r.mae, r.rmse, r.rmse_log, r.delta1,
                r.delta2, r.delta3, static_cast<long long>(r.count));
  return dataset + "," + split + "," + buf;
}

}  // namespace dualcube
