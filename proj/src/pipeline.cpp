#include "dualcube/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "dualcube/adam.hpp"
#include "dualcube/depth_io.hpp"
#include "dualcube/error.hpp"
#include "dualcube/losses.hpp"
#include "dualcube/metrics.hpp"

namespace dualcube {

namespace fs = std::filesystem;

const std::vector<std::string> kAblationNames{"single", "dual", "dual_br", "dual_br_gl"};

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw CheckpointError(std::string("checkpoint field ") + what + " is malformed");
  }
}

const std::string& header_field(const CheckpointData& ck, const std::string& key) {
  const auto it = ck.header.find(key);
  if (it == ck.header.end()) throw CheckpointError("checkpoint lacks header field " + key);
  return it->second;
}

// Run-control keys do not affect results and are kept out of checkpoints.
std::string stored_config(TrainConfig c) {
  c.out.clear();
  c.resume.clear();
  c.stop_after_epoch = 0;
  return c.to_text();
}

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
  std::uint64_t x = seed * 0x9e3779b97f4a7c15ULL + std::uint64_t(epoch) * 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 31;
  return x * 0x94d049bb133111ebULL;
}

// Panorama widths the model accepts are multiples of this.
int width_granularity(const ModelConfig& m) {
  const int cube = 4 << m.dcde.branch.stage_channels.size();
  const int revision = m.use_br ? 2 << m.br.channels.size() : 8;
  return std::lcm(std::lcm(cube, revision), 8);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(epoch_seed(seed, epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

struct RunState {
  int epoch = 0;
  std::int64_t step = 0;
  int best_epoch = 0;
  double best_val_mae = 0.0;
  std::vector<double> val_mae;
};

CheckpointData make_checkpoint(const TrainConfig& config, const DualCubeModel& model, const AdamState& adam,
                               const RunState& s) {
  CheckpointData ck;
  ck.header["format"] = "dualcube";
  ck.header["arch_hash"] = config.arch_hash();
  ck.header["config"] = stored_config(config);
  ck.header["epoch"] = std::to_string(s.epoch);
  ck.header["step"] = std::to_string(s.step);
  ck.header["val_mae"] = fmt(s.val_mae.back());
  ck.header["best_epoch"] = std::to_string(s.best_epoch);
  ck.header["best_val_mae"] = fmt(s.best_val_mae);
  std::string history;
  for (std::size_t i = 0; i < s.val_mae.size(); ++i) history += (i ? "," : "") + fmt(s.val_mae[i]);
  ck.header["val_history"] = history;
  ck.header["adam_step"] = std::to_string(adam.step);
  model.export_params(ck);
  const auto& entries = model.params().entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    ck.tensors.emplace_back("adam.m/" + entries[i].first, adam.first[i]);
    ck.tensors.emplace_back("adam.v/" + entries[i].first, adam.second[i]);
  }
  return ck;
}

void check_arch(const CheckpointData& ck, const TrainConfig& config) {
  const std::string& stored = header_field(ck, "arch_hash");
  if (stored != config.arch_hash()) {
    throw CheckpointError("checkpoint architecture " + stored + " does not match config " + config.arch_hash());
  }
}

RunState restore(const CheckpointData& ck, DualCubeModel& model, AdamState& adam) {
  model.import_params(ck);
  const auto& entries = model.params().entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const TensorD* m = ck.find("adam.m/" + entries[i].first);
    const TensorD* v = ck.find("adam.v/" + entries[i].first);
    if (!m || !v || m->shape() != entries[i].second.shape() || v->shape() != entries[i].second.shape()) {
      throw CheckpointError("checkpoint lacks optimizer state for " + entries[i].first);
    }
    adam.first[i] = *m;
    adam.second[i] = *v;
  }
  RunState s;
  s.epoch = std::stoi(header_field(ck, "epoch"));
  s.step = std::stoll(header_field(ck, "step"));
  s.best_epoch = std::stoi(header_field(ck, "best_epoch"));
  s.best_val_mae = parse_double(header_field(ck, "best_val_mae"), "best_val_mae");
  adam.step = std::stoll(header_field(ck, "adam_step"));
  std::stringstream ss(header_field(ck, "val_history"));
  std::string item;
  while (std::getline(ss, item, ',')) s.val_mae.push_back(parse_double(item, "val_history"));
  if (s.val_mae.size() != std::size_t(s.epoch) + 1) throw CheckpointError("checkpoint validation history is inconsistent");
  return s;
}

// Keeps log lines up to and including `step`; used when resuming.
void truncate_log(const std::string& path, std::int64_t step) {
  std::ifstream in(path);
  if (!in) return;
  std::vector<std::string> kept;
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    if (std::stoll(line.substr(0, comma)) <= step) kept.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : kept) out << l << "\n";
}

void log_term(std::ostream& log, std::int64_t step, const char* term, double value) {
  log << step << "," << term << "," << fmt(value) << "\n";
}

}  // namespace

Dataset load_dataset(const TrainConfig& config) {
  if (config.data_dir.empty()) return make_synthetic_dataset(config.synthetic());
  return load_directory_dataset(config.data_dir, config.dataset_name);
}

EvalResult evaluate(const DualCubeModel& model, const TrainConfig& config, const std::vector<Sample>& samples,
                    const std::string& dataset, const std::string& split, bool oracle) {
  if (samples.empty()) throw NumericError("evaluation split '" + split + "' is empty");
  NoGradGuard no_grad;
  MetricsAccumulator acc(config.metrics());
  EvalResult r;
  const std::size_t batch = std::size_t(config.batch_size);
  for (std::size_t first = 0; first < samples.size(); first += batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = first; i < std::min(samples.size(), first + batch); ++i) idx.push_back(i);
    const Batch b = make_batch(samples, idx);
    TensorD final_depth;
    TensorD coarse;
    if (oracle) {
      final_depth = b.depth;
      coarse = b.depth;
    } else {
      const Prediction p = model.forward(Var::constant(b.rgb));
      final_depth = p.final_depth.value();
      coarse = p.d1.value();
    }
    acc.add(final_depth, b.depth, b.mask);
    for (int n = 0; n < b.size(); ++n) {
      r.seam_final += seam_jump(final_depth.slice(n, 1), 0.0);
      r.seam_coarse += seam_jump(coarse.slice(n, 1), 0.0);
      r.seam_gt += seam_jump(b.depth.slice(n, 1), 0.0);
    }
  }
  const double count = double(samples.size());
  r.seam_final /= count;
  r.seam_coarse /= count;
  r.seam_gt /= count;
  r.metrics = acc.report();
  r.csv_row = metrics_csv_row(dataset, split, r.metrics);
  return r;
}

DualCubeModel load_model(const std::string& checkpoint, const TrainConfig& config) {
  const CheckpointData ck = load_checkpoint(checkpoint);
  check_arch(ck, config);
  DualCubeModel model(config.model(), config.seed);
  model.import_params(ck);
  return model;
}

EvalResult evaluate_checkpoint(const std::string& checkpoint, const TrainConfig& config, const Dataset& data,
                               const std::string& split, bool oracle) {
  const DualCubeModel model = load_model(checkpoint, config);
  return evaluate(model, config, data.split(split), data.name, split, oracle);
}

TrainResult train(const TrainConfig& config, const Dataset& data, std::ostream* progress) {
  config.validate();
  const auto& train_set = data.split("train");
  const auto& val_set = data.split("val");
  if (train_set.empty()) throw DataError("training split is empty");
  if (val_set.empty()) throw DataError("validation split is empty");

  fs::create_directories(config.out);
  TrainResult result;
  result.best_path = (fs::path(config.out) / "best.ck").string();
  result.last_path = (fs::path(config.out) / "last.ck").string();
  result.log_path = (fs::path(config.out) / "train_log.csv").string();
  const std::string metrics_path = (fs::path(config.out) / "metrics.csv").string();

  DualCubeModel model(config.model(), config.seed);
  AdamState adam = make_adam_state(model.params());
  const LossWeights weights = config.loss_weights();
  const std::optional<double> fixed_c = config.berhu_c > 0.0 ? std::optional<double>(config.berhu_c) : std::nullopt;

  RunState state;
  std::ofstream log;
  std::ofstream metrics_csv;
  auto validate_epoch = [&](int epoch) {
    const EvalResult ev = evaluate(model, config, val_set, data.name, "val", false);
    if (!std::isfinite(ev.metrics.mae) || !std::isfinite(ev.metrics.rmse)) {
      log.flush();
      throw NumericError("non-finite validation error after epoch " + std::to_string(epoch) +
                         "; last checkpoint kept at " + result.last_path);
    }
    state.val_mae.push_back(ev.metrics.mae);
    log_term(log, state.step, "val_MAE", ev.metrics.mae);
    log_term(log, state.step, "val_RMSE", ev.metrics.rmse);
    log_term(log, state.step, "val_RMSE_log", ev.metrics.rmse_log);
    log_term(log, state.step, "val_delta1", ev.metrics.delta1);
    log_term(log, state.step, "val_delta2", ev.metrics.delta2);
    log_term(log, state.step, "val_delta3", ev.metrics.delta3);
    metrics_csv << metrics_csv_row(data.name, "val_epoch" + std::to_string(epoch), ev.metrics) << "\n";
    const bool improved = epoch == 0 || ev.metrics.mae < state.best_val_mae;
    if (improved) {
      state.best_val_mae = ev.metrics.mae;
      state.best_epoch = epoch;
    }
    state.epoch = epoch;
    log.flush();
    metrics_csv.flush();
    const CheckpointData ck = make_checkpoint(config, model, adam, state);
    save_checkpoint(result.last_path, ck);
    if (improved) save_checkpoint(result.best_path, ck);
    if (progress) {
      *progress << "epoch " << epoch << " val MAE " << ev.metrics.mae << (improved ? " (best)" : "") << std::endl;
    }
  };

  int start_epoch = 1;
  if (!config.resume.empty()) {
    const CheckpointData ck = load_checkpoint(config.resume);
    check_arch(ck, config);
    state = restore(ck, model, adam);
    start_epoch = state.epoch + 1;
    truncate_log(result.log_path, state.step);
    log.open(result.log_path, std::ios::app);
    metrics_csv.open(metrics_path, std::ios::app);
    if (fs::absolute(config.resume) != fs::absolute(result.last_path)) save_checkpoint(result.last_path, ck);
  } else {
    log.open(result.log_path, std::ios::trunc);
    metrics_csv.open(metrics_path, std::ios::trunc);
    metrics_csv << metrics_csv_header() << "\n";
    validate_epoch(0);
  }
  if (!log || !metrics_csv) throw DataError("cannot write logs under " + config.out);

  for (int epoch = start_epoch; epoch <= config.epochs; ++epoch) {
    const double lr = config.lr_for_epoch(epoch);
    const auto order = epoch_order(train_set.size(), config.seed, epoch);
    for (std::size_t first = 0; first < order.size(); first += std::size_t(config.batch_size)) {
      const std::size_t last = std::min(order.size(), first + std::size_t(config.batch_size));
      const Batch b = make_batch(train_set, std::vector<std::size_t>(order.begin() + first, order.begin() + last));
      ++state.step;
      const Prediction p = model.forward(Var::constant(b.rgb));
      const LossTerms terms = total_loss_equi(p.d1, p.d2, p.final_depth, b.depth, b.mask, weights, fixed_c);
      const double loss = terms.total.item();
      if (!std::isfinite(loss)) {
        log.flush();
        throw NumericError("non-finite loss at step " + std::to_string(state.step) + "; last checkpoint kept at " +
                           result.last_path);
      }
      model.params().zero_grad();
      backward(terms.total);
      const double norm = config.clip_norm > 0.0 ? clip_grad_norm(model.params(), config.clip_norm)
                                                 : grad_norm(model.params());
      adam_step(model.params(), adam, lr);
      log_term(log, state.step, "loss", loss);
      log_term(log, state.step, "berhu1", terms.berhu1);
      if (terms.has_branch2) log_term(log, state.step, "berhu2", terms.berhu2);
      log_term(log, state.step, "berhu_final", terms.berhu_final);
      if (weights.gradient != 0.0) log_term(log, state.step, "gradient", terms.gradient);
      log_term(log, state.step, "grad_norm", norm);
      if (config.clip_norm > 0.0 && norm > config.clip_norm) log_term(log, state.step, "grad_clipped", norm);
      log_term(log, state.step, "lr", lr);
    }
    validate_epoch(epoch);
    if (config.stop_after_epoch > 0 && epoch >= config.stop_after_epoch) break;
  }

  result.best_epoch = state.best_epoch;
  result.best_val_mae = state.best_val_mae;
  result.last_epoch = state.epoch;
  result.steps = state.step;
  result.val_mae = state.val_mae;
  return result;
}

TensorD resize_bilinear(const TensorD& x, int height, int width) {
  const Shape& s = x.shape();
  if (height <= 0 || width <= 0) throw DimensionError("resize_bilinear: target extents must be positive");
  TensorD out(Shape{s.n, s.c, height, width});
  for (int y = 0; y < height; ++y) {
    const double sy = std::clamp((y + 0.5) * s.h / height - 0.5, 0.0, double(s.h - 1));
    const int y0 = int(std::floor(sy));
    const int y1 = std::min(y0 + 1, s.h - 1);
    const double fy = sy - y0;
    for (int xo = 0; xo < width; ++xo) {
      const double sx = std::clamp((xo + 0.5) * s.w / width - 0.5, 0.0, double(s.w - 1));
      const int x0 = int(std::floor(sx));
      const int x1 = std::min(x0 + 1, s.w - 1);
      const double fx = sx - x0;
      for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
          const double top = (1 - fx) * x(n, c, y0, x0) + fx * x(n, c, y0, x1);
          const double bottom = (1 - fx) * x(n, c, y1, x0) + fx * x(n, c, y1, x1);
          out(n, c, y, xo) = (1 - fy) * top + fy * bottom;
        }
      }
    }
  }
  return out;
}

InferResult infer(const std::string& checkpoint, const TrainConfig& config, const std::string& image,
                  const std::string& out_dir, bool auto_resize) {
  TensorD rgb = load_rgb_png(image);
  const Shape& s = rgb.shape();
  const int step = width_granularity(config.model());
  if (s.w % step != 0 || s.h * 2 != s.w) {
    if (!auto_resize) {
      throw DimensionError("infer: image must be 2:1 with width divisible by " + std::to_string(step) + ", got " +
                           s.str() + " (enable auto-resize to rescale)");
    }
    const int width = std::max(step, int(std::lround(double(s.w) / step)) * step);
    rgb = resize_bilinear(rgb, width / 2, width);
  }
  const DualCubeModel model = load_model(checkpoint, config);
  Prediction p;
  {
    NoGradGuard no_grad;
    p = model.forward(Var::constant(rgb));
  }
  fs::create_directories(out_dir);
  InferResult r;
  r.height = rgb.shape().h;
  r.width = rgb.shape().w;
  r.depth_pfm = (fs::path(out_dir) / "depth.pfm").string();
  r.d1_pfm = (fs::path(out_dir) / "d1.pfm").string();
  r.color_png = (fs::path(out_dir) / "depth.png").string();
  r.range_txt = (fs::path(out_dir) / "depth_range.txt").string();
  save_pfm(r.depth_pfm, p.final_depth.value());
  save_pfm(r.d1_pfm, p.d1.value());
  if (p.d2.defined()) {
    r.d2_pfm = (fs::path(out_dir) / "d2.pfm").string();
    save_pfm(r.d2_pfm, p.d2.value());
  }
  double lo = 0.0;
  double hi = 0.0;
  save_colorized_depth(r.color_png, p.final_depth.value(), &lo, &hi);
  std::ofstream range(r.range_txt, std::ios::trunc);
  range << "min=" << fmt(lo) << "\nmax=" << fmt(hi) << "\n";
  if (!range) throw DataError("cannot write " + r.range_txt);
  return r;
}

std::vector<TrainConfig> ablation_configs(const TrainConfig& base) {
  std::vector<TrainConfig> out(4, base);
  out[0].enable_branch2 = false;
  out[0].enable_br = false;
  out[0].enable_gl = false;
  out[1].enable_branch2 = true;
  out[1].enable_br = false;
  out[1].enable_gl = false;
  out[2].enable_branch2 = true;
  out[2].enable_br = true;
  out[2].enable_gl = false;
  out[3].enable_branch2 = true;
  out[3].enable_br = true;
  out[3].enable_gl = true;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].out = (fs::path(base.out) / kAblationNames[i]).string();
    out[i].resume.clear();
    out[i].stop_after_epoch = 0;
  }
  return out;
}

std::vector<AblationRow> ablate(const TrainConfig& config, const Dataset& data, std::ostream* progress) {
  std::vector<AblationRow> rows;
  const auto configs = ablation_configs(config);
  fs::create_directories(config.out);
  std::ofstream csv(fs::path(config.out) / "ablation.csv", std::ios::trunc);
  if (!csv) throw DataError("cannot write ablation table under " + config.out);
  csv << "config,branch2,br,gl," << metrics_csv_header() << ",seam_final,seam_coarse,seam_gt,best_epoch\n";
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (progress) *progress << "ablation " << kAblationNames[i] << std::endl;
    AblationRow row;
    row.name = kAblationNames[i];
    row.config = configs[i];
    row.train = train(configs[i], data, progress);
    row.test = evaluate_checkpoint(row.train.best_path, configs[i], data, "test");
    csv << row.name << "," << int(row.config.enable_branch2) << "," << int(row.config.enable_br) << ","
        << int(row.config.enable_gl) << "," << row.test.csv_row << "," << fmt(row.test.seam_final) << ","
        << fmt(row.test.seam_coarse) << "," << fmt(row.test.seam_gt) << "," << row.train.best_epoch << "\n";
    csv.flush();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dualcube
