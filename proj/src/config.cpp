#include "dualcube/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "dualcube/error.hpp"

namespace dualcube {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("bad value for " + key + ": '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

std::vector<int> parse_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  if (v.empty()) return out;
  std::stringstream ss(v + ",");
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty list entry for " + key + ": '" + v + "'");
    out.push_back(parse_number<int>(item, key));
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto integer = [&](const char* k, int TrainConfig::*m) {
      t[k] = [m](TrainConfig& c, const std::string& key, const std::string& v) { c.*m = parse_number<int>(v, key); };
    };
    auto u64 = [&](const char* k, std::uint64_t TrainConfig::*m) {
      t[k] = [m](TrainConfig& c, const std::string& key, const std::string& v) {
        c.*m = parse_number<std::uint64_t>(v, key);
      };
    };
    auto real = [&](const char* k, double TrainConfig::*m) {
      t[k] = [m](TrainConfig& c, const std::string& key, const std::string& v) {
        c.*m = parse_number<double>(v, key);
      };
    };
    auto flag = [&](const char* k, bool TrainConfig::*m) {
      t[k] = [m](TrainConfig& c, const std::string& key, const std::string& v) { c.*m = parse_bool(v, key); };
    };
    auto text = [&](const char* k, std::string TrainConfig::*m) {
      t[k] = [m](TrainConfig& c, const std::string&, const std::string& v) { c.*m = v; };
    };
    auto list = [&](const char* k, std::vector<int> TrainConfig::*m) {
      t[k] = [m](TrainConfig& c, const std::string& key, const std::string& v) { c.*m = parse_list(v, key); };
    };
    auto weight = [&](const char* k, double LossWeights::*m) {
      t[k] = [m](TrainConfig& c, const std::string& key, const std::string& v) {
        c.weights.*m = parse_number<double>(v, key);
      };
    };
    integer("width", &TrainConfig::width);
    integer("train_count", &TrainConfig::train_count);
    integer("val_count", &TrainConfig::val_count);
    integer("test_count", &TrainConfig::test_count);
    u64("data_seed", &TrainConfig::data_seed);
    text("data_dir", &TrainConfig::data_dir);
    text("dataset_name", &TrainConfig::dataset_name);
    integer("epochs", &TrainConfig::epochs);
    integer("lr_switch_epoch", &TrainConfig::lr_switch_epoch);
    real("lr_phase1", &TrainConfig::lr_phase1);
    real("lr_phase2", &TrainConfig::lr_phase2);
    integer("batch_size", &TrainConfig::batch_size);
    u64("seed", &TrainConfig::seed);
    real("clip_norm", &TrainConfig::clip_norm);
    flag("enable_branch2", &TrainConfig::enable_branch2);
    flag("enable_br", &TrainConfig::enable_br);
    flag("enable_gl", &TrainConfig::enable_gl);
    weight("weight_branch1", &LossWeights::branch1);
    weight("weight_branch2", &LossWeights::branch2);
    weight("weight_final", &LossWeights::final_depth);
    weight("weight_gradient", &LossWeights::gradient);
    real("berhu_c", &TrainConfig::berhu_c);
    list("stage_channels", &TrainConfig::stage_channels);
    list("decoder_channels", &TrainConfig::decoder_channels);
    list("fuse_stages", &TrainConfig::fuse_stages);
    list("br_channels", &TrainConfig::br_channels);
    flag("br_skips", &TrainConfig::br_skips);
    integer("br_deconv_kernel", &TrainConfig::br_deconv_kernel);
    real("phi_deg", &TrainConfig::phi_deg);
    real("depth_scale", &TrainConfig::depth_scale);
    real("head_init_depth", &TrainConfig::head_init_depth);
    flag("natural_log", &TrainConfig::natural_log);
    text("out", &TrainConfig::out);
    text("resume", &TrainConfig::resume);
    integer("stop_after_epoch", &TrainConfig::stop_after_epoch);
    return t;
  }();
  return table;
}

}  // namespace

void TrainConfig::validate() const {
  if (width <= 0 || width % 8 != 0) throw ConfigError("width must be a positive multiple of 8");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (lr_switch_epoch < 0) throw ConfigError("lr_switch_epoch must be non-negative");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(lr_phase1 >= 0.0) || !(lr_phase2 >= 0.0)) throw ConfigError("learning rates must be non-negative");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be non-negative (0 disables clipping)");
  if (train_count < 0 || val_count < 0 || test_count < 0) throw ConfigError("split counts must be non-negative");
  if (!std::isfinite(phi_deg)) throw ConfigError("phi_deg must be finite");
  if (!(depth_scale > 0.0)) throw ConfigError("depth_scale must be positive");
  if (!(head_init_depth >= 0.0)) throw ConfigError("head_init_depth must be non-negative");
  if (stop_after_epoch < 0) throw ConfigError("stop_after_epoch must be non-negative");
  for (const int f : fuse_stages) {
    if (f != 0 && f != 1) throw ConfigError("fuse_stages entries must be 0 or 1");
  }
  if (enable_br && !enable_branch2) throw ConfigError("enable_br requires enable_branch2");
  if (weights.branch1 < 0 || weights.branch2 < 0 || weights.final_depth < 0 || weights.gradient < 0) {
    throw ConfigError("loss weights must be non-negative");
  }
  const ModelConfig m = model();
  m.dcde.validate();
  if (m.use_br) m.br.validate();
}

ModelConfig TrainConfig::model() const {
  ModelConfig m;
  m.dcde.branch.stage_channels = stage_channels;
  m.dcde.branch.decoder_channels = decoder_channels;
  m.dcde.branch.depth_scale = depth_scale;
  m.dcde.branch.head_init_depth = head_init_depth;
  m.br.head_init_depth = head_init_depth;
  m.dcde.dual = enable_branch2;
  m.dcde.fuse.assign(fuse_stages.begin(), fuse_stages.end());
  m.dcde.phi = phi_deg * std::numbers::pi / 180.0;
  m.use_br = enable_br;
  m.br.channels = br_channels;
  m.br.skips = br_skips;
  m.br.deconv_kernel = br_deconv_kernel;
  return m;
}

LossWeights TrainConfig::loss_weights() const {
  LossWeights w = weights;
  if (!enable_gl) w.gradient = 0.0;
  return w;
}

SyntheticOptions TrainConfig::synthetic() const { return {width, train_count, val_count, test_count, data_seed}; }

MetricsOptions TrainConfig::metrics() const {
  MetricsOptions o;
  o.natural_log = natural_log;
  return o;
}

double TrainConfig::lr_for_epoch(int epoch) const { return epoch <= lr_switch_epoch ? lr_phase1 : lr_phase2; }

std::string TrainConfig::arch_string() const {
  std::string s;
  s += "enable_branch2=" + std::to_string(int(enable_branch2)) + "\n";
  s += "enable_br=" + std::to_string(int(enable_br)) + "\n";
  s += "stage_channels=" + join(stage_channels) + "\n";
  s += "decoder_channels=" + join(decoder_channels) + "\n";
  s += "fuse_stages=" + join(fuse_stages) + "\n";
  if (enable_br) {
    s += "br_channels=" + join(br_channels) + "\n";
    s += "br_skips=" + std::to_string(int(br_skips)) + "\n";
    s += "br_deconv_kernel=" + std::to_string(br_deconv_kernel) + "\n";
  }
  s += "phi_deg=" + fmt(phi_deg) + "\n";
  s += "depth_scale=" + fmt(depth_scale) + "\n";
  return s;
}

std::string TrainConfig::arch_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : arch_string()) h = (h ^ ch) * 1099511628211ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string TrainConfig::to_text() const {
  std::ostringstream o;
  o << "width=" << width << "\ntrain_count=" << train_count << "\nval_count=" << val_count
    << "\ntest_count=" << test_count << "\ndata_seed=" << data_seed << "\ndata_dir=" << data_dir
    << "\ndataset_name=" << dataset_name << "\nepochs=" << epochs << "\nlr_switch_epoch=" << lr_switch_epoch
    << "\nlr_phase1=" << fmt(lr_phase1) << "\nlr_phase2=" << fmt(lr_phase2) << "\nbatch_size=" << batch_size
    << "\nseed=" << seed << "\nclip_norm=" << fmt(clip_norm) << "\nenable_branch2=" << int(enable_branch2)
    << "\nenable_br=" << int(enable_br) << "\nenable_gl=" << int(enable_gl)
    << "\nweight_branch1=" << fmt(weights.branch1) << "\nweight_branch2=" << fmt(weights.branch2)
    << "\nweight_final=" << fmt(weights.final_depth) << "\nweight_gradient=" << fmt(weights.gradient)
    << "\nberhu_c=" << fmt(berhu_c) << "\nstage_channels=" << join(stage_channels)
    << "\ndecoder_channels=" << join(decoder_channels) << "\nfuse_stages=" << join(fuse_stages)
    << "\nbr_channels=" << join(br_channels) << "\nbr_skips=" << int(br_skips)
    << "\nbr_deconv_kernel=" << br_deconv_kernel << "\nphi_deg=" << fmt(phi_deg)
    << "\ndepth_scale=" << fmt(depth_scale) << "\nhead_init_depth=" << fmt(head_init_depth)
    << "\nnatural_log=" << int(natural_log) << "\nout=" << out
    << "\nresume=" << resume << "\nstop_after_epoch=" << stop_after_epoch << "\n";
  return o.str();
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("line " + std::to_string(number) + ": unknown key '" + key + "'");
    it->second(base, key, value);
  }
  return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace dualcube
