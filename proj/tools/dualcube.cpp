// dualcube command-line front end.
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "dualcube/dataset.hpp"
#include "dualcube/error.hpp"
#include "dualcube/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
};

dualcube::TrainConfig resolve(const Common& c) {
  dualcube::TrainConfig cfg;
  if (!c.config_path.empty()) cfg = dualcube::load_config(c.config_path);
  if (c.seed_set) cfg.seed = c.seed;
  if (!c.out.empty()) cfg.out = c.out;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "key=value configuration file");
  sub->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_set = true; }, "training seed");
  sub->add_option("--out", c.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-cubemap omnidirectional depth estimation"};
  app.require_subcommand(1);

  Common common;
  auto* synth = app.add_subcommand("synth", "render the synthetic benchmark to a dataset directory");
  auto* train = app.add_subcommand("train", "train a model");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  auto* infer = app.add_subcommand("infer", "predict depth for one panorama");
  auto* ablate = app.add_subcommand("ablate", "train and score the four ablation configurations");
  for (auto* sub : {synth, train, eval, infer, ablate}) add_common(sub, common);

  std::string checkpoint;
  std::string split = "test";
  bool oracle = false;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--split", split, "train, val or test");
  eval->add_flag("--oracle", oracle, "score ground truth as the prediction");

  std::string image;
  bool auto_resize = false;
  infer->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  infer->add_option("--image", image, "equirectangular RGB PNG")->required();
  infer->add_flag("--auto-resize", auto_resize, "rescale to a valid 2:1 size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    const dualcube::TrainConfig cfg = resolve(common);
    if (synth->parsed()) {
      const dualcube::Dataset data = dualcube::make_synthetic_dataset(cfg.synthetic());
      dualcube::save_directory_dataset(cfg.out, data);
      std::cout << "wrote " << data.split("train").size() + data.split("val").size() + data.split("test").size()
                << " scenes to " << cfg.out << "\n";
    } else if (train->parsed()) {
      const dualcube::Dataset data = dualcube::load_dataset(cfg);
      const auto r = dualcube::train(cfg, data, &std::cerr);
      std::cout << "best epoch " << r.best_epoch << " val MAE " << r.best_val_mae << "\n" << r.best_path << "\n";
    } else if (eval->parsed()) {
      const dualcube::Dataset data = dualcube::load_dataset(cfg);
      const auto r = dualcube::evaluate_checkpoint(checkpoint, cfg, data, split, oracle);
      std::cout << dualcube::metrics_csv_header() << "\n" << r.csv_row << "\n";
    } else if (infer->parsed()) {
      const auto r = dualcube::infer(checkpoint, cfg, image, cfg.out, auto_resize);
      std::cout << r.depth_pfm << "\n" << r.d1_pfm << "\n";
      if (!r.d2_pfm.empty()) std::cout << r.d2_pfm << "\n";
      std::cout << r.color_png << "\n" << r.range_txt << "\n";
    } else if (ablate->parsed()) {
      const dualcube::Dataset data = dualcube::load_dataset(cfg);
      const auto rows = dualcube::ablate(cfg, data, &std::cerr);
      std::cout << "config,MAE,seam_final,seam_coarse\n";
      for (const auto& r : rows) {
        std::cout << r.name << "," << r.test.metrics.mae << "," << r.test.seam_final << "," << r.test.seam_coarse
                  << "\n";
      }
    }
  } catch (const dualcube::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const dualcube::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    // Data, format, dimension, checkpoint and I/O failures.
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
