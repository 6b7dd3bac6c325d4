#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dualcube/depth_io.hpp"
#include "dualcube/pipeline.hpp"
#include "test_support.hpp"

using namespace dualcube;
using dualcube::test::bit_identical;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dualcube_test_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrainConfig tiny(const fs::path& out) {
  TrainConfig c = parse_config(
      "width=64\ntrain_count=4\nval_count=2\ntest_count=2\nepochs=2\nlr_switch_epoch=1\nbatch_size=2\n"
      "stage_channels=2,3,3,3\ndecoder_channels=3,2,2,2\nbr_channels=2,2,2,2,2\n");
  c.out = out.string();
  return c;
}

// Validation MAE per epoch from a `step,term,value` log.
std::vector<double> logged_val_mae(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::vector<double> out;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    if (line.substr(a + 1, b - a - 1) == "val_MAE") out.push_back(std::stod(line.substr(b + 1)));
  }
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("zero learning rate leaves parameters at their initial values") {
  const fs::path dir = scratch("zero_lr");
  TrainConfig c = tiny(dir);
  c.epochs = 1;
  c.lr_phase1 = 0.0;
  c.lr_phase2 = 0.0;
  const Dataset data = load_dataset(c);
  const TrainResult r = train(c, data);
  CHECK(r.best_epoch == 0);
  CHECK(r.steps == 2);
  const DualCubeModel init(c.model(), c.seed);
  const DualCubeModel trained = load_model(r.last_path, c);
  REQUIRE(init.params().size() == trained.params().size());
  for (std::size_t i = 0; i < init.params().size(); ++i) {
    CHECK(bit_identical(init.params().entries()[i].second.value(), trained.params().entries()[i].second.value()));
  }
  CHECK(r.val_mae.size() == 2);
  CHECK(r.val_mae[0] == r.val_mae[1]);
}

TEST_CASE("identical runs write identical logs and checkpoints") {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  const Dataset data = load_dataset(tiny(a));
  train(tiny(a), data);
  train(tiny(b), data);
  for (const char* f : {"train_log.csv", "metrics.csv", "best.ck", "last.ck"}) {
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  }
  CHECK(slurp(a / "train_log.csv").find("0,val_MAE,") == 0);
  CHECK(slurp(a / "train_log.csv").find("\n1,loss,") != std::string::npos);
}

TEST_CASE("resuming from a checkpoint reproduces the uninterrupted run") {
  const fs::path full = scratch("resume_full");
  const fs::path part = scratch("resume_part");
  const Dataset data = load_dataset(tiny(full));
  TrainConfig c = tiny(full);
  c.epochs = 3;
  c.lr_switch_epoch = 2;
  train(c, data);

  TrainConfig first = c;
  first.out = part.string();
  first.stop_after_epoch = 1;
  const TrainResult stopped = train(first, data);
  CHECK(stopped.last_epoch == 1);
  // Damage the log past the checkpoint; resuming discards it.
  std::ofstream(part / "train_log.csv", std::ios::app) << "999,loss,1\n";

  TrainConfig second = c;
  second.out = part.string();
  second.resume = (part / "last.ck").string();
  const TrainResult resumed = train(second, data);
  CHECK(resumed.last_epoch == 3);
  CHECK(slurp(full / "train_log.csv") == slurp(part / "train_log.csv"));
  CHECK(slurp(full / "metrics.csv") == slurp(part / "metrics.csv"));
  CHECK(slurp(full / "last.ck") == slurp(part / "last.ck"));
  CHECK(slurp(full / "best.ck") == slurp(part / "best.ck"));
}

TEST_CASE("best checkpoint is the argmin of logged validation MAE") {
  const fs::path dir = scratch("best");
  TrainConfig c = tiny(dir);
  c.epochs = 4;
  c.lr_switch_epoch = 2;
  const TrainResult r = train(c, load_dataset(c));
  const std::vector<double> logged = logged_val_mae(r.log_path);
  REQUIRE(logged.size() == 5);
  const auto best = std::min_element(logged.begin(), logged.end()) - logged.begin();
  CHECK(r.best_epoch == best);
  const CheckpointData ck = load_checkpoint(r.best_path);
  CHECK(std::stoi(ck.header.at("epoch")) == best);
  CHECK(std::stod(ck.header.at("val_mae")) == logged[std::size_t(best)]);
  for (std::size_t i = 0; i < logged.size(); ++i) CHECK(logged[i] == r.val_mae[i]);
}

TEST_CASE("evaluation contracts") {
  const fs::path dir = scratch("eval");
  TrainConfig c = tiny(dir);
  c.epochs = 1;
  const Dataset data = load_dataset(c);
  const TrainResult r = train(c, data);

  const EvalResult perfect = evaluate_checkpoint(r.best_path, c, data, "test", true);
  CHECK(perfect.metrics.mae == 0.0);
  CHECK(perfect.metrics.rmse == 0.0);
  CHECK(perfect.metrics.delta1 == 1.0);
  CHECK(perfect.seam_final == perfect.seam_gt);
  CHECK(perfect.csv_row.rfind("synthetic,test,0.000000", 0) == 0);

  const EvalResult a = evaluate_checkpoint(r.best_path, c, data, "test");
  const EvalResult b = evaluate_checkpoint(r.best_path, c, data, "test");
  CHECK(a.csv_row == b.csv_row);
  CHECK(a.metrics.mae == b.metrics.mae);

  CHECK_THROWS_AS(evaluate_checkpoint(r.best_path, c, data, "holdout"), NumericError);
  TrainConfig other = c;
  other.stage_channels = {2, 3, 3, 4};
  CHECK_THROWS_AS(load_model(r.best_path, other), CheckpointError);
  TrainConfig single = c;
  single.enable_branch2 = false;
  single.enable_br = false;
  CHECK_THROWS_AS(evaluate_checkpoint(r.best_path, single, data, "test"), CheckpointError);
}

TEST_CASE("divergence aborts and keeps the last good checkpoint") {
  const fs::path dir = scratch("diverge");
  TrainConfig c = tiny(dir);
  c.lr_phase1 = 1e300;
  c.clip_norm = 0.0;
  CHECK_THROWS_AS(train(c, load_dataset(c)), NumericError);
  REQUIRE(fs::exists(dir / "last.ck"));
  CHECK(load_checkpoint((dir / "last.ck").string()).header.at("epoch") == "0");
}

TEST_CASE("inference writes the declared files deterministically") {
  const fs::path dir = scratch("infer");
  TrainConfig c = tiny(dir / "run");
  c.epochs = 1;
  const Dataset data = load_dataset(c);
  const TrainResult r = train(c, data);
  const std::string image = (dir / "pano.png").string();
  save_rgb_png(image, data.split("test")[0].rgb);

  const InferResult a = infer(r.best_path, c, image, (dir / "a").string());
  const InferResult b = infer(r.best_path, c, image, (dir / "b").string());
  CHECK(a.height == 32);
  CHECK(a.width == 64);
  for (const std::string& f : {a.depth_pfm, a.d1_pfm, a.d2_pfm}) {
    const TensorD d = load_pfm(f);
    CHECK(d.shape() == Shape{1, 1, 32, 64});
  }
  CHECK(slurp(a.depth_pfm) == slurp(b.depth_pfm));
  CHECK(slurp(a.d1_pfm) == slurp(b.d1_pfm));
  CHECK(slurp(a.d2_pfm) == slurp(b.d2_pfm));
  CHECK(fs::exists(a.color_png));
  const std::string range = slurp(a.range_txt);
  CHECK(range.find("min=") == 0);
  CHECK(range.find("\nmax=") != std::string::npos);

  const TensorD odd = resize_bilinear(data.split("test")[0].rgb, 30, 50);
  save_rgb_png((dir / "odd.png").string(), odd);
  CHECK_THROWS_AS(infer(r.best_path, c, (dir / "odd.png").string(), (dir / "c").string()), DimensionError);
  const InferResult resized = infer(r.best_path, c, (dir / "odd.png").string(), (dir / "c").string(), true);
  CHECK(resized.width % 32 == 0);
  CHECK(resized.width == 2 * resized.height);
}

TEST_CASE("bilinear resize reproduces constants and identity") {
  TensorD x(Shape{1, 2, 4, 8}, 3.25);
  CHECK((resize_bilinear(x, 7, 13).array() == 3.25).all());
  std::mt19937_64 rng(3);
  const TensorD y = dualcube::test::random_tensor(Shape{1, 1, 4, 8}, rng);
  CHECK(bit_identical(resize_bilinear(y, 4, 8), y));
}

TEST_CASE("ablation configurations toggle one axis at a time") {
  TrainConfig base;
  base.out = "abl";
  const auto cs = ablation_configs(base);
  REQUIRE(cs.size() == 4);
  CHECK(kAblationNames == std::vector<std::string>{"single", "dual", "dual_br", "dual_br_gl"});
  CHECK((!cs[0].enable_branch2 && !cs[0].enable_br && !cs[0].enable_gl));
  CHECK((cs[1].enable_branch2 && !cs[1].enable_br && !cs[1].enable_gl));
  CHECK((cs[2].enable_branch2 && cs[2].enable_br && !cs[2].enable_gl));
  CHECK((cs[3].enable_branch2 && cs[3].enable_br && cs[3].enable_gl));
  for (std::size_t i = 0; i < 4; ++i) CHECK(fs::path(cs[i].out) == fs::path("abl") / kAblationNames[i]);
}

TEST_CASE("a trained toy model beats the untrained one and revises seams") {
  const fs::path dir = scratch("toy");
  TrainConfig c = tiny(dir);
  c.stage_channels = {4, 8, 8, 8};
  c.decoder_channels = {8, 4, 4, 4};
  c.br_channels = {4, 4, 8, 8, 8};
  c.epochs = 16;
  c.lr_switch_epoch = 8;
  const Dataset data = load_dataset(c);
  const TrainResult r = train(c, data);
  const DualCubeModel untrained(c.model(), c.seed);
  const DualCubeModel trained = load_model(r.best_path, c);
  const EvalResult before = evaluate(untrained, c, data.split("train"), data.name, "train");
  const EvalResult after = evaluate(trained, c, data.split("train"), data.name, "train");
  CHECK(after.metrics.delta1 > before.metrics.delta1);
  CHECK(after.metrics.mae < before.metrics.mae);

  // D_f against the mean of the two aligned coarse depths on held-out scenes.
  NoGradGuard guard;
  double seam_final = 0;
  double seam_mean = 0;
  for (const Sample& s : data.split("test")) {
    const Prediction p = trained.forward(Var::constant(s.rgb));
    TensorD mean = p.d1.value();
    mean.array() = 0.5 * (p.d1.value().array() + p.d2.value().array());
    seam_final += seam_jump(p.final_depth.value());
    seam_mean += seam_jump(mean);
  }
  CHECK(seam_final < seam_mean);
}

}  // TEST_SUITE
