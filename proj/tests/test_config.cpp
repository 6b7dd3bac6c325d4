#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dualcube/config.hpp"

using namespace dualcube;

TEST_SUITE("config") {

TEST_CASE("defaults follow the published schedule") {
  const TrainConfig c;
  CHECK(c.batch_size == 4);
  CHECK(c.epochs == 40);
  CHECK(c.lr_for_epoch(1) == 5e-4);
  CHECK(c.lr_for_epoch(20) == 5e-4);
  CHECK(c.lr_for_epoch(21) == 1e-4);
  CHECK(c.lr_for_epoch(40) == 1e-4);
  CHECK(c.phi_deg == 45.0);
  CHECK(c.weights.branch1 == 0.1);
  CHECK(c.weights.final_depth == 0.8);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parsing keys, comments and lists") {
  const TrainConfig c = parse_config(
      "# toy run\n"
      "epochs = 6\n"
      "lr_switch_epoch=3   # half\n"
      "\n"
      "stage_channels=4,8,8,8\n"
      "enable_gl=false\n"
      "weight_final=0.5\n"
      "data_dir=/tmp/x y\n");
  CHECK(c.epochs == 6);
  CHECK(c.lr_switch_epoch == 3);
  CHECK(c.stage_channels == std::vector<int>{4, 8, 8, 8});
  CHECK_FALSE(c.enable_gl);
  CHECK(c.loss_weights().gradient == 0.0);
  CHECK(c.weights.final_depth == 0.5);
  CHECK(c.data_dir == "/tmp/x y");
}

TEST_CASE("malformed input is a config error") {
  CHECK_THROWS_AS(parse_config("no_such_key=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs=ten\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("epochs=3x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("enable_br=maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("stage_channels=4,,8\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/dualcube.cfg"), ConfigError);
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(parse_config("width=100\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("enable_branch2=0\n").validate(), ConfigError);
  CHECK_NOTHROW(parse_config("enable_branch2=0\nenable_br=0\n").validate());
  CHECK_THROWS_AS(parse_config("epochs=0\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("fuse_stages=1,2,1,1\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("br_deconv_kernel=3\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("weight_branch1=-0.1\n").validate(), ConfigError);
}

TEST_CASE("canonical text round trips") {
  TrainConfig c = parse_config("epochs=7\nseed=99\nbr_channels=2,3,4,5,6\nlr_phase2=3.3e-5\nout=here\n");
  const TrainConfig back = parse_config(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.lr_phase2 == c.lr_phase2);

  const std::filesystem::path path = std::filesystem::temp_directory_path() / "dualcube_test_config.cfg";
  std::ofstream(path) << c.to_text();
  CHECK(load_config(path.string()).to_text() == c.to_text());
}

TEST_CASE("architecture hash tracks only architecture keys") {
  const TrainConfig a;
  TrainConfig b = a;
  b.epochs = 3;
  b.seed = 17;
  b.lr_phase1 = 1.0;
  CHECK(a.arch_hash() == b.arch_hash());
  CHECK(a.arch_hash().size() == 16);
  b.stage_channels[0] = 8;
  CHECK(a.arch_hash() != b.arch_hash());
  TrainConfig d = a;
  d.phi_deg = 30;
  CHECK(a.arch_hash() != d.arch_hash());
}

TEST_CASE("model config mirrors the toggles") {
  TrainConfig c = parse_config("enable_branch2=0\nenable_br=0\nphi_deg=90\n");
  const ModelConfig m = c.model();
  CHECK_FALSE(m.dcde.dual);
  CHECK_FALSE(m.use_br);
  CHECK(m.dcde.phi == doctest::Approx(std::numbers::pi / 2));
}

}  // TEST_SUITE
