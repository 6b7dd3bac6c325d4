#include "dualcube/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "dualcube/depth_io.hpp"
#include "dualcube/error.hpp"
#include "dualcube/scene.hpp"

namespace dualcube {

namespace fs = std::filesystem;

const std::vector<Sample>& Dataset::split(const std::string& which) const {
  static const std::vector<Sample> empty;
  const auto it = splits.find(which);
  return it == splits.end() ? empty : it->second;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t split_tag(const std::string& split) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : split) h = (h ^ ch) * 1099511628211ULL;
  return h;
}

}  // namespace

std::uint64_t scene_seed(std::uint64_t base, const std::string& split, int index) {
  return splitmix(splitmix(base ^ split_tag(split)) + std::uint64_t(index));
}

Dataset make_synthetic_dataset(const SyntheticOptions& opts) {
  if (opts.width <= 0 || opts.width % 8 != 0) throw ConfigError("synthetic width must be a positive multiple of 8");
  if (opts.train < 0 || opts.val < 0 || opts.test < 0) throw ConfigError("split sizes must be non-negative");
  Dataset data;
  data.name = "synthetic";
  const std::pair<std::string, int> sizes[] = {{"train", opts.train}, {"val", opts.val}, {"test", opts.test}};
  for (const auto& [split, count] : sizes) {
    auto& out = data.splits[split];
    out.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
      const std::uint64_t seed = scene_seed(opts.seed, split, i);
      SceneRender r = synth_scene(random_scene(seed), opts.width);
      out.push_back({split + "_" + std::to_string(i), std::move(r.rgb), std::move(r.depth), std::move(r.mask)});
    }
  }
  return data;
}

Dataset load_directory_dataset(const std::string& root, const std::string& name) {
  if (!fs::is_directory(root)) throw DataError("dataset directory not found: " + root);
  Dataset data;
  data.name = name;
  for (const std::string& split : kSplitNames) {
    const fs::path list = fs::path(root) / (split + ".txt");
    if (!fs::exists(list)) continue;
    std::ifstream in(list);
    if (!in) throw DataError("cannot read " + list.string());
    auto& out = data.splits[split];
    std::string stem;
    while (std::getline(in, stem)) {
      while (!stem.empty() && (stem.back() == '\r' || stem.back() == ' ')) stem.pop_back();
      if (stem.empty() || stem[0] == '#') continue;
      Sample s;
      s.stem = stem;
      s.rgb = load_rgb_png((fs::path(root) / "rgb" / (stem + ".png")).string());
      const fs::path pfm = fs::path(root) / "depth" / (stem + ".pfm");
      const fs::path png = fs::path(root) / "depth" / (stem + ".png");
      if (fs::exists(pfm)) {
        s.depth = load_pfm(pfm.string());
      } else if (fs::exists(png)) {
        s.depth = load_depth_png16(png.string());
      } else {
        throw DataError("no depth map for " + stem);
      }
      const Shape& rs = s.rgb.shape();
      const Shape& ds = s.depth.shape();
      if (rs.h != ds.h || rs.w != ds.w) throw DataError("rgb and depth extents differ for " + stem);
      if (rs.w % 8 != 0 || rs.h * 2 != rs.w) throw DataError("panorama must be 2:1 with W divisible by 8: " + stem);
      s.mask = filter_valid(s.depth);
      out.push_back(std::move(s));
    }
  }
  return data;
}

void save_directory_dataset(const std::string& root, const Dataset& data) {
  fs::create_directories(fs::path(root) / "rgb");
  fs::create_directories(fs::path(root) / "depth");
  for (const auto& [split, samples] : data.splits) {
    std::ofstream list(fs::path(root) / (split + ".txt"), std::ios::trunc);
    if (!list) throw DataError("cannot write split list in " + root);
    for (const Sample& s : samples) {
      save_rgb_png((fs::path(root) / "rgb" / (s.stem + ".png")).string(), s.rgb);
      save_pfm((fs::path(root) / "depth" / (s.stem + ".pfm")).string(), s.depth);
      list << s.stem << "\n";
    }
  }
}

Batch make_batch(const std::vector<Sample>& samples, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw DataError("empty batch");
  std::vector<const TensorD*> rgb, depth;
  std::vector<const ValidMask*> masks;
  for (std::size_t i : indices) {
    if (i >= samples.size()) throw DataError("batch index out of range");
    rgb.push_back(&samples[i].rgb);
    depth.push_back(&samples[i].depth);
    masks.push_back(&samples[i].mask);
  }
  return {concat_batch(rgb.data(), int(rgb.size())), concat_batch(depth.data(), int(depth.size())),
          stack_masks(masks)};
}

}  // namespace dualcube
