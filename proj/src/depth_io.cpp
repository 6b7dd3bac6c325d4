#include "dualcube/depth_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <vector>

#include "binio.hpp"

namespace dualcube {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Header token parser that knows its byte offset.
class HeaderCursor {
 public:
  explicit HeaderCursor(const std::string& bytes) : b_(bytes) {}

  void skip_space() {
    while (pos_ < b_.size() && std::isspace(static_cast<unsigned char>(b_[pos_]))) ++pos_;
  }
  std::string token(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < b_.size() && !std::isspace(static_cast<unsigned char>(b_[pos_]))) ++pos_;
    if (start == pos_) throw FormatError(std::string("PFM: missing ") + what, start);
    return b_.substr(start, pos_ - start);
  }
  long integer(const char* what) {
    skip_space();
    const std::size_t at = pos_;
    const std::string t = token(what);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (*end != '\0' || v <= 0) throw FormatError(std::string("PFM: bad ") + what, at);
    return v;
  }
  double real(const char* what) {
    skip_space();
    const std::size_t at = pos_;
    const std::string t = token(what);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (*end != '\0' || v == 0.0 || !std::isfinite(v)) throw FormatError(std::string("PFM: bad ") + what, at);
    return v;
  }
  // Exactly one whitespace byte separates the header from the raster.
  void end_header() {
    if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_]))) {
      throw FormatError("PFM: header not terminated", pos_);
    }
    ++pos_;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

void require_depth(const TensorD& depth, const char* what) {
  const Shape& s = depth.shape();
  if (s.n != 1 || s.c != 1 || s.h <= 0 || s.w <= 0) {
    throw DimensionError(std::string(what) + ": expected a (1, 1, H, W) map, got " + s.str());
  }
}

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decoded PNG rows, 8 or 16 bits per sample, big-endian 16-bit samples as libpng gives them.
struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<unsigned char> data;
};

PngImage read_png(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw DataError("cannot open " + path);
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError("not a PNG file: " + path, 0);
  }
  PngReadGuard g;
  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!g.png) throw DataError("libpng init failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) throw DataError("libpng init failed");
  PngImage img;
  if (setjmp(png_jmpbuf(g.png))) throw FormatError("corrupt PNG data: " + path, std::size_t(std::ftell(f.get())));
  png_init_io(g.png, f.get());
  png_set_sig_bytes(g.png, 8);
  png_read_info(g.png, g.info);
  if (png_get_color_type(g.png, g.info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(g.png);
  if (png_get_bit_depth(g.png, g.info) < 8) png_set_expand(g.png);
  png_read_update_info(g.png, g.info);
  img.width = int(png_get_image_width(g.png, g.info));
  img.height = int(png_get_image_height(g.png, g.info));
  img.channels = int(png_get_channels(g.png, g.info));
  img.bit_depth = int(png_get_bit_depth(g.png, g.info));
  const std::size_t stride = png_get_rowbytes(g.png, g.info);
  img.data.resize(stride * std::size_t(img.height));
  std::vector<png_bytep> rows(std::size_t(img.height));
  for (int y = 0; y < img.height; ++y) rows[std::size_t(y)] = img.data.data() + stride * std::size_t(y);
  png_read_image(g.png, rows.data());
  png_read_end(g.png, nullptr);
  return img;
}

void write_png(const std::string& path, int width, int height, int color_type, int bit_depth,
               const std::vector<unsigned char>& data) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw DataError("cannot write " + path);
  PngWriteGuard g;
  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!g.png) throw DataError("libpng init failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) throw DataError("libpng init failed");
  if (setjmp(png_jmpbuf(g.png))) throw DataError("PNG write failed: " + path);
  png_init_io(g.png, f.get());
  png_set_IHDR(g.png, g.info, png_uint_32(width), png_uint_32(height), bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(g.png, g.info);
  const std::size_t stride = data.size() / std::size_t(height);
  for (int y = 0; y < height; ++y) {
    png_write_row(g.png, const_cast<png_bytep>(data.data() + stride * std::size_t(y)));
  }
  png_write_end(g.png, nullptr);
}

}  // namespace

void save_pfm(const std::string& path, const TensorD& depth) {
  require_depth(depth, "save_pfm");
  const Shape& s = depth.shape();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << "Pf\n" << s.w << " " << s.h << "\n-1.0\n";
  for (int y = s.h - 1; y >= 0; --y) {
    for (int x = 0; x < s.w; ++x) binio::put<float>(out, float(depth(0, 0, y, x)));
  }
  if (!out) throw DataError("failed writing " + path);
}

TensorD load_pfm(const std::string& path) {
  const std::string bytes = read_file(path);
  HeaderCursor cur(bytes);
  const std::string magic = cur.token("magic");
  if (magic == "PF") throw FormatError("PFM: only single-channel (Pf) maps are supported", 0);
  if (magic != "Pf") throw FormatError("PFM: bad magic", 0);
  const long width = cur.integer("width");
  const long height = cur.integer("height");
  const double scale = cur.real("scale");
  cur.end_header();
  const bool little = scale < 0.0;
  const std::size_t start = cur.pos();
  const std::size_t need = std::size_t(width) * std::size_t(height) * 4;
  if (bytes.size() - start < need) throw FormatError("PFM: truncated raster", bytes.size());
  TensorD depth(Shape{1, 1, int(height), int(width)});
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + start;
  const bool swap = little != (std::endian::native == std::endian::little);
  for (long row = 0; row < height; ++row) {
    const long y = height - 1 - row;
    for (long x = 0; x < width; ++x, p += 4) {
      unsigned char b[4] = {p[0], p[1], p[2], p[3]};
      if (swap) {
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
      }
      float v;
      std::memcpy(&v, b, 4);
      depth(0, 0, int(y), int(x)) = v;
    }
  }
  return depth;
}

void save_depth_png16(const std::string& path, const TensorD& depth) {
  require_depth(depth, "save_depth_png16");
  const Shape& s = depth.shape();
  std::vector<unsigned char> data(std::size_t(s.w) * s.h * 2);
  for (Index i = 0; i < depth.size(); ++i) {
    const double v = std::isfinite(depth[i]) ? depth[i] : 0.0;
    const auto q = std::uint16_t(std::clamp(std::lround(v * kPngDepthUnitsPerMeter), 0L, 65535L));
    data[std::size_t(2 * i)] = static_cast<unsigned char>(q >> 8);
    data[std::size_t(2 * i + 1)] = static_cast<unsigned char>(q & 0xff);
  }
  write_png(path, s.w, s.h, PNG_COLOR_TYPE_GRAY, 16, data);
}

TensorD load_depth_png16(const std::string& path) {
  const PngImage img = read_png(path);
  if (img.channels != 1 || img.bit_depth != 16) {
    throw FormatError("depth PNG must be 16-bit grayscale: " + path, 0);
  }
  TensorD depth(Shape{1, 1, img.height, img.width});
  for (Index i = 0; i < depth.size(); ++i) {
    const unsigned q = (unsigned(img.data[std::size_t(2 * i)]) << 8) | img.data[std::size_t(2 * i + 1)];
    depth[i] = q / kPngDepthUnitsPerMeter;
  }
  return depth;
}

TensorD load_rgb_png(const std::string& path) {
  const PngImage img = read_png(path);
  if (img.channels < 3) throw FormatError("expected an RGB PNG: " + path, 0);
  TensorD rgb(Shape{1, 3, img.height, img.width});
  const int bytes = img.bit_depth / 8;
  const double maxv = bytes == 2 ? 65535.0 : 255.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const std::size_t at = ((std::size_t(y) * img.width + x) * img.channels + c) * bytes;
        const unsigned v = bytes == 2 ? (unsigned(img.data[at]) << 8) | img.data[at + 1] : img.data[at];
        rgb(0, c, y, x) = v / maxv;
      }
    }
  }
  return rgb;
}

void save_rgb_png(const std::string& path, const TensorD& rgb) {
  const Shape& s = rgb.shape();
  if (s.n != 1 || s.c != 3) throw DimensionError("save_rgb_png: expected (1, 3, H, W), got " + s.str());
  std::vector<unsigned char> data(std::size_t(s.w) * s.h * 3);
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(rgb(0, c, y, x), 0.0, 1.0);
        data[(std::size_t(y) * s.w + x) * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
  }
  write_png(path, s.w, s.h, PNG_COLOR_TYPE_RGB, 8, data);
}

void save_colorized_depth(const std::string& path, const TensorD& depth, double* min_out, double* max_out) {
  require_depth(depth, "save_colorized_depth");
  const double lo = depth.array().minCoeff();
  const double hi = depth.array().maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  TensorD rgb(Shape{1, 3, depth.shape().h, depth.shape().w});
  for (int y = 0; y < depth.shape().h; ++y) {
    for (int x = 0; x < depth.shape().w; ++x) {
      const double t = (depth(0, 0, y, x) - lo) / span;
      // Blue (near) through green to red (far).
      rgb(0, 0, y, x) = std::clamp(1.5 - std::abs(4.0 * t - 3.0), 0.0, 1.0);
      rgb(0, 1, y, x) = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
      rgb(0, 2, y, x) = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
    }
  }
  save_rgb_png(path, rgb);
  if (min_out) *min_out = lo;
  if (max_out) *max_out = hi;
}

}  // namespace dualcube
